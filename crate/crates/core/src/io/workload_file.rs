//! The JSON workload file: task set, release horizon, seed, faults and
//! engine configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineConfig;
use crate::model::{Task, TaskSet};
use crate::time::Tick;
use crate::workload::{DemandModel, Fault, WorkloadSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    pub tasks: Vec<Task>,
    pub horizon: Tick,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<Fault>,
    #[serde(default)]
    pub demand_model: DemandModel,
    #[serde(default)]
    pub engine: EngineConfig,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InputError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl InputError {
    fn from_json(e: serde_json::Error) -> Self {
        InputError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl WorkloadFile {
    pub fn from_spec(spec: &WorkloadSpec, engine: EngineConfig) -> Self {
        WorkloadFile {
            tasks: spec.taskset.tasks.clone(),
            horizon: spec.horizon,
            seed: spec.seed,
            faults: spec.faults.clone(),
            demand_model: spec.demand_model,
            engine,
        }
    }

    pub fn spec(&self) -> WorkloadSpec {
        WorkloadSpec {
            taskset: TaskSet::new(self.tasks.clone()),
            horizon: self.horizon,
            seed: self.seed,
            faults: self.faults.clone(),
            demand_model: self.demand_model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload serializes")
    }
}

/// Parses and validates a workload document.
pub fn parse_workload(text: &str) -> Result<WorkloadFile, InputError> {
    let file: WorkloadFile = serde_json::from_str(text).map_err(InputError::from_json)?;
    if let Err(errs) = TaskSet::new(file.tasks.clone()).validate() {
        let msgs: Vec<String> = errs.iter().map(ToString::to_string).collect();
        return Err(InputError::Invalid(msgs.join("; ")));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "tasks": [
    {"name": "ctl", "D": 8, "C": 2, "hi": {"AD": 2, "HC": 4}, "arrival": {"periodic": {"period": 10, "jitter": 1}}},
    {"name": "log", "D": 20, "C": 5, "arrival": {"sporadic": {"min_gap": 20}}}
  ],
  "horizon": 100,
  "seed": 7,
  "faults": [
    {"overrun_c": {"task": "ctl", "instance": 2, "factor": 1.5}},
    {"overrun_hc": {"task": "ctl", "instance": 3, "demand": 6}},
    {"early_arrival": {"task": "log", "instance": 1, "shift": 4}}
  ],
  "engine": {"rho": 1, "rho_s": 0, "ft_enabled": true, "lo_overrun_policy": "background", "mode_up_rule": "lo_only_remaining"}
}"#;

    #[test]
    fn parses_every_section() {
        let f = parse_workload(SAMPLE).unwrap();
        assert_eq!(f.tasks.len(), 2);
        assert_eq!(f.tasks[0].job_type.real_deadline(), Tick(10));
        assert_eq!(f.faults.len(), 3);
        assert!(f.engine.ft_enabled);
        assert_eq!(f.engine.rho, Tick(1));
        let again = parse_workload(&f.to_json()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let err = parse_workload("{\n  \"tasks\": [,]\n}").unwrap_err();
        match err {
            InputError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_tasks_are_rejected() {
        let text = r#"{"tasks": [{"name": "a", "D": 4, "C": 5, "arrival": {"sporadic": {"min_gap": 10}}}], "horizon": 10}"#;
        let err = parse_workload(text).unwrap_err();
        assert!(err.to_string().contains("C <= D"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"tasks": [], "horizon": 10, "engine": {"rho": 0, "turbo": true}}"#;
        assert!(matches!(parse_workload(text), Err(InputError::Parse { .. })));
    }
}
