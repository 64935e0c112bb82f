//! Newline-delimited trace files.
//!
//! The first line is a header carrying `rho`, `rho_s` and the job types
//! referenced by name. Every following line is one sample. A job whose type
//! differs from the header entry of the same name carries it inline as `jt`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobId, JobInfo, JobType, Mode, State};
use crate::time::Tick;
use crate::trace::{Sample, Trace, TraceEvent};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    rho: Tick,
    rho_s: Tick,
    types: Vec<JobType>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActiveRecord {
    id: JobId,
    #[serde(rename = "type")]
    type_name: String,
    d: Tick,
    e: Tick,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jt: Option<JobType>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    alpha: Tick,
    t: Tick,
    mode: Mode,
    run: Option<JobId>,
    active: Vec<ActiveRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<TraceEvent>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceFileError {
    pub line: usize,
    pub message: String,
}

/// Renders a trace; the result ends with a newline.
pub fn render_trace(trace: &Trace) -> String {
    let types = trace.job_types();
    let header = Header {
        rho: trace.rho(),
        rho_s: trace.rho_s(),
        types: types.values().map(|t| (**t).clone()).collect(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for s in trace.samples() {
        let active = s
            .state
            .active()
            .iter()
            .map(|(id, info)| {
                let name = &info.job_type.name;
                ActiveRecord {
                    id: *id,
                    type_name: name.clone(),
                    d: info.deadline,
                    e: info.exec,
                    jt: (types.get(name) != Some(&info.job_type)).then(|| (*info.job_type).clone()),
                }
            })
            .collect();
        let rec = SampleRecord {
            alpha: s.alpha,
            t: s.state.t(),
            mode: s.state.mode(),
            run: s.state.run(),
            active,
            events: s.events.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceFileError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: String| TraceFileError { line: line + 1, message };
    let Some((n, first)) = lines.next() else {
        return Err(err(0, "missing header".into()));
    };
    let header: Header = serde_json::from_str(first).map_err(|e| err(n, e.to_string()))?;
    let mut types: BTreeMap<String, Arc<JobType>> = BTreeMap::new();
    for t in header.types {
        types.insert(t.name.clone(), Arc::new(t));
    }
    let mut trace = Trace::new(header.rho, header.rho_s);
    for (n, line) in lines {
        let rec: SampleRecord = serde_json::from_str(line).map_err(|e| err(n, e.to_string()))?;
        let mut active = BTreeMap::new();
        for a in rec.active {
            let jt = match a.jt {
                Some(jt) => Arc::new(jt),
                None => types
                    .get(&a.type_name)
                    .cloned()
                    .ok_or_else(|| err(n, format!("type {:?} not declared in header", a.type_name)))?,
            };
            active.insert(a.id, JobInfo::new(jt, a.d, a.e));
        }
        let state = State::new(rec.t, active, rec.run, rec.mode).map_err(|e| err(n, e.to_string()))?;
        let sample = Sample {
            alpha: rec.alpha,
            state,
            events: rec.events,
        };
        trace.push(sample).map_err(|e| err(n, e.to_string()))?;
    }
    Ok(trace)
}
