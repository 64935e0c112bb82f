//! Release streams from task sets, fault injection, and random task sets.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::JobRelease;
use crate::model::{JobType, Task, TaskSet, TaskSetError};
use crate::time::Tick;
use crate::trace::{Arrival, ArrivalModel};

/// One injected fault, addressed by task name and 0-based instance index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Fault {
    /// Demand `max(C + 1, ceil(C * factor))`, capped at `HC` for HI tasks.
    OverrunC { task: String, instance: usize, factor: f64 },
    /// Demand set explicitly above `HC`.
    #[serde(rename = "overrun_hc")]
    OverrunHc { task: String, instance: usize, demand: Tick },
    /// Arrive `shift` ticks before the earliest time the arrival model allows.
    EarlyArrival { task: String, instance: usize, shift: Tick },
}

impl Fault {
    pub fn task(&self) -> &str {
        match self {
            Fault::OverrunC { task, .. } | Fault::OverrunHc { task, .. } | Fault::EarlyArrival { task, .. } => task,
        }
    }

    pub fn instance(&self) -> usize {
        match self {
            Fault::OverrunC { instance, .. }
            | Fault::OverrunHc { instance, .. }
            | Fault::EarlyArrival { instance, .. } => *instance,
        }
    }
}

/// How fault-free demands are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandModel {
    /// Uniform over `[ceil(C/2), C]`.
    #[default]
    Uniform,
    /// Always exactly `C`.
    Wcet,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkloadSpec {
    pub taskset: TaskSet,
    /// Nominal releases at or after this time are not generated.
    pub horizon: Tick,
    pub seed: u64,
    pub faults: Vec<Fault>,
    pub demand_model: DemandModel,
}

impl WorkloadSpec {
    pub fn new(taskset: TaskSet, horizon: Tick, seed: u64) -> Self {
        WorkloadSpec {
            taskset,
            horizon,
            seed,
            ..WorkloadSpec::default()
        }
    }

    pub fn arrival_model(&self) -> ArrivalModel {
        self.taskset.arrival_model()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid task set: {}", join(.0))]
    TaskSet(Vec<TaskSetError>),
    #[error("fault names unknown task {0:?}")]
    UnknownTask(String),
    #[error("fault on {task:?} instance {instance}: only {count} instances are generated")]
    InstanceOutOfRange { task: String, instance: usize, count: usize },
    #[error("fault on {task:?} instance {instance}: {reason}")]
    InvalidFault { task: String, instance: usize, reason: String },
    #[error("invalid generator parameters: {0}")]
    Parameters(String),
    #[error("no task set within 5% of utilization {target} after {attempts} attempts")]
    TargetMissed { target: f64, attempts: usize },
}

fn join(errs: &[TaskSetError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn invalid(fault: &Fault, reason: impl Into<String>) -> WorkloadError {
    WorkloadError::InvalidFault {
        task: fault.task().to_owned(),
        instance: fault.instance(),
        reason: reason.into(),
    }
}

fn draw_demand(rng: &mut ChaCha8Rng, model: DemandModel, c: Tick) -> Tick {
    match model {
        DemandModel::Wcet => c,
        DemandModel::Uniform => {
            let lo = c.get().div_ceil(2).max(1);
            Tick(rng.random_range(lo..=c.get()))
        }
    }
}

/// Per-task stream of `(release, demand)` before demand faults.
fn task_stream(
    task: &Task,
    index: usize,
    spec: &WorkloadSpec,
    early: &BTreeMap<usize, &Fault>,
) -> Result<Vec<(Tick, Tick)>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let c = task.job_type.wcet;
    let mut out: Vec<(Tick, Tick)> = Vec::new();
    match task.arrival {
        Arrival::Periodic { period, jitter } => {
            let j = jitter.get() as i64;
            let mut k = 0u64;
            while period * k < spec.horizon {
                let nominal = period * k;
                let offset = if j > 0 { rng.random_range(-j..=j) } else { 0 };
                let release = match early.get(&(k as usize)) {
                    Some(f @ Fault::EarlyArrival { shift, .. }) => {
                        let at = nominal.get() as i64 - j - shift.get() as i64;
                        if at < 0 {
                            return Err(invalid(f, format!("release would be negative ({at})")));
                        }
                        Tick(at as u64)
                    }
                    _ => {
                        let prev = out.last().map_or(Tick::ZERO, |r| r.0);
                        nominal.offset(offset).max(prev)
                    }
                };
                out.push((release, draw_demand(&mut rng, spec.demand_model, c)));
                k += 1;
            }
        }
        Arrival::Sporadic { min_gap } => {
            let mut release = Tick::ZERO;
            while release < spec.horizon {
                let k = out.len();
                if k > 0 {
                    let prev = out[k - 1].0;
                    let slack = rng.random_range(0..=min_gap.get() / 2);
                    release = match early.get(&k) {
                        Some(f @ Fault::EarlyArrival { shift, .. }) => {
                            if *shift > min_gap {
                                return Err(invalid(f, "shift exceeds min_gap"));
                            }
                            prev + min_gap - *shift
                        }
                        _ => prev + min_gap + Tick(slack),
                    };
                    if release >= spec.horizon {
                        break;
                    }
                }
                out.push((release, draw_demand(&mut rng, spec.demand_model, c)));
            }
        }
    }
    Ok(out)
}

/// Deterministic release stream for `spec`, faults applied, sorted by
/// release time (ties in task order).
pub fn generate_releases(spec: &WorkloadSpec) -> Result<Vec<JobRelease>, WorkloadError> {
    spec.taskset.validate().map_err(WorkloadError::TaskSet)?;
    let mut by_task: BTreeMap<&str, Vec<&Fault>> = BTreeMap::new();
    for f in &spec.faults {
        if spec.taskset.get(f.task()).is_none() {
            return Err(WorkloadError::UnknownTask(f.task().to_owned()));
        }
        by_task.entry(f.task()).or_default().push(f);
    }

    let mut all = Vec::new();
    for (index, task) in spec.taskset.tasks.iter().enumerate() {
        let faults = by_task.remove(task.name()).unwrap_or_default();
        let mut early = BTreeMap::new();
        for f in &faults {
            if let Fault::EarlyArrival { shift, instance, .. } = f {
                if shift.is_zero() {
                    return Err(invalid(f, "shift must be positive"));
                }
                if matches!(task.arrival, Arrival::Sporadic { .. }) && *instance == 0 {
                    return Err(invalid(f, "the first sporadic arrival has no predecessor"));
                }
                early.insert(*instance, *f);
            }
        }
        let mut stream = task_stream(task, index, spec, &early)?;
        for f in &faults {
            let count = stream.len();
            let Some(slot) = stream.get_mut(f.instance()) else {
                return Err(WorkloadError::InstanceOutOfRange {
                    task: f.task().to_owned(),
                    instance: f.instance(),
                    count,
                });
            };
            let jt = &task.job_type;
            match f {
                Fault::OverrunC { factor, .. } => {
                    if !(factor.is_finite() && *factor > 1.0) {
                        return Err(invalid(f, "factor must be greater than 1"));
                    }
                    let c = jt.wcet.get();
                    let scaled = (c as f64 * factor).ceil() as u64;
                    let mut demand = scaled.max(c + 1);
                    if let Some(x) = &jt.hi {
                        demand = demand.min(x.hc.get());
                    }
                    slot.1 = Tick(demand);
                }
                Fault::OverrunHc { demand, .. } => match &jt.hi {
                    None => return Err(invalid(f, "task is not HI-crit")),
                    Some(x) if *demand <= x.hc => return Err(invalid(f, "demand must exceed HC")),
                    Some(_) => slot.1 = *demand,
                },
                Fault::EarlyArrival { .. } => {}
            }
        }
        let jt = Arc::new(task.job_type.clone());
        all.extend(stream.into_iter().map(|(release, demand)| JobRelease {
            job_type: jt.clone(),
            release,
            demand,
        }));
    }
    all.sort_by_key(|r| r.release);
    Ok(all)
}

/// External time by which every generated job should have drained.
pub fn drain_horizon(spec: &WorkloadSpec, releases: &[JobRelease]) -> Tick {
    let last = releases.iter().map(|r| r.release).max().unwrap_or_default();
    let deadline = spec
        .taskset
        .tasks
        .iter()
        .map(|t| t.job_type.real_deadline())
        .max()
        .unwrap_or_default();
    let demand = releases.iter().map(|r| r.demand).max().unwrap_or_default();
    spec.horizon.max(last + deadline * 2 + demand)
}

/// Periods used by [`random_taskset`]; all divide 2000.
pub const PERIODS: [u64; 14] = [10, 20, 25, 40, 50, 80, 100, 125, 200, 250, 400, 500, 1000, 2000];

const ATTEMPTS: usize = 1000;

/// Random constrained-deadline task set with utilization within 5% of
/// `target`. A `hi_fraction` share of the tasks (rounded) is HI-crit.
pub fn random_taskset(seed: u64, n: usize, target: f64, hi_fraction: f64) -> Result<TaskSet, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::Parameters("at least one task is required".into()));
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(WorkloadError::Parameters(format!("target utilization {target} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&hi_fraction) {
        return Err(WorkloadError::Parameters(format!("hi_fraction {hi_fraction} outside [0, 1]")));
    }
    let n_hi = (hi_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..ATTEMPTS {
        // UUniFast
        let mut us = Vec::with_capacity(n);
        let mut sum = target;
        for i in 1..n {
            let next = sum * rng.random::<f64>().powf(1.0 / (n - i) as f64);
            us.push(sum - next);
            sum = next;
        }
        us.push(sum);

        let mut tasks = Vec::with_capacity(n);
        let mut total = 0.0;
        for (i, u) in us.into_iter().enumerate() {
            let t = PERIODS[rng.random_range(0..PERIODS.len())];
            let c = ((u * t as f64).round() as u64).max(1);
            let hi = i < n_hi;
            if c >= t || (hi && c + 1 >= t) {
                continue 'attempt;
            }
            total += c as f64 / t as f64;
            let name = format!("T{}", i + 1);
            let min_d = if hi { c + 2 } else { c };
            let d = if rng.random_bool(0.5) { t } else { rng.random_range(min_d..=t) };
            let job_type = if hi {
                let dv = rng.random_range(c..d);
                let hc = rng.random_range(c + 1..=(2 * c).min(d).max(c + 1));
                JobType::hi(name, dv, c, d - dv, hc)
            } else {
                JobType::lo(name, d, c)
            };
            let arrival = match rng.random_range(0..3) {
                0 => Arrival::sporadic(t),
                1 => Arrival::periodic(t, rng.random_range(0..=t / 20)),
                _ => Arrival::periodic(t, 0),
            };
            tasks.push(Task::new(job_type, arrival));
        }
        if (total - target).abs() <= 0.05 * target {
            return Ok(TaskSet::new(tasks));
        }
    }
    Err(WorkloadError::TargetMissed {
        target,
        attempts: ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::check_arrival_assumption;

    fn spec(tasks: Vec<Task>, horizon: u64) -> WorkloadSpec {
        WorkloadSpec::new(TaskSet::new(tasks), Tick(horizon), 42)
    }

    fn releases_of(rs: &[JobRelease], name: &str) -> Vec<u64> {
        rs.iter()
            .filter(|r| r.job_type.name == name)
            .map(|r| r.release.get())
            .collect()
    }

    #[test]
    fn periodic_without_jitter() {
        let s = spec(vec![Task::new(JobType::lo("A", 10, 4), Arrival::periodic(10, 0))], 30);
        let rs = generate_releases(&s).unwrap();
        assert_eq!(releases_of(&rs, "A"), vec![0, 10, 20]);
        assert!(rs.iter().all(|r| (2..=4).contains(&r.demand.get())));
    }

    #[test]
    fn jitter_stays_in_window() {
        let s = spec(vec![Task::new(JobType::lo("A", 20, 4), Arrival::periodic(20, 3))], 400);
        for (k, r) in releases_of(&generate_releases(&s).unwrap(), "A").into_iter().enumerate() {
            assert!((r as i64 - 20 * k as i64).abs() <= 3);
        }
    }

    #[test]
    fn sporadic_early_arrival_breaks_min_gap() {
        let mut s = spec(vec![Task::new(JobType::lo("S", 10, 2), Arrival::sporadic(10))], 100);
        let clean = generate_releases(&s).unwrap();
        s.faults.push(Fault::EarlyArrival {
            task: "S".into(),
            instance: 1,
            shift: Tick(4),
        });
        let rs = releases_of(&generate_releases(&s).unwrap(), "S");
        assert_eq!(rs[1] - rs[0], 6);
        assert_eq!(rs[0], releases_of(&clean, "S")[0]);
    }

    #[test]
    fn early_arrival_validation() {
        let mut s = spec(vec![Task::new(JobType::lo("S", 10, 2), Arrival::sporadic(10))], 100);
        s.faults.push(Fault::EarlyArrival {
            task: "S".into(),
            instance: 0,
            shift: Tick(1),
        });
        assert!(matches!(generate_releases(&s), Err(WorkloadError::InvalidFault { .. })));

        let mut p = spec(vec![Task::new(JobType::lo("P", 10, 2), Arrival::periodic(10, 0))], 100);
        p.faults.push(Fault::EarlyArrival {
            task: "P".into(),
            instance: 0,
            shift: Tick(1),
        });
        assert!(matches!(generate_releases(&p), Err(WorkloadError::InvalidFault { .. })));
    }

    #[test]
    fn overrun_c_on_hi_stays_within_hc() {
        let mut s = spec(
            vec![Task::new(JobType::hi("H", 20, 10, 5, 20), Arrival::periodic(40, 0))],
            100,
        );
        for factor in [1.01, 1.5, 3.0] {
            s.faults = vec![Fault::OverrunC {
                task: "H".into(),
                instance: 1,
                factor,
            }];
            let rs = generate_releases(&s).unwrap();
            let d = rs[1].demand.get();
            assert!(d > 10 && d <= 20, "{d}");
        }
    }

    #[test]
    fn fault_validation() {
        let mut s = spec(vec![Task::new(JobType::lo("A", 10, 4), Arrival::periodic(10, 0))], 30);
        s.faults = vec![Fault::OverrunC {
            task: "A".into(),
            instance: 3,
            factor: 2.0,
        }];
        assert!(matches!(
            generate_releases(&s),
            Err(WorkloadError::InstanceOutOfRange { count: 3, .. })
        ));
        s.faults = vec![Fault::OverrunC {
            task: "Z".into(),
            instance: 0,
            factor: 2.0,
        }];
        assert!(matches!(generate_releases(&s), Err(WorkloadError::UnknownTask(_))));
        s.faults = vec![Fault::OverrunHc {
            task: "A".into(),
            instance: 0,
            demand: Tick(9),
        }];
        assert!(matches!(generate_releases(&s), Err(WorkloadError::InvalidFault { .. })));
    }

    #[test]
    fn fault_free_streams_honor_the_arrival_model() {
        use crate::engine::{Engine, EngineConfig};
        for seed in 0..20 {
            let ts = random_taskset(seed, 4, 0.6, 0.5).unwrap();
            let s = WorkloadSpec::new(ts, Tick(2000), seed);
            let rs = generate_releases(&s).unwrap();
            assert!(rs.iter().all(|r| r.demand <= r.job_type.wcet));
            let mut e = Engine::with_releases(EngineConfig::default(), rs).unwrap();
            e.run(Tick(2000)).unwrap();
            assert!(check_arrival_assumption(e.trace(), &s.arrival_model()).passed());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let ts = random_taskset(9, 5, 0.7, 0.4).unwrap();
        let s = WorkloadSpec::new(ts, Tick(1000), 3);
        assert_eq!(generate_releases(&s).unwrap(), generate_releases(&s).unwrap());
    }

    #[test]
    fn random_taskset_examples() {
        let one = random_taskset(1, 1, 0.5, 0.0).unwrap();
        let t = &one.tasks[0];
        let u = t.job_type.wcet.get() as f64 / t.period().get() as f64;
        assert!((u - 0.5).abs() <= 0.025);

        let none = random_taskset(2, 6, 0.8, 0.0).unwrap();
        assert!(none.tasks.iter().all(|t| !t.job_type.is_hi()));

        assert_eq!(random_taskset(3, 4, 0.9, 0.5).unwrap(), random_taskset(3, 4, 0.9, 0.5).unwrap());
        assert!(random_taskset(3, 0, 0.5, 0.0).is_err());
        assert!(random_taskset(3, 2, 1.5, 0.0).is_err());
    }

    #[test]
    fn random_hi_tasks_are_well_formed() {
        for seed in 0..50 {
            let ts = random_taskset(seed, 5, 0.7, 0.6).unwrap();
            ts.validate().unwrap();
            assert!(ts.hyperperiod().unwrap() <= 2000);
            for t in ts.tasks.iter().filter(|t| t.job_type.is_hi()) {
                let x = t.job_type.hi.as_ref().unwrap();
                assert!(x.hc > t.job_type.wcet && x.hc <= t.job_type.wcet * 2);
                assert!(t.job_type.real_deadline() <= t.period());
            }
        }
    }
}
