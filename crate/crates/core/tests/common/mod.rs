#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rg_sched::engine::{Engine, EngineConfig};
use rg_sched::model::TaskSet;
use rg_sched::monitor::{check_trace, Report};
use rg_sched::planner::{edf_schedulability, edf_vd_plan, PlanConfig};
use rg_sched::time::Tick;
use rg_sched::trace::Trace;
use rg_sched::workload::{drain_horizon, generate_releases, random_taskset, DemandModel, WorkloadSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generates releases, runs the engine until everything drains and checks the trace.
pub fn simulate(spec: &WorkloadSpec, cfg: &EngineConfig) -> (Trace, Report) {
    let releases = generate_releases(spec).expect("valid workload");
    let horizon = drain_horizon(spec, &releases);
    let mut engine = Engine::with_releases(cfg.clone(), releases).expect("positive demands");
    engine.run(horizon).expect("engine run");
    let trace = engine.into_trace();
    let report = check_trace(&trace, &spec.arrival_model(), &cfg.monitor_config());
    (trace, report)
}

/// LO-only task set approved by the EDF test, released over one hyperperiod.
pub fn edf_workload(seed: u64) -> Option<WorkloadSpec> {
    let mut r = rng(seed);
    let n = r.random_range(1..=6);
    let target = r.random_range(0.2..0.95);
    let ts = random_taskset(seed, n, target, 0.0).ok()?;
    let h = ts.hyperperiod()?;
    if h > 10_000 || !edf_schedulability(&ts, &PlanConfig::default()).is_yes() {
        return None;
    }
    Some(WorkloadSpec::new(ts, Tick(h), seed))
}

/// Mixed-criticality task set approved by EDF-VD, with the planned virtual
/// deadlines, released over two hyperperiods with every job at its `C`.
pub fn vd_workload(seed: u64) -> Option<WorkloadSpec> {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.random_range(2..=6);
    let target = r.random_range(0.2..0.7);
    let ts = random_taskset(seed, n, target, 0.5).ok()?;
    let h = ts.hyperperiod()?;
    if h > 10_000 {
        return None;
    }
    let plan = edf_vd_plan(&ts, &PlanConfig::default());
    if !plan.verdict.is_yes() {
        return None;
    }
    let planned: TaskSet = plan.taskset?;
    let mut spec = WorkloadSpec::new(planned, Tick(2 * h), seed);
    spec.demand_model = DemandModel::Wcet;
    Some(spec)
}

pub fn ft_config() -> EngineConfig {
    EngineConfig {
        ft_enabled: true,
        ..EngineConfig::default()
    }
}

/// Number of releases a task gets in `spec` before any fault is applied.
pub fn instance_count(spec: &WorkloadSpec, task: &str) -> usize {
    let clean = WorkloadSpec {
        faults: Vec::new(),
        ..spec.clone()
    };
    generate_releases(&clean)
        .expect("valid workload")
        .iter()
        .filter(|r| r.job_type.name == task)
        .count()
}
