mod common;

use common::{edf_workload, ft_config, simulate};
use rg_sched::engine::{EngineConfig, LoOverrunPolicy};
use rg_sched::model::{JobType, Task, TaskSet};
use rg_sched::monitor::{self, Classification, ModeUpRule};
use rg_sched::planner::{edf_schedulability, PlanConfig};
use rg_sched::time::Tick;
use rg_sched::trace::{self, job_lives, Arrival, EventKind};
use rg_sched::verdict::Status;
use rg_sched::workload::{DemandModel, Fault, WorkloadSpec};

fn spec(tasks: Vec<Task>, horizon: u64, faults: Vec<Fault>) -> WorkloadSpec {
    let mut s = WorkloadSpec::new(TaskSet::new(tasks), Tick(horizon), 11);
    s.faults = faults;
    s.demand_model = DemandModel::Wcet;
    s
}

fn mixed(faults: Vec<Fault>) -> WorkloadSpec {
    spec(
        vec![
            Task::new(JobType::hi("H", 7, 2, 3, 5), Arrival::periodic(10, 0)),
            Task::new(JobType::lo("L", 20, 5), Arrival::periodic(20, 0)),
        ],
        60,
        faults,
    )
}

fn status(report: &monitor::Report, name: &str) -> Status {
    report.verdict(name).unwrap_or_else(|| panic!("no {name}")).status
}

#[test]
fn hi_overrun_within_hc_switches_mode_and_passes() {
    let s = mixed(vec![Fault::OverrunC {
        task: "H".into(),
        instance: 1,
        factor: 2.0,
    }]);
    let (trace, report) = simulate(&s, &ft_config());
    assert_eq!(report.classification, Classification::Pass, "{report:#?}");
    let down = trace.samples().iter().find(|s| s.has_event(EventKind::ModeDown)).unwrap();
    assert_eq!(down.alpha, Tick(12));
    assert!(trace.samples().iter().any(|s| s.has_event(EventKind::ModeUp)));
    // the Normal-mode invariant is informational here and does not hold in Ft
    assert_eq!(status(&report, monitor::INV_STATE), Status::Fail);
    assert_eq!(status(&report, monitor::INV_STATE_FT), Status::Pass);
    assert_eq!(status(&report, monitor::MODE_DOWN_TRIGGER), Status::Pass);
}

#[test]
fn same_overrun_without_ft_breaks_the_rely() {
    let s = mixed(vec![Fault::OverrunC {
        task: "H".into(),
        instance: 1,
        factor: 2.0,
    }]);
    let (trace, report) = simulate(&s, &EngineConfig::default());
    assert!(!trace.samples().iter().any(|s| s.has_event(EventKind::ModeDown)));
    assert!(trace.samples().iter().any(|s| s.has_event(EventKind::Overrun)));
    assert_eq!(status(&report, monitor::RELY_SCHEDULER), Status::RelyBroken);
    assert_eq!(report.classification, Classification::RelyBroken);
    assert!(report.assumption_broken_at.is_some());
}

#[test]
fn lo_overrun_is_dropped_at_its_budget() {
    let s = mixed(vec![Fault::OverrunC {
        task: "L".into(),
        instance: 0,
        factor: 2.0,
    }]);
    let (trace, report) = simulate(&s, &ft_config());
    assert_eq!(report.classification, Classification::Pass, "{report:#?}");
    let lives = job_lives(&trace);
    let dropped: Vec<_> = lives.values().filter(|l| l.failed).collect();
    assert_eq!(dropped.len(), 1);
    assert_eq!(dropped[0].job_type.name, "L");
    assert!(!trace.samples().iter().any(|s| s.has_event(EventKind::ModeDown)));
}

#[test]
fn backgrounded_lo_overrun_breaks_only_the_rely() {
    let s = mixed(vec![Fault::OverrunC {
        task: "L".into(),
        instance: 0,
        factor: 2.0,
    }]);
    let cfg = EngineConfig {
        lo_overrun_policy: LoOverrunPolicy::Background,
        ..ft_config()
    };
    let (trace, report) = simulate(&s, &cfg);
    assert_eq!(status(&report, monitor::RELY_SCHEDULER_FT), Status::RelyBroken);
    assert_eq!(report.classification, Classification::RelyBroken, "{report:#?}");
    for l in job_lives(&trace).values().filter(|l| l.job_type.is_hi()) {
        assert!(l.met_deadline(Tick::ZERO), "{l:?}");
    }
}

#[test]
fn lo_only_remaining_returns_to_normal_early() {
    let faults = vec![Fault::OverrunC {
        task: "H".into(),
        instance: 0,
        factor: 2.0,
    }];
    let tasks = vec![
        Task::new(JobType::hi("H", 7, 2, 3, 5), Arrival::periodic(10, 0)),
        Task::new(JobType::lo("L", 40, 6), Arrival::periodic(40, 0)),
    ];
    let s = spec(tasks, 40, faults);
    let background = EngineConfig {
        lo_overrun_policy: LoOverrunPolicy::Background,
        ..ft_config()
    };
    let eager = EngineConfig {
        mode_up_rule: ModeUpRule::LoOnlyRemaining,
        ..background.clone()
    };
    let up_at = |cfg: &EngineConfig| {
        let (trace, report) = simulate(&s, cfg);
        let at = trace
            .samples()
            .iter()
            .find(|s| s.has_event(EventKind::ModeUp))
            .map(|s| s.alpha)
            .unwrap();
        (at, report)
    };
    let (early, report) = up_at(&eager);
    assert_eq!(early, Tick(4));
    assert_eq!(report.classification, Classification::Pass, "{report:#?}");

    // Waiting for an empty active set leaves the kept LO job idle in Ft mode
    // with nothing to run, which the Ft invariants reject.
    let (late, report) = up_at(&background);
    assert_eq!(late, Tick(40));
    assert_eq!(status(&report, monitor::INV_EDF_FT), Status::Fail);
    assert_eq!(report.classification, Classification::Fail);
}

#[test]
fn early_sporadic_arrival_breaks_the_arrival_assumption() {
    let tasks = vec![Task::new(JobType::lo("S", 10, 2), Arrival::sporadic(10))];
    let s = spec(
        tasks,
        50,
        vec![Fault::EarlyArrival {
            task: "S".into(),
            instance: 1,
            shift: Tick(4),
        }],
    );
    let (_, report) = simulate(&s, &EngineConfig::default());
    let a = report.verdict(trace::ARRIVAL_ASSUMPTION).unwrap();
    assert_eq!(a.status, Status::Fail);
    assert!(a.witness.as_ref().unwrap().message.contains("6 ticks"));
    assert_eq!(report.classification, Classification::RelyBroken);
}

/// With reaction latency the planner has to be told about it: each job may
/// wait `rho_s` after its arrival and leave the processor idle for `rho_s`
/// after its completion, and its deadline is read off a clock up to `rho` off.
#[test]
fn reaction_latency_within_planned_overhead() {
    let (rho, rho_s) = (1, 2);
    let plan = PlanConfig {
        switch_overhead: Tick(2 * rho_s + 2 * rho),
        ..PlanConfig::default()
    };
    let mut checked = 0;
    for seed in 1..400 {
        let Some(s) = edf_workload(seed) else { continue };
        if !edf_schedulability(&s.taskset, &plan).is_yes() {
            continue;
        }
        let cfg = EngineConfig {
            rho_s: Tick(rho_s),
            rho: Tick(rho),
            drift_seed: Some(seed),
            ..EngineConfig::default()
        };
        let (trace, report) = simulate(&s, &cfg);
        for l in job_lives(&trace).values() {
            assert!(l.met_deadline(Tick(rho_s)), "seed {seed}: {l:?}");
        }
        assert_eq!(report.classification, Classification::Pass, "seed {seed}: {report:#?}");
        checked += 1;
    }
    assert!(checked >= 50, "{checked}");
}

#[test]
fn monitor_report_is_deterministic() {
    let s = mixed(vec![Fault::OverrunHc {
        task: "H".into(),
        instance: 2,
        demand: Tick(8),
    }]);
    let (t1, r1) = simulate(&s, &ft_config());
    let (t2, r2) = simulate(&s, &ft_config());
    assert_eq!(t1, t2);
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
    assert_eq!(r1.classification, Classification::RelyBroken);
}
