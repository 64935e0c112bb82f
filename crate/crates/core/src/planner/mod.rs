//! Pre-run-time schedulability analysis for EDF and EDF-VD, and an
//! exhaustive feasibility oracle for tiny job sets.

pub mod dbf;
pub mod oracle;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{HiCrit, Task, TaskSet};
use crate::time::Tick;

use self::dbf::{DbfTask, HiModeTask};

pub use self::oracle::{brute_force_feasible, Feasibility, OracleError, OracleJob};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedulable {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    UtilizationBound,
    DemandBound,
    BruteForce,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanVerdict {
    pub schedulable: Schedulable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub detail: String,
}

impl PlanVerdict {
    fn yes(method: Method, detail: impl Into<String>) -> Self {
        PlanVerdict {
            schedulable: Schedulable::Yes,
            method: Some(method),
            detail: detail.into(),
        }
    }

    fn no(method: Method, detail: impl Into<String>) -> Self {
        PlanVerdict {
            schedulable: Schedulable::No,
            method: Some(method),
            detail: detail.into(),
        }
    }

    fn unknown(detail: impl Into<String>) -> Self {
        PlanVerdict {
            schedulable: Schedulable::Unknown,
            method: None,
            detail: detail.into(),
        }
    }

    pub fn is_yes(&self) -> bool {
        self.schedulable == Schedulable::Yes
    }

    /// Process exit code: 0 yes, 2 no, 3 unknown.
    pub fn exit_code(&self) -> i32 {
        match self.schedulable {
            Schedulable::Yes => 0,
            Schedulable::No => 2,
            Schedulable::Unknown => 3,
        }
    }
}

impl fmt::Display for PlanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.schedulable {
            Schedulable::Yes => "schedulable",
            Schedulable::No => "not schedulable",
            Schedulable::Unknown => "unknown",
        };
        match self.method {
            Some(m) => write!(f, "{s} ({m:?}): {}", self.detail),
            None => write!(f, "{s}: {}", self.detail),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Largest window the demand test will scan; beyond it the verdict is unknown.
    pub analysis_cap: u64,
    /// Cost charged to every job for the preemption it may cause.
    pub switch_overhead: Tick,
    /// Resolution of the virtual-deadline scaling search.
    pub vd_grid: u64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            analysis_cap: 10_000_000,
            switch_overhead: Tick::ZERO,
            vd_grid: 100,
        }
    }
}

/// `sum C/T`, exactly. Sporadic tasks use their minimum gap.
pub fn utilization(ts: &TaskSet) -> BigRational {
    utilization_with(ts, Tick::ZERO)
}

fn utilization_with(ts: &TaskSet, overhead: Tick) -> BigRational {
    ts.tasks.iter().fold(BigRational::zero(), |acc, t| {
        acc + BigRational::new(
            BigInt::from((t.job_type.wcet + overhead).get()),
            BigInt::from(t.period().get()),
        )
    })
}

fn dbf_task(t: &Task, overhead: Tick) -> DbfTask {
    DbfTask {
        c: (t.job_type.wcet + overhead).get(),
        d: t.job_type.deadline.get(),
        t: t.period().get(),
        j: t.arrival.jitter().get(),
    }
}

/// Window up to which the demand test must look, or `None` past the cap.
fn analysis_bound(ts: &TaskSet, max_d: u64, cap: u64) -> Option<u64> {
    let h = ts.hyperperiod()?;
    let bound = h.checked_add(max_d)?;
    (bound <= cap).then_some(bound)
}

/// EDF schedulability of constrained-deadline sporadic tasks.
pub fn edf_schedulability(ts: &TaskSet, cfg: &PlanConfig) -> PlanVerdict {
    if let Err(errs) = ts.validate() {
        return PlanVerdict::unknown(format!("invalid task set: {}", errs[0]));
    }
    if let Some(t) = ts.tasks.iter().find(|t| t.job_type.deadline > t.period()) {
        return PlanVerdict::unknown(format!(
            "arbitrary deadlines unsupported (task {} has D > T)",
            t.name()
        ));
    }
    let u = utilization_with(ts, cfg.switch_overhead);
    if u > BigRational::one() {
        return PlanVerdict::no(Method::UtilizationBound, format!("utilization {u} > 1"));
    }
    let implicit = ts
        .tasks
        .iter()
        .all(|t| t.job_type.deadline == t.period() && t.arrival.jitter().is_zero());
    if implicit {
        return PlanVerdict::yes(Method::UtilizationBound, format!("utilization {u} <= 1"));
    }
    let max_d = ts.tasks.iter().map(|t| t.job_type.deadline.get()).max().unwrap_or(0);
    let Some(bound) = analysis_bound(ts, max_d, cfg.analysis_cap) else {
        return PlanVerdict::unknown(format!(
            "analysis bound exceeds cap {} (hyperperiod {:?})",
            cfg.analysis_cap,
            ts.hyperperiod()
        ));
    };
    let tasks: Vec<DbfTask> = ts.tasks.iter().map(|t| dbf_task(t, cfg.switch_overhead)).collect();
    match dbf::demand_test(&tasks, bound) {
        Ok(()) => PlanVerdict::yes(
            Method::DemandBound,
            format!("demand within supply for every window up to {bound}; utilization {u}"),
        ),
        Err(o) => PlanVerdict::no(
            Method::DemandBound,
            format!("demand {} exceeds window length L = {}", o.demand, o.at),
        ),
    }
}

/// Outcome of EDF-VD planning.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VdPlan {
    pub verdict: PlanVerdict,
    /// Scaling factor as `k / grid`, when one was chosen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<(u64, u64)>,
    /// The task set with virtual deadlines and `AD` assigned, on success.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taskset: Option<TaskSet>,
}

/// Finds a uniform virtual-deadline scaling `x` for HI tasks.
///
/// Each HI task's real deadline is `D + AD` as given. A candidate `x` sets
/// `D = floor(x * real)` (at least `C`, strictly below `real`) and is
/// accepted when the Normal-mode set passes EDF and the Ft-mode demand,
/// including jobs carried over the switch, fits. The Ft-mode set alone (HI
/// tasks at `HC` and real deadlines) must pass EDF first.
pub fn edf_vd_plan(ts: &TaskSet, cfg: &PlanConfig) -> VdPlan {
    let fail = |verdict| VdPlan {
        verdict,
        scale: None,
        taskset: None,
    };
    if let Err(errs) = ts.validate() {
        return fail(PlanVerdict::unknown(format!("invalid task set: {}", errs[0])));
    }
    if !ts.tasks.iter().any(|t| t.job_type.is_hi()) {
        let verdict = edf_schedulability(ts, cfg);
        let taskset = verdict.is_yes().then(|| ts.clone());
        return VdPlan {
            verdict,
            scale: None,
            taskset,
        };
    }
    if let Some(t) = ts.tasks.iter().find(|t| t.job_type.real_deadline() > t.period()) {
        return fail(PlanVerdict::unknown(format!(
            "arbitrary deadlines unsupported (task {} has real deadline > T)",
            t.name()
        )));
    }

    let ft_set = TaskSet::new(
        ts.tasks
            .iter()
            .filter_map(|t| {
                let x = t.job_type.hi.as_ref()?;
                let mut jt = t.job_type.clone();
                jt.deadline = t.job_type.real_deadline();
                jt.wcet = x.hc;
                jt.hi = None;
                Some(Task::new(jt, t.arrival))
            })
            .collect(),
    );
    let ft = edf_schedulability(&ft_set, cfg);
    if !ft.is_yes() {
        return fail(PlanVerdict {
            detail: format!("Ft-mode set: {}", ft.detail),
            ..ft
        });
    }

    let max_real = ts.tasks.iter().map(|t| t.job_type.real_deadline().get()).max().unwrap_or(0);
    let Some(bound) = analysis_bound(ts, max_real, cfg.analysis_cap) else {
        return fail(PlanVerdict::unknown(format!("analysis bound exceeds cap {}", cfg.analysis_cap)));
    };

    let grid = cfg.vd_grid.max(1);
    let mut last: Option<Vec<u64>> = None;
    let mut unknown = None;
    for k in (1..=grid).rev() {
        let Some(dvs) = virtual_deadlines(ts, k, grid) else { continue };
        if last.as_ref() == Some(&dvs) {
            continue;
        }
        last = Some(dvs.clone());
        let candidate = with_virtual_deadlines(ts, &dvs);
        let normal = edf_schedulability(&strip_hi(&candidate), cfg);
        match normal.schedulable {
            Schedulable::Unknown => {
                unknown.get_or_insert(normal);
                continue;
            }
            Schedulable::No => continue,
            Schedulable::Yes => {}
        }
        let hi_tasks: Vec<HiModeTask> = candidate
            .tasks
            .iter()
            .filter_map(|t| {
                let x = t.job_type.hi.as_ref()?;
                Some(HiModeTask {
                    c: (t.job_type.wcet + cfg.switch_overhead).get(),
                    hc: (x.hc + cfg.switch_overhead).get(),
                    dv: t.job_type.deadline.get(),
                    dreal: t.job_type.real_deadline().get(),
                    t: t.period().get(),
                    j: t.arrival.jitter().get(),
                })
            })
            .collect();
        if dbf::hi_mode_test(&hi_tasks, bound).is_ok() {
            return VdPlan {
                verdict: PlanVerdict::yes(
                    Method::DemandBound,
                    format!("virtual deadlines at x = {k}/{grid}; Normal mode: {}", normal.detail),
                ),
                scale: Some((k, grid)),
                taskset: Some(candidate),
            };
        }
    }
    match unknown {
        Some(v) => fail(v),
        None => fail(PlanVerdict::no(
            Method::DemandBound,
            format!("no virtual-deadline scaling on a grid of {grid} passes both modes"),
        )),
    }
}

/// Virtual deadline per task (0 for LO tasks) at `x = k / grid`.
fn virtual_deadlines(ts: &TaskSet, k: u64, grid: u64) -> Option<Vec<u64>> {
    ts.tasks
        .iter()
        .map(|t| {
            if !t.job_type.is_hi() {
                return Some(0);
            }
            let real = t.job_type.real_deadline().get();
            let dv = (real as u128 * k as u128 / grid as u128) as u64;
            let dv = dv.min(real - 1);
            (dv >= t.job_type.wcet.get()).then_some(dv)
        })
        .collect()
}

fn with_virtual_deadlines(ts: &TaskSet, dvs: &[u64]) -> TaskSet {
    TaskSet::new(
        ts.tasks
            .iter()
            .zip(dvs)
            .map(|(t, &dv)| {
                let mut jt = t.job_type.clone();
                if let Some(x) = &t.job_type.hi {
                    let real = t.job_type.real_deadline();
                    jt.deadline = Tick(dv);
                    jt.hi = Some(HiCrit {
                        ad: real - Tick(dv),
                        hc: x.hc,
                    });
                }
                Task::new(jt, t.arrival)
            })
            .collect(),
    )
}

/// Normal-mode view: every task at `C` and its (virtual) deadline.
fn strip_hi(ts: &TaskSet) -> TaskSet {
    TaskSet::new(
        ts.tasks
            .iter()
            .map(|t| {
                let mut jt = t.job_type.clone();
                jt.hi = None;
                Task::new(jt, t.arrival)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JobType;
    use crate::trace::Arrival;

    fn task(name: &str, c: u64, t: u64, d: u64) -> Task {
        Task::new(JobType::lo(name, d, c), Arrival::periodic(t, 0))
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(&TaskSet::new(vec![task("a", 5, 10, 10)])), ratio(1, 2));
        assert_eq!(
            utilization(&TaskSet::new(vec![task("a", 1, 2, 2), task("b", 1, 2, 2)])),
            ratio(1, 1)
        );
        assert_eq!(utilization(&TaskSet::default()), ratio(0, 1));
    }

    #[test]
    fn implicit_deadlines_at_full_utilization() {
        let v = edf_schedulability(
            &TaskSet::new(vec![task("a", 1, 2, 2), task("b", 1, 2, 2)]),
            &PlanConfig::default(),
        );
        assert_eq!(v.schedulable, Schedulable::Yes);
        assert_eq!(v.method, Some(Method::UtilizationBound));
    }

    #[test]
    fn overload_is_rejected_by_utilization() {
        let v = edf_schedulability(
            &TaskSet::new(vec![task("a", 3, 4, 4), task("b", 2, 4, 4)]),
            &PlanConfig::default(),
        );
        assert_eq!(v.schedulable, Schedulable::No);
        assert!(v.detail.contains("utilization 5/4 > 1"), "{}", v.detail);
    }

    #[test]
    fn constrained_deadlines_use_demand_bound() {
        let v = edf_schedulability(
            &TaskSet::new(vec![task("a", 1, 4, 2), task("b", 2, 4, 3)]),
            &PlanConfig::default(),
        );
        assert_eq!(v.schedulable, Schedulable::Yes);
        assert_eq!(v.method, Some(Method::DemandBound));

        let tight = edf_schedulability(
            &TaskSet::new(vec![task("a", 2, 4, 2), task("b", 2, 4, 3)]),
            &PlanConfig::default(),
        );
        assert_eq!(tight.schedulable, Schedulable::No);
        assert!(tight.detail.contains("L = 3"), "{}", tight.detail);
    }

    #[test]
    fn arbitrary_deadlines_are_unknown() {
        let v = edf_schedulability(&TaskSet::new(vec![task("a", 1, 4, 6)]), &PlanConfig::default());
        assert_eq!(v.schedulable, Schedulable::Unknown);
        assert!(v.detail.contains("arbitrary deadlines unsupported"));
    }

    #[test]
    fn cap_makes_large_hyperperiods_unknown() {
        let ts = TaskSet::new(vec![task("a", 1, 997, 500), task("b", 1, 991, 500)]);
        let cfg = PlanConfig {
            analysis_cap: 1000,
            ..PlanConfig::default()
        };
        assert_eq!(edf_schedulability(&ts, &cfg).schedulable, Schedulable::Unknown);
    }

    #[test]
    fn switch_overhead_is_charged() {
        let ts = TaskSet::new(vec![task("a", 1, 2, 2), task("b", 1, 2, 2)]);
        let cfg = PlanConfig {
            switch_overhead: Tick(1),
            ..PlanConfig::default()
        };
        assert_eq!(edf_schedulability(&ts, &cfg).schedulable, Schedulable::No);
    }

    #[test]
    fn vd_plan_without_hi_tasks_is_plain_edf() {
        let ts = TaskSet::new(vec![task("a", 1, 4, 2), task("b", 2, 4, 3)]);
        let plan = edf_vd_plan(&ts, &PlanConfig::default());
        assert!(plan.verdict.is_yes());
        assert_eq!(plan.taskset, Some(ts));
    }

    #[test]
    fn vd_plan_single_hi_task() {
        let ts = TaskSet::new(vec![Task::new(
            JobType::hi("h", 5, 2, 5, 4),
            Arrival::periodic(10, 0),
        )]);
        let plan = edf_vd_plan(&ts, &PlanConfig::default());
        assert!(plan.verdict.is_yes(), "{}", plan.verdict);
        let t = &plan.taskset.unwrap().tasks[0];
        assert_eq!(t.job_type.real_deadline(), Tick(10));
        assert!(t.job_type.deadline >= Tick(2) && t.job_type.deadline < Tick(10));
    }

    #[test]
    fn vd_plan_rejects_overloaded_ft_mode() {
        let ts = TaskSet::new(vec![
            Task::new(JobType::hi("h1", 5, 2, 5, 6), Arrival::periodic(10, 0)),
            Task::new(JobType::hi("h2", 5, 2, 5, 6), Arrival::periodic(10, 0)),
        ]);
        let plan = edf_vd_plan(&ts, &PlanConfig::default());
        assert_eq!(plan.verdict.schedulable, Schedulable::No);
        assert!(plan.verdict.detail.starts_with("Ft-mode set"));
    }

    #[test]
    fn vd_plan_accounts_for_carry_over_jobs() {
        // Both modes pass on their own, but a HI job caught by the switch
        // one tick before its virtual deadline cannot fit HC - C more ticks.
        let ts = TaskSet::new(vec![
            task("lo", 6, 10, 8),
            Task::new(JobType::hi("hi", 9, 1, 1, 5), Arrival::periodic(10, 0)),
        ]);
        let cfg = PlanConfig::default();
        let normal = strip_hi(&ts);
        assert!(edf_schedulability(&normal, &cfg).is_yes());
        let plan = edf_vd_plan(&ts, &cfg);
        if let Some(ts) = plan.taskset {
            let hi = ts.get("hi").unwrap();
            assert!(hi.job_type.deadline < Tick(9));
        }
    }
}
