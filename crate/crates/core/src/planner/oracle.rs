//! Exhaustive tick-level feasibility search for tiny job sets.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{Engine, EngineConfig, JobRelease};
use crate::model::JobType;
use crate::time::Tick;
use crate::trace::job_lives;

/// Env var overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "RG_SCHED_ORACLE_BUDGET";
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// State budget from the environment, or the default.
pub fn budget_from_env() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// One job with an absolute deadline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleJob {
    pub release: Tick,
    pub demand: Tick,
    pub deadline: Tick,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// For each tick from 0, the index of the job that runs, or `None` when idle.
    pub witness: Option<Vec<Option<usize>>>,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle too large: more than {budget} states explored")]
    TooLarge { budget: usize },
}

struct Search<'a> {
    jobs: &'a [OracleJob],
    /// Job indices in the order choices are tried.
    order: Vec<usize>,
    horizon: u64,
    budget: usize,
    states: usize,
    dead: HashSet<(u64, Vec<u64>)>,
    path: Vec<Option<usize>>,
}

impl Search<'_> {
    fn go(&mut self, t: u64, remaining: &mut Vec<u64>) -> Result<bool, OracleError> {
        if remaining.iter().all(|&r| r == 0) {
            return Ok(true);
        }
        if t >= self.horizon {
            return Ok(false);
        }
        // Necessary condition: every job can still finish alone by its deadline.
        let doomed = self
            .jobs
            .iter()
            .zip(remaining.iter())
            .any(|(j, &r)| r > 0 && t.max(j.release.get()) + r > j.deadline.get());
        if doomed {
            return Ok(false);
        }
        if self.dead.contains(&(t, remaining.clone())) {
            return Ok(false);
        }
        self.states += 1;
        if self.states > self.budget {
            return Err(OracleError::TooLarge { budget: self.budget });
        }

        let ready: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&i| remaining[i] > 0 && self.jobs[i].release.get() <= t)
            .collect();
        if ready.is_empty() {
            // Nothing to run: idling is forced until the next release.
            let next = self
                .jobs
                .iter()
                .zip(remaining.iter())
                .filter(|(_, &r)| r > 0)
                .map(|(j, _)| j.release.get())
                .min()
                .expect("some job remains");
            let gap = (next - t) as usize;
            self.path.extend(std::iter::repeat_n(None, gap));
            if self.go(next, remaining)? {
                return Ok(true);
            }
            self.path.truncate(self.path.len() - gap);
        } else {
            for i in ready {
                remaining[i] -= 1;
                self.path.push(Some(i));
                if self.go(t + 1, remaining)? {
                    return Ok(true);
                }
                self.path.pop();
                remaining[i] += 1;
            }
        }
        self.dead.insert((t, remaining.clone()));
        Ok(false)
    }
}

/// Searches every work-conserving preemptive tick schedule on one processor.
///
/// Restricting to work-conserving schedules loses no feasible instance:
/// inserting idle time while a job is ready never helps it meet a deadline.
/// Choices are tried in (deadline, release, index) order, so the witness is
/// the smallest schedule in that ranking.
pub fn brute_force_feasible(jobs: &[OracleJob], horizon: Tick, budget: usize) -> Result<Feasibility, OracleError> {
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&i| (jobs[i].deadline, jobs[i].release, i));
    let mut search = Search {
        jobs,
        order,
        horizon: horizon.get(),
        budget,
        states: 0,
        dead: HashSet::new(),
        path: Vec::new(),
    };
    let mut remaining: Vec<u64> = jobs.iter().map(|j| j.demand.get()).collect();
    let feasible = search.go(0, &mut remaining)?;
    Ok(Feasibility {
        feasible,
        witness: feasible.then(|| std::mem::take(&mut search.path)),
        states: search.states,
    })
}

/// True iff `schedule` gives every job its full demand between release and deadline.
pub fn schedule_is_valid(jobs: &[OracleJob], schedule: &[Option<usize>]) -> bool {
    let mut got = vec![0u64; jobs.len()];
    for (t, slot) in schedule.iter().enumerate() {
        if let Some(i) = *slot {
            let Some(j) = jobs.get(i) else { return false };
            let t = t as u64;
            if t < j.release.get() || t + 1 > j.deadline.get() {
                return false;
            }
            got[i] += 1;
        }
    }
    got.iter().zip(jobs).all(|(&g, j)| g == j.demand.get())
}

/// Runs the engine's plain EDF policy over `jobs` and reports whether every
/// job completes by its deadline.
pub fn edf_meets_deadlines(jobs: &[OracleJob]) -> bool {
    let mut releases = Vec::new();
    for (i, j) in jobs.iter().enumerate() {
        if j.demand.is_zero() {
            continue;
        }
        if j.release + j.demand > j.deadline {
            return false;
        }
        let d = (j.deadline - j.release).get();
        releases.push(JobRelease {
            job_type: Arc::new(JobType::lo(format!("J{i}"), d, j.demand.get())),
            release: j.release,
            demand: j.demand,
        });
    }
    let end = jobs.iter().map(|j| j.release.get()).max().unwrap_or(0)
        + jobs.iter().map(|j| j.demand.get()).sum::<u64>()
        + 1;
    let mut engine = Engine::with_releases(EngineConfig::default(), releases).expect("demands are positive");
    engine.run(Tick(end)).expect("plain EDF run");
    let lives = job_lives(engine.trace());
    let completed_in_time = lives.values().filter(|l| l.met_deadline(Tick::ZERO)).count();
    completed_in_time == jobs.iter().filter(|j| !j.demand.is_zero()).count()
}
