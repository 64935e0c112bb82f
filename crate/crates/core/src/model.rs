//! Domain types: job types, per-job bookkeeping and the scheduler state.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Tick;
use crate::trace::{Arrival, ArrivalError, ArrivalModel};

/// Extension carried by HI-criticality job types.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HiCrit {
    /// Extra deadline allowance added to the (virtual) deadline in Ft mode.
    #[serde(rename = "AD")]
    pub ad: Tick,
    /// Conservative WCET estimate, strictly above `C`.
    #[serde(rename = "HC")]
    pub hc: Tick,
}

/// Static parameters shared by every job of one task.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JobType {
    pub name: String,
    /// Relative deadline. For HI-crit types this is the virtual deadline.
    #[serde(rename = "D")]
    pub deadline: Tick,
    /// Optimistic WCET estimate.
    #[serde(rename = "C")]
    pub wcet: Tick,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<HiCrit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum JobTypeViolation {
    #[error("D > 0 required")]
    ZeroDeadline,
    #[error("C > 0 required")]
    ZeroWcet,
    #[error("C <= D required (C = {wcet}, D = {deadline})")]
    WcetExceedsDeadline { wcet: Tick, deadline: Tick },
    #[error("AD > 0 required")]
    ZeroAllowance,
    #[error("HC > C required (HC = {hc}, C = {wcet})")]
    HcNotAboveWcet { hc: Tick, wcet: Tick },
}

impl JobType {
    pub fn lo(name: impl Into<String>, deadline: u64, wcet: u64) -> Self {
        JobType {
            name: name.into(),
            deadline: Tick(deadline),
            wcet: Tick(wcet),
            hi: None,
        }
    }

    pub fn hi(name: impl Into<String>, deadline: u64, wcet: u64, ad: u64, hc: u64) -> Self {
        JobType {
            name: name.into(),
            deadline: Tick(deadline),
            wcet: Tick(wcet),
            hi: Some(HiCrit {
                ad: Tick(ad),
                hc: Tick(hc),
            }),
        }
    }

    pub fn is_hi(&self) -> bool {
        self.hi.is_some()
    }

    /// The application's real relative deadline: `D + AD` for HI types, `D` otherwise.
    pub fn real_deadline(&self) -> Tick {
        match &self.hi {
            Some(x) => self.deadline + x.ad,
            None => self.deadline,
        }
    }

    /// Returns every violated field constraint; `Ok` iff there are none.
    pub fn validate(&self) -> Result<(), Vec<JobTypeViolation>> {
        let mut out = Vec::new();
        if self.deadline.is_zero() {
            out.push(JobTypeViolation::ZeroDeadline);
        }
        if self.wcet.is_zero() {
            out.push(JobTypeViolation::ZeroWcet);
        }
        if self.wcet > self.deadline {
            out.push(JobTypeViolation::WcetExceedsDeadline {
                wcet: self.wcet,
                deadline: self.deadline,
            });
        }
        if let Some(x) = &self.hi {
            if x.ad.is_zero() {
                out.push(JobTypeViolation::ZeroAllowance);
            }
            if x.hc <= self.wcet {
                out.push(JobTypeViolation::HcNotAboveWcet {
                    hc: x.hc,
                    wcet: self.wcet,
                });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Identifier of one job instance, allocated in arrival order starting at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Run-time record of one active job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobInfo {
    pub job_type: Arc<JobType>,
    /// Absolute deadline as a clock value.
    pub deadline: Tick,
    /// Execution time consumed so far.
    pub exec: Tick,
}

impl JobInfo {
    pub fn new(job_type: Arc<JobType>, deadline: Tick, exec: Tick) -> Self {
        JobInfo {
            job_type,
            deadline,
            exec,
        }
    }

    pub fn is_hi(&self) -> bool {
        is_hi(self)
    }
}

/// True iff the job's type carries the HI-crit extension.
pub fn is_hi(job: &JobInfo) -> bool {
    job.job_type.hi.is_some()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    Normal,
    Ft,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Normal => f.write_str("Normal"),
            Mode::Ft => f.write_str("Ft"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("run = {0} is not in the active map")]
pub struct RunNotActive(pub JobId);

/// Scheduler state snapshot.
///
/// Construction enforces only the structural part of the state invariant
/// (`run` names an active job). Deadline and mode conjuncts are monitor
/// predicates because traces may legitimately break them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct State {
    t: Tick,
    active: BTreeMap<JobId, JobInfo>,
    run: Option<JobId>,
    mode: Mode,
}

impl State {
    pub fn new(
        t: Tick,
        active: BTreeMap<JobId, JobInfo>,
        run: Option<JobId>,
        mode: Mode,
    ) -> Result<Self, RunNotActive> {
        if let Some(id) = run {
            if !active.contains_key(&id) {
                return Err(RunNotActive(id));
            }
        }
        Ok(State {
            t,
            active,
            run,
            mode,
        })
    }

    pub fn t(&self) -> Tick {
        self.t
    }

    pub fn active(&self) -> &BTreeMap<JobId, JobInfo> {
        &self.active
    }

    pub fn run(&self) -> Option<JobId> {
        self.run
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn job(&self, id: JobId) -> Option<&JobInfo> {
        self.active.get(&id)
    }

    pub fn running_job(&self) -> Option<(JobId, &JobInfo)> {
        self.run.map(|id| (id, &self.active[&id]))
    }

    pub fn set_t(&mut self, t: Tick) {
        self.t = t;
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Mutable access to one job's record. Jobs cannot be removed this way,
    /// so the structural invariant is preserved.
    pub fn job_mut(&mut self, id: JobId) -> Option<&mut JobInfo> {
        self.active.get_mut(&id)
    }

    pub fn set_run(&mut self, run: Option<JobId>) -> Result<(), RunNotActive> {
        if let Some(id) = run {
            if !self.active.contains_key(&id) {
                return Err(RunNotActive(id));
            }
        }
        self.run = run;
        Ok(())
    }

    pub(crate) fn insert(&mut self, id: JobId, info: JobInfo) {
        self.active.insert(id, info);
    }

    /// Removes a job, clearing `run` if it pointed at it.
    pub(crate) fn remove(&mut self, id: JobId) -> Option<JobInfo> {
        if self.run == Some(id) {
            self.run = None;
        }
        self.active.remove(&id)
    }
}

/// A recurring source of jobs of one type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    #[serde(flatten)]
    pub job_type: JobType,
    pub arrival: Arrival,
}

impl Task {
    pub fn new(job_type: JobType, arrival: Arrival) -> Self {
        Task { job_type, arrival }
    }

    pub fn name(&self) -> &str {
        &self.job_type.name
    }

    pub fn period(&self) -> Tick {
        self.arrival.period()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TaskSetError {
    #[error("task {index} has an empty name")]
    EmptyName { index: usize },
    #[error("duplicate task name {0:?}")]
    DuplicateName(String),
    #[error("task {task:?}: {violation}")]
    JobType { task: String, violation: JobTypeViolation },
    #[error("task {task:?}: {error}")]
    Arrival { task: String, error: ArrivalError },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskSet {
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn new(tasks: Vec<Task>) -> Self {
        TaskSet { tasks }
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name() == name)
    }

    /// All violations, in task order.
    pub fn validate(&self) -> Result<(), Vec<TaskSetError>> {
        let mut out = Vec::new();
        let mut names = std::collections::BTreeSet::new();
        for (index, task) in self.tasks.iter().enumerate() {
            let name = task.name().to_owned();
            if name.is_empty() {
                out.push(TaskSetError::EmptyName { index });
            } else if !names.insert(name.clone()) {
                out.push(TaskSetError::DuplicateName(name.clone()));
            }
            if let Err(vs) = task.job_type.validate() {
                out.extend(vs.into_iter().map(|violation| TaskSetError::JobType {
                    task: name.clone(),
                    violation,
                }));
            }
            if let Err(error) = task.arrival.validate() {
                out.push(TaskSetError::Arrival { task: name, error });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn arrival_model(&self) -> ArrivalModel {
        ArrivalModel(
            self.tasks
                .iter()
                .map(|t| (t.name().to_owned(), t.arrival))
                .collect(),
        )
    }

    /// Least common multiple of the task periods; `None` on overflow.
    pub fn hyperperiod(&self) -> Option<u64> {
        self.tasks.iter().try_fold(1u64, |acc, t| {
            let p = t.period().get();
            let g = num_integer::gcd(acc, p);
            (acc / g).checked_mul(p)
        })
    }
}
