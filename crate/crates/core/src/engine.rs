//! Deterministic discrete-event simulator of the EDF / EDF-VD scheduler.
//!
//! The public operations (`arrival`, `completion`, `dispatch`, `advance`,
//! `mode_down`, `mode_up`, `handle_lo_overrun`) each check their own
//! precondition and append the resulting state to the trace. [`Engine::run`]
//! drives them from a release list.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{is_hi, JobId, JobInfo, JobType, Mode, State};
use crate::monitor::{self, ModeUpRule, MonitorConfig, Report};
use crate::time::Tick;
use crate::trace::{EventKind, Trace, TraceEvent};
use crate::workload::{self, WorkloadError, WorkloadSpec};

/// What happens to a LO-crit job that exhausts its budget `C` in Normal mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoOverrunPolicy {
    #[default]
    Drop,
    /// Keep it, but only run it when nothing else is active.
    Background,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Clock precision.
    pub rho: Tick,
    /// Dispatch latency after an arrival, completion or mode change.
    pub rho_s: Tick,
    /// Seed for the clock-drift sequence; no drift when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_seed: Option<u64>,
    pub ft_enabled: bool,
    pub lo_overrun_policy: LoOverrunPolicy,
    pub mode_up_rule: ModeUpRule,
    /// Extra samples at every multiple of this period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<Tick>,
}

impl EngineConfig {
    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            ft_enabled: self.ft_enabled,
            mode_up_rule: self.mode_up_rule,
        }
    }
}

/// One job to be released into the engine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobRelease {
    pub job_type: Arc<JobType>,
    /// External time of arrival.
    pub release: Tick,
    /// Execution the job really needs; may exceed its WCET estimates.
    pub demand: Tick,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("contract violation in {op}: {detail}")]
    ContractViolation { op: &'static str, detail: String },
    #[error("advance by {delta} from {now} overshoots the next event at {next}")]
    Overshoot { now: Tick, delta: Tick, next: Tick },
    #[error("job id space exhausted")]
    IdSpaceExhausted,
}

fn violation(op: &'static str, detail: impl Into<String>) -> EngineError {
    EngineError::ContractViolation {
        op,
        detail: detail.into(),
    }
}

#[derive(Debug)]
pub struct Engine {
    cfg: EngineConfig,
    now: Tick,
    state: State,
    pending: VecDeque<JobRelease>,
    trace: Trace,
    next_id: u64,
    demand: std::collections::BTreeMap<JobId, Tick>,
    /// LO jobs whose budget overrun has been handled in Normal mode.
    handled: BTreeSet<JobId>,
    /// Handled LO overrunners kept under the Background policy.
    backgrounded: BTreeSet<JobId>,
    /// Jobs whose overrun past their bound has already been annotated.
    observed: BTreeSet<JobId>,
    dispatch_at: Option<Tick>,
    events: Vec<TraceEvent>,
    /// Next record must start a new sample even at the same instant.
    split: bool,
    drift: Option<ChaCha8Rng>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Self {
        let mut trace = Trace::new(cfg.rho, cfg.rho_s);
        let state = State::default();
        trace.record(Tick::ZERO, state.clone(), Vec::new());
        Engine {
            drift: cfg.drift_seed.map(ChaCha8Rng::seed_from_u64),
            cfg,
            now: Tick::ZERO,
            state,
            pending: VecDeque::new(),
            trace,
            next_id: 1,
            demand: Default::default(),
            handled: BTreeSet::new(),
            backgrounded: BTreeSet::new(),
            observed: BTreeSet::new(),
            dispatch_at: None,
            events: Vec::new(),
            split: false,
        }
    }

    /// Engine preloaded with releases (stable-sorted by release time).
    pub fn with_releases(cfg: EngineConfig, mut releases: Vec<JobRelease>) -> Result<Self, EngineError> {
        if let Some(r) = releases.iter().find(|r| r.demand.is_zero()) {
            return Err(violation("release", format!("{} has zero demand", r.job_type.name)));
        }
        releases.sort_by_key(|r| r.release);
        let mut engine = Engine::new(cfg);
        engine.pending = releases.into();
        Ok(engine)
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn demand(&self, id: JobId) -> Option<Tick> {
        self.demand.get(&id).copied()
    }

    fn emit(&mut self, kind: EventKind, job: Option<JobId>, task: &str) {
        self.events.push(TraceEvent::new(kind, job, Some(task)));
    }

    fn record(&mut self) {
        let events = std::mem::take(&mut self.events);
        if self.split {
            self.split = false;
            let last = self.trace.samples().last();
            if events.is_empty() && last.is_some_and(|s| s.state == self.state) {
                return;
            }
            self.trace.record_new(self.now, self.state.clone(), events);
        } else {
            self.trace.record(self.now, self.state.clone(), events);
        }
    }

    /// Re-run dispatch now, or schedule it `rho_s` later.
    fn after_change(&mut self) {
        if self.cfg.rho_s.is_zero() {
            self.select();
        } else {
            let at = self.now + self.cfg.rho_s;
            self.dispatch_at = Some(self.dispatch_at.map_or(at, |d| d.min(at)));
        }
    }

    /// Admits a job of type `jt` that will need `demand` ticks. In Ft mode
    /// LO-crit arrivals are ignored and `None` is returned.
    pub fn arrival(&mut self, jt: Arc<JobType>, demand: Tick) -> Result<Option<JobId>, EngineError> {
        if demand.is_zero() {
            return Err(violation("arrival", "demand must be positive"));
        }
        let deadline = match (self.state.mode(), &jt.hi) {
            (Mode::Ft, None) => {
                self.emit(EventKind::Arrival, None, &jt.name);
                self.record();
                return Ok(None);
            }
            (Mode::Ft, Some(x)) => jt.deadline + x.ad + self.state.t(),
            (Mode::Normal, _) => jt.deadline + self.state.t(),
        };
        if self.next_id == u64::MAX {
            return Err(EngineError::IdSpaceExhausted);
        }
        let id = JobId(self.next_id);
        self.next_id += 1;
        let name = jt.name.clone();
        self.state.insert(id, JobInfo::new(jt, deadline, Tick::ZERO));
        self.demand.insert(id, demand);
        self.emit(EventKind::Arrival, Some(id), &name);
        self.after_change();
        self.record();
        Ok(Some(id))
    }

    /// Removes the running job once it has received its full demand.
    pub fn completion(&mut self, id: JobId) -> Result<(), EngineError> {
        if self.state.run() != Some(id) {
            return Err(violation(
                "completion",
                format!("{id} is not running (run = {:?})", self.state.run()),
            ));
        }
        let info = &self.state.active()[&id];
        let need = self.demand[&id];
        if info.exec < need {
            return Err(violation(
                "completion",
                format!("{id} has e = {} below its demand {need}", info.exec),
            ));
        }
        let name = info.job_type.name.clone();
        self.remove(id);
        self.emit(EventKind::Completion, Some(id), &name);
        self.after_change();
        self.maybe_mode_up()?;
        self.record();
        Ok(())
    }

    fn remove(&mut self, id: JobId) {
        self.state.remove(id);
        self.demand.remove(&id);
        self.handled.remove(&id);
        self.backgrounded.remove(&id);
        self.observed.remove(&id);
    }

    /// EDF selection: earliest deadline, ties to the smallest id. In Ft mode
    /// only HI jobs are eligible.
    pub fn dispatch(&mut self) -> Result<(), EngineError> {
        self.dispatch_at = None;
        self.select();
        if self.state.mode() == Mode::Ft && self.state.run().is_none() {
            self.maybe_mode_up()?;
        }
        self.record();
        Ok(())
    }

    fn select(&mut self) {
        let active = self.state.active();
        let pick = |eligible: &dyn Fn(&JobId, &JobInfo) -> bool| {
            active
                .iter()
                .filter(|(id, j)| eligible(id, j))
                .min_by_key(|(id, j)| (j.deadline, **id))
                .map(|(id, _)| *id)
        };
        let run = match self.state.mode() {
            Mode::Ft => pick(&|_, j| is_hi(j)),
            Mode::Normal => pick(&|id, _| !self.backgrounded.contains(id)).or_else(|| pick(&|_, _| true)),
        };
        self.state
            .set_run(run)
            .expect("selection only picks active jobs");
    }

    /// Lets external time pass by `delta`; the running job accrues exactly `delta`.
    pub fn advance(&mut self, delta: Tick) -> Result<(), EngineError> {
        if delta.is_zero() {
            return Err(violation("advance", "delta must be positive"));
        }
        if let Some(next) = self.next_event() {
            if self.now + delta > next {
                return Err(EngineError::Overshoot {
                    now: self.now,
                    delta,
                    next,
                });
            }
        }
        self.now += delta;
        let rho = self.cfg.rho.get() as i64;
        let offset = match &mut self.drift {
            Some(rng) if rho > 0 => rng.random_range(-rho..=rho),
            _ => 0,
        };
        let t = self.now.offset(offset).max(self.state.t());
        self.state.set_t(t);
        if let Some(id) = self.state.run() {
            let job = self.state.job_mut(id).expect("run is active");
            job.exec += delta;
        }
        self.record();
        Ok(())
    }

    /// Switches to Ft mode after a HI job exhausted `C`: HI deadlines are
    /// extended by `AD`, LO jobs dropped or kept in the background.
    pub fn mode_down(&mut self) -> Result<(), EngineError> {
        if self.state.mode() != Mode::Normal {
            return Err(violation("mode_down", "already in Ft mode"));
        }
        let trigger = self
            .state
            .active()
            .iter()
            .find(|(id, j)| is_hi(j) && self.exhausted(**id, j))
            .map(|(id, j)| (*id, j.job_type.name.clone()));
        let Some((trigger, name)) = trigger else {
            return Err(violation("mode_down", "no HI job has exhausted C"));
        };
        self.state.set_mode(Mode::Ft);
        let ids: Vec<JobId> = self.state.active().keys().copied().collect();
        for id in ids {
            let job = self.state.job_mut(id).expect("listed above");
            match job.job_type.hi.as_ref().map(|x| x.ad) {
                Some(ad) => job.deadline += ad,
                None if self.cfg.lo_overrun_policy == LoOverrunPolicy::Drop => {
                    let name = job.job_type.name.clone();
                    self.remove(id);
                    self.emit(EventKind::JobFailed, Some(id), &name);
                }
                None => {}
            }
        }
        self.emit(EventKind::ModeDown, Some(trigger), &name);
        self.after_change();
        self.record();
        Ok(())
    }

    /// True iff the job has consumed more than `C`, or sits exactly at `C`
    /// while still needing more.
    fn exhausted(&self, id: JobId, j: &JobInfo) -> bool {
        let c = j.job_type.wcet;
        j.exec > c || (j.exec == c && self.demand.get(&id).is_some_and(|&q| q > c))
    }

    /// Returns to Normal mode once the configured rule allows it.
    pub fn mode_up(&mut self) -> Result<(), EngineError> {
        if self.state.mode() != Mode::Ft {
            return Err(violation("mode_up", "not in Ft mode"));
        }
        if !self.cfg.mode_up_rule.allows(&self.state) {
            return Err(violation(
                "mode_up",
                format!("{:?} does not hold", self.cfg.mode_up_rule),
            ));
        }
        self.state.set_mode(Mode::Normal);
        self.events.push(TraceEvent::new(EventKind::ModeUp, None, None));
        self.after_change();
        self.record();
        Ok(())
    }

    fn maybe_mode_up(&mut self) -> Result<(), EngineError> {
        if self.state.mode() == Mode::Ft && self.cfg.mode_up_rule.allows(&self.state) {
            self.mode_up()?;
        }
        Ok(())
    }

    /// Deals with a LO job that exhausted `C` in Normal mode.
    pub fn handle_lo_overrun(&mut self, id: JobId) -> Result<(), EngineError> {
        if self.state.mode() != Mode::Normal {
            return Err(violation("handle_lo_overrun", "not in Normal mode"));
        }
        let Some(job) = self.state.job(id) else {
            return Err(violation("handle_lo_overrun", format!("{id} is not active")));
        };
        if is_hi(job) {
            return Err(violation("handle_lo_overrun", format!("{id} is HI-crit; use mode_down")));
        }
        if !self.exhausted(id, job) {
            return Err(violation("handle_lo_overrun", format!("{id} has not exhausted C")));
        }
        let name = job.job_type.name.clone();
        match self.cfg.lo_overrun_policy {
            LoOverrunPolicy::Drop => {
                self.remove(id);
                self.emit(EventKind::JobFailed, Some(id), &name);
            }
            LoOverrunPolicy::Background => {
                self.handled.insert(id);
                self.backgrounded.insert(id);
            }
        }
        self.after_change();
        self.record();
        Ok(())
    }

    /// Bound past which the running job's overrun is only observed, not handled.
    fn observation_limit(&self, id: JobId, j: &JobInfo) -> Option<Tick> {
        match (self.state.mode(), &j.job_type.hi) {
            (Mode::Ft, Some(x)) => Some(x.hc),
            (Mode::Ft, None) => None,
            (Mode::Normal, _) if !self.cfg.ft_enabled || self.backgrounded.contains(&id) => Some(j.job_type.wcet),
            (Mode::Normal, _) => None,
        }
    }

    /// Earliest pending event strictly after `now`, if any.
    pub fn next_event(&self) -> Option<Tick> {
        let mut next: Option<Tick> = None;
        let mut consider = |at: Tick| {
            if at > self.now {
                next = Some(next.map_or(at, |n| n.min(at)));
            }
        };
        if let Some(r) = self.pending.front() {
            consider(r.release);
        }
        if let Some(at) = self.dispatch_at {
            consider(at);
        }
        if let Some(p) = self.cfg.sample_period.filter(|p| !p.is_zero()) {
            consider(Tick((self.now.get() / p.get() + 1) * p.get()));
        }
        for (id, j) in self.state.active() {
            if self.stale_candidate(*id, j) {
                consider(j.deadline.saturating_sub(self.cfg.rho));
            }
        }
        if let Some((id, j)) = self.state.running_job() {
            let need = self.demand[&id];
            consider(self.now + (need - j.exec));
            let c = j.job_type.wcet;
            if self.budget_watched(id) && need > c && j.exec < c {
                consider(self.now + (c - j.exec));
            }
            if let Some(limit) = self.observation_limit(id, j) {
                if need > limit && j.exec <= limit && !self.observed.contains(&id) {
                    consider(self.now + (limit + Tick(1) - j.exec));
                }
            }
        }
        next
    }

    fn budget_watched(&self, id: JobId) -> bool {
        self.cfg.ft_enabled && self.state.mode() == Mode::Normal && !self.handled.contains(&id)
    }

    /// Jobs no longer entitled to run that are removed at their deadline.
    fn stale_candidate(&self, id: JobId, j: &JobInfo) -> bool {
        self.backgrounded.contains(&id) || (self.state.mode() == Mode::Ft && !is_hi(j))
    }

    /// Applies every operation due at the current instant, then dispatches.
    fn settle(&mut self) -> Result<(), EngineError> {
        if let Some((id, j)) = self.state.running_job() {
            let limit = self.observation_limit(id, j);
            if limit.is_some_and(|l| j.exec == l + Tick(1)) && !self.observed.contains(&id) {
                let name = j.job_type.name.clone();
                self.observed.insert(id);
                self.emit(EventKind::Overrun, Some(id), &name);
                self.record();
                self.split = true;
            }
        }
        loop {
            let mut changed = false;
            if let Some((id, j)) = self.state.running_job() {
                if j.exec >= self.demand[&id] {
                    self.completion(id)?;
                    changed = true;
                }
            }
            if let Some((id, j)) = self.state.running_job() {
                if self.budget_watched(id) && self.exhausted(id, j) {
                    if is_hi(j) {
                        self.mode_down()?;
                    } else {
                        self.handle_lo_overrun(id)?;
                    }
                    changed = true;
                }
            }
            while self.pending.front().is_some_and(|r| r.release <= self.now) {
                let r = self.pending.pop_front().expect("checked above");
                self.arrival(r.job_type, r.demand)?;
                changed = true;
            }
            let stale: Vec<(JobId, String)> = self
                .state
                .active()
                .iter()
                .filter(|(id, j)| self.stale_candidate(**id, j) && self.now >= j.deadline.saturating_sub(self.cfg.rho))
                .map(|(id, j)| (*id, j.job_type.name.clone()))
                .collect();
            for (id, name) in stale {
                self.remove(id);
                self.emit(EventKind::JobFailed, Some(id), &name);
                self.after_change();
                changed = true;
            }
            if self.state.mode() == Mode::Ft && self.cfg.mode_up_rule.allows(&self.state) {
                self.mode_up()?;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        if self.dispatch_at.is_some_and(|at| at <= self.now) {
            self.dispatch()?;
        }
        self.record();
        Ok(())
    }

    /// Runs the event loop until external time reaches `horizon`.
    pub fn run(&mut self, horizon: Tick) -> Result<(), EngineError> {
        self.settle()?;
        while self.now < horizon {
            let next = self.next_event().map_or(horizon, |n| n.min(horizon));
            self.advance(next - self.now)?;
            self.settle()?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Generates the workload's releases, simulates them up to `horizon` and
/// checks the resulting trace.
pub fn run_simulation(
    spec: &WorkloadSpec,
    horizon: Tick,
    cfg: &EngineConfig,
) -> Result<(Trace, Report), SimulationError> {
    let releases = workload::generate_releases(spec)?;
    let mut engine = Engine::with_releases(cfg.clone(), releases)?;
    engine.run(horizon)?;
    let trace = engine.into_trace();
    let report = monitor::check_trace(&trace, &spec.arrival_model(), &cfg.monitor_config());
    Ok((trace, report))
}
