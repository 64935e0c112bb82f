//! Finite traces of scheduler states against external time, and the
//! whole-trace predicates over them: clock tracking, execution-time
//! accounting and the arrival assumption.
//!
//! A trace is a sequence of samples sorted by external time. Two samples may
//! share an instant when the engine needs to expose an intermediate state
//! (an overrun that is immediately followed by completion). Between samples
//! the state is taken to be constant; every check quantifies over samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobId, JobType, State};
use crate::time::Tick;
use crate::verdict::{Verdict, Witness};

pub const CLOCK_TRACKING: &str = "inv-Sigma.T";
pub const EXEC_ACCOUNTING: &str = "inv-Sigma.E";
pub const ARRIVAL_ASSUMPTION: &str = "inv-Sigma.A";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "ARRIVAL")]
    Arrival,
    #[serde(rename = "COMPLETION")]
    Completion,
    #[serde(rename = "MODE-DOWN")]
    ModeDown,
    #[serde(rename = "MODE-UP")]
    ModeUp,
    #[serde(rename = "JOB-FAILED")]
    JobFailed,
    #[serde(rename = "OVERRUN")]
    Overrun,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Arrival => "ARRIVAL",
            EventKind::Completion => "COMPLETION",
            EventKind::ModeDown => "MODE-DOWN",
            EventKind::ModeUp => "MODE-UP",
            EventKind::JobFailed => "JOB-FAILED",
            EventKind::Overrun => "OVERRUN",
        })
    }
}

/// Annotation attached to the sample at which an engine event happened.
///
/// An arrival that Ft mode ignores carries a task name but no job id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<JobId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl TraceEvent {
    pub fn new(kind: EventKind, job: Option<JobId>, task: Option<&str>) -> Self {
        TraceEvent {
            kind,
            job,
            task: task.map(str::to_owned),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    /// External time.
    pub alpha: Tick,
    pub state: State,
    pub events: Vec<TraceEvent>,
}

impl Sample {
    pub fn new(alpha: Tick, state: State) -> Self {
        Sample {
            alpha,
            state,
            events: Vec::new(),
        }
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("sample alpha {alpha} precedes previous alpha {previous}")]
    DecreasingAlpha { previous: Tick, alpha: Tick },
}

/// Finite stand-in for the history `Time -> State`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    samples: Vec<Sample>,
    /// Clock precision.
    rho: Tick,
    /// Scheduler reaction latency budget.
    rho_s: Tick,
}

impl Trace {
    pub fn new(rho: Tick, rho_s: Tick) -> Self {
        Trace {
            samples: Vec::new(),
            rho,
            rho_s,
        }
    }

    pub fn from_samples(rho: Tick, rho_s: Tick, samples: Vec<Sample>) -> Result<Self, TraceError> {
        let mut trace = Trace::new(rho, rho_s);
        for s in samples {
            trace.push(s)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), TraceError> {
        if let Some(last) = self.samples.last() {
            if sample.alpha < last.alpha {
                return Err(TraceError::DecreasingAlpha {
                    previous: last.alpha,
                    alpha: sample.alpha,
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Appends, or replaces the state of the last sample when it sits at the
    /// same external time (events accumulate).
    pub(crate) fn record(&mut self, alpha: Tick, state: State, events: Vec<TraceEvent>) {
        match self.samples.last_mut() {
            Some(last) if last.alpha == alpha => {
                last.state = state;
                last.events.extend(events);
            }
            _ => self.record_new(alpha, state, events),
        }
    }

    /// Appends a fresh sample even if the last one has the same alpha.
    pub(crate) fn record_new(&mut self, alpha: Tick, state: State, events: Vec<TraceEvent>) {
        if let Some(last) = self.samples.last() {
            assert!(alpha >= last.alpha, "trace recorded out of order");
        }
        self.samples.push(Sample { alpha, state, events });
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rho(&self) -> Tick {
        self.rho
    }

    pub fn rho_s(&self) -> Tick {
        self.rho_s
    }

    /// Mutable access to one sample's state (alpha stays fixed).
    pub fn state_mut(&mut self, index: usize) -> Option<&mut State> {
        self.samples.get_mut(index).map(|s| &mut s.state)
    }

    pub fn prefix(&self, len: usize) -> Trace {
        Trace {
            samples: self.samples[..len.min(self.samples.len())].to_vec(),
            rho: self.rho,
            rho_s: self.rho_s,
        }
    }

    /// Every job id that appears in some sample's active map, in order.
    pub fn job_ids(&self) -> BTreeSet<JobId> {
        self.samples
            .iter()
            .flat_map(|s| s.state.active().keys().copied())
            .collect()
    }

    /// Distinct job types referenced by the trace, keyed by name. When a name
    /// is bound to several different types the first occurrence wins.
    pub fn job_types(&self) -> BTreeMap<String, Arc<JobType>> {
        let mut out = BTreeMap::new();
        for s in &self.samples {
            for info in s.state.active().values() {
                out.entry(info.job_type.name.clone())
                    .or_insert_with(|| info.job_type.clone());
            }
        }
        out
    }
}

/// Life of one job as recorded in a trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobLife {
    pub id: JobId,
    pub job_type: Arc<JobType>,
    pub first_sample: usize,
    pub last_sample: usize,
    /// Deadline in force at the last sample containing the job.
    pub final_deadline: Tick,
    /// `(alpha, t)` of the sample carrying the COMPLETION annotation.
    pub completed: Option<(Tick, Tick)>,
    pub failed: bool,
}

impl JobLife {
    /// Completed no later than the deadline in force, plus `slack`.
    pub fn met_deadline(&self, slack: Tick) -> bool {
        matches!(self.completed, Some((_, t)) if t <= self.final_deadline + slack)
    }
}

pub fn job_lives(trace: &Trace) -> BTreeMap<JobId, JobLife> {
    let mut lives: BTreeMap<JobId, JobLife> = BTreeMap::new();
    for (k, s) in trace.samples().iter().enumerate() {
        for (id, info) in s.state.active() {
            lives
                .entry(*id)
                .and_modify(|l| {
                    l.last_sample = k;
                    l.final_deadline = info.deadline;
                })
                .or_insert_with(|| JobLife {
                    id: *id,
                    job_type: info.job_type.clone(),
                    first_sample: k,
                    last_sample: k,
                    final_deadline: info.deadline,
                    completed: None,
                    failed: false,
                });
        }
        for ev in &s.events {
            let Some(id) = ev.job else { continue };
            let Some(life) = lives.get_mut(&id) else { continue };
            match ev.kind {
                EventKind::Completion => life.completed = Some((s.alpha, s.state.t())),
                EventKind::JobFailed => life.failed = true,
                _ => {}
            }
        }
    }
    lives
}

/// Arrival pattern of one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    /// The k-th arrival lies within `jitter` of `k * period`.
    Periodic {
        period: Tick,
        #[serde(default)]
        jitter: Tick,
    },
    /// Consecutive arrivals are at least `min_gap` apart.
    Sporadic { min_gap: Tick },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ArrivalError {
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("jitter {jitter} must be below period {period}")]
    JitterTooLarge { period: Tick, jitter: Tick },
    #[error("min_gap must be positive")]
    ZeroMinGap,
}

impl Arrival {
    pub fn periodic(period: u64, jitter: u64) -> Self {
        Arrival::Periodic {
            period: Tick(period),
            jitter: Tick(jitter),
        }
    }

    pub fn sporadic(min_gap: u64) -> Self {
        Arrival::Sporadic {
            min_gap: Tick(min_gap),
        }
    }

    pub fn validate(&self) -> Result<(), ArrivalError> {
        match *self {
            Arrival::Periodic { period, jitter } => {
                if period.is_zero() {
                    Err(ArrivalError::ZeroPeriod)
                } else if jitter >= period {
                    Err(ArrivalError::JitterTooLarge { period, jitter })
                } else {
                    Ok(())
                }
            }
            Arrival::Sporadic { min_gap } => {
                if min_gap.is_zero() {
                    Err(ArrivalError::ZeroMinGap)
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Period used by analysis; sporadic tasks are taken at their densest.
    pub fn period(&self) -> Tick {
        match *self {
            Arrival::Periodic { period, .. } => period,
            Arrival::Sporadic { min_gap } => min_gap,
        }
    }

    pub fn jitter(&self) -> Tick {
        match *self {
            Arrival::Periodic { jitter, .. } => jitter,
            Arrival::Sporadic { .. } => Tick::ZERO,
        }
    }
}

/// Arrival pattern per job-type name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArrivalModel(pub BTreeMap<String, Arrival>);

impl ArrivalModel {
    pub fn new() -> Self {
        ArrivalModel::default()
    }

    pub fn with(mut self, name: impl Into<String>, arrival: Arrival) -> Self {
        self.0.insert(name.into(), arrival);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Arrival> {
        self.0.get(name)
    }

    pub fn validate(&self) -> Result<(), (String, ArrivalError)> {
        for (name, a) in &self.0 {
            a.validate().map_err(|e| (name.clone(), e))?;
        }
        Ok(())
    }
}

/// Violations of clock tracking: `|t - alpha| <= rho` at every sample and a
/// clock that never decreases between samples.
pub fn clock_tracking_violations(trace: &Trace) -> Vec<Witness> {
    let rho = trace.rho();
    let mut out = Vec::new();
    let samples = trace.samples();
    for (k, s) in samples.iter().enumerate() {
        if !s.state.t().within(s.alpha, rho) {
            out.push(
                Witness::new(format!(
                    "clock t = {} drifts more than rho = {rho} from alpha = {}",
                    s.state.t(),
                    s.alpha
                ))
                .at_sample(k),
            );
        }
        // Monotone over all pairs is equivalent to monotone over adjacent ones.
        if k > 0 {
            let prev = samples[k - 1].state.t();
            if s.state.t() < prev {
                out.push(
                    Witness::new(format!("clock went backwards: {prev} -> {}", s.state.t()))
                        .at_pair(k - 1, k),
                );
            }
        }
    }
    out
}

pub fn check_clock_tracking(trace: &Trace) -> Verdict {
    if trace.is_empty() {
        return Verdict::vacuous(CLOCK_TRACKING);
    }
    Verdict::from_witnesses(CLOCK_TRACKING, clock_tracking_violations(trace))
}

/// Execution-time accounting, one pass over maximal blocks of constant run
/// status per job.
///
/// Within a block where `j` runs, every pair must satisfy
/// `|(e2 - e1) - (alpha2 - alpha1)| <= rho`, i.e. the spread of `e - alpha`
/// over the block is at most `rho`. Within a block where `j` does not run,
/// every sample that has `j` active must show the same `e`.
pub fn exec_accounting_violations(trace: &Trace) -> Vec<Witness> {
    let rho = trace.rho().get() as i128;
    let samples = trace.samples();
    let mut out = Vec::new();
    for id in trace.job_ids() {
        let mut k = 0;
        while k < samples.len() {
            let running = samples[k].state.run() == Some(id);
            let start = k;
            while k < samples.len() && (samples[k].state.run() == Some(id)) == running {
                k += 1;
            }
            let block = start..k;
            let found = if running {
                running_block_violation(samples, block, id, rho)
            } else {
                idle_block_violation(samples, block, id)
            };
            out.extend(found);
        }
    }
    out.sort_by_key(|w| (w.pair, w.job));
    out
}

fn running_block_violation(
    samples: &[Sample],
    block: std::ops::Range<usize>,
    id: JobId,
    rho: i128,
) -> Option<Witness> {
    let gap = |k: usize| {
        let s = &samples[k];
        s.state.active()[&id].exec.get() as i128 - s.alpha.get() as i128
    };
    let mut lo = (block.start, gap(block.start));
    let mut hi = lo;
    for k in block.clone().skip(1) {
        let g = gap(k);
        let bad = if g - lo.1 > rho {
            Some(lo.0)
        } else if hi.1 - g > rho {
            Some(hi.0)
        } else {
            None
        };
        if let Some(first) = bad {
            let (a, b) = (&samples[first], &samples[k]);
            let de = b.state.active()[&id].exec.get() as i128 - a.state.active()[&id].exec.get() as i128;
            let da = b.alpha.get() as i128 - a.alpha.get() as i128;
            return Some(
                Witness::new(format!(
                    "running job accrued {de} ticks over {da} ticks of time (rho = {rho})"
                ))
                .at_pair(first, k)
                .for_job(id),
            );
        }
        if g < lo.1 {
            lo = (k, g);
        }
        if g > hi.1 {
            hi = (k, g);
        }
    }
    None
}

fn idle_block_violation(samples: &[Sample], block: std::ops::Range<usize>, id: JobId) -> Option<Witness> {
    let mut reference: Option<(usize, Tick)> = None;
    for k in block {
        let Some(info) = samples[k].state.job(id) else { continue };
        match reference {
            None => reference = Some((k, info.exec)),
            Some((first, e)) if e != info.exec => {
                return Some(
                    Witness::new(format!("job not running but e changed {e} -> {}", info.exec))
                        .at_pair(first, k)
                        .for_job(id),
                );
            }
            Some(_) => {}
        }
    }
    None
}

pub fn check_exec_accounting(trace: &Trace) -> Verdict {
    if trace.is_empty() {
        return Verdict::vacuous(EXEC_ACCOUNTING);
    }
    Verdict::from_witnesses(EXEC_ACCOUNTING, exec_accounting_violations(trace))
}

/// Execution-time accounting by direct quantification over every pair of
/// samples. Quadratic; kept as the reference for [`check_exec_accounting`].
pub fn check_exec_accounting_pairwise(trace: &Trace) -> Verdict {
    let rho = trace.rho().get() as i128;
    let samples = trace.samples();
    if samples.is_empty() {
        return Verdict::vacuous(EXEC_ACCOUNTING);
    }
    let mut witnesses = Vec::new();
    for k1 in 0..samples.len() {
        for k2 in k1 + 1..samples.len() {
            let (a, b) = (&samples[k1], &samples[k2]);
            for (id, i1) in a.state.active() {
                let Some(i2) = b.state.job(*id) else { continue };
                let span = &samples[k1..=k2];
                if span.iter().all(|s| s.state.run() == Some(*id)) {
                    let de = i2.exec.get() as i128 - i1.exec.get() as i128;
                    let da = b.alpha.get() as i128 - a.alpha.get() as i128;
                    if (de - da).abs() > rho {
                        witnesses.push(Witness::new("accrual").at_pair(k1, k2).for_job(*id));
                    }
                } else if span.iter().all(|s| s.state.run() != Some(*id)) && i1.exec != i2.exec {
                    witnesses.push(Witness::new("frozen").at_pair(k1, k2).for_job(*id));
                }
            }
        }
    }
    Verdict::from_witnesses(EXEC_ACCOUNTING, witnesses)
}

/// One observed arrival: task name and the sample it happened at.
#[derive(Clone, Debug, PartialEq, Eq)]
struct ObservedArrival {
    sample: usize,
    alpha: Tick,
    job: Option<JobId>,
}

/// Arrivals per task: ARRIVAL annotations (including those Ft mode ignored),
/// plus any job that shows up in `active` without one.
fn observed_arrivals(trace: &Trace) -> BTreeMap<String, Vec<ObservedArrival>> {
    let mut out: BTreeMap<String, Vec<ObservedArrival>> = BTreeMap::new();
    let mut seen: BTreeSet<JobId> = BTreeSet::new();
    for (k, s) in trace.samples().iter().enumerate() {
        for ev in s.events.iter().filter(|e| e.kind == EventKind::Arrival) {
            let task = ev.task.clone().or_else(|| {
                ev.job
                    .and_then(|id| s.state.job(id))
                    .map(|info| info.job_type.name.clone())
            });
            let Some(task) = task else { continue };
            if let Some(id) = ev.job {
                seen.insert(id);
            }
            out.entry(task).or_default().push(ObservedArrival {
                sample: k,
                alpha: s.alpha,
                job: ev.job,
            });
        }
        for (id, info) in s.state.active() {
            if seen.insert(*id) {
                out.entry(info.job_type.name.clone())
                    .or_default()
                    .push(ObservedArrival {
                        sample: k,
                        alpha: s.alpha,
                        job: Some(*id),
                    });
            }
        }
    }
    for list in out.values_mut() {
        list.sort_by_key(|a| (a.alpha, a.sample));
    }
    out
}

pub fn arrival_violations(trace: &Trace, model: &ArrivalModel) -> Vec<Witness> {
    let mut out = Vec::new();
    for (task, arrivals) in observed_arrivals(trace) {
        let Some(arrival) = model.get(&task) else {
            let first = &arrivals[0];
            out.push(Witness::new(format!("unknown type {task:?}")).at_sample(first.sample));
            continue;
        };
        for (k, a) in arrivals.iter().enumerate() {
            let bad = match *arrival {
                Arrival::Sporadic { min_gap } => {
                    k > 0 && a.alpha.get() - arrivals[k - 1].alpha.get() < min_gap.get()
                }
                Arrival::Periodic { period, jitter } => {
                    let nominal = period.get() as i128 * k as i128;
                    (a.alpha.get() as i128 - nominal).abs() > jitter.get() as i128
                }
            };
            if bad {
                let message = match *arrival {
                    Arrival::Sporadic { min_gap } => format!(
                        "{task} arrived {} ticks after its predecessor (min_gap {min_gap})",
                        a.alpha.get() - arrivals[k - 1].alpha.get()
                    ),
                    Arrival::Periodic { period, jitter } => format!(
                        "{task} arrival #{k} at {} outside {}±{jitter}",
                        a.alpha,
                        period * k as u64
                    ),
                };
                let mut w = Witness::new(message).at_sample(a.sample);
                w.job = a.job;
                out.push(w);
            }
        }
    }
    out.sort_by_key(|w| w.sample);
    out
}

pub fn check_arrival_assumption(trace: &Trace, model: &ArrivalModel) -> Verdict {
    if trace.is_empty() {
        return Verdict::vacuous(ARRIVAL_ASSUMPTION);
    }
    Verdict::from_witnesses(ARRIVAL_ASSUMPTION, arrival_violations(trace, model))
}

/// The three conjuncts of the trace invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaReport {
    pub arrival: Verdict,
    pub clock: Verdict,
    pub exec: Verdict,
}

impl SigmaReport {
    pub fn passed(&self) -> bool {
        self.arrival.passed() && self.clock.passed() && self.exec.passed()
    }
}

pub fn check_sigma_invariant(trace: &Trace, model: &ArrivalModel) -> SigmaReport {
    SigmaReport {
        arrival: check_arrival_assumption(trace, model),
        clock: check_clock_tracking(trace),
        exec: check_exec_accounting(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JobInfo, Mode};

    fn jt() -> Arc<JobType> {
        Arc::new(JobType::lo("A", 100, 50))
    }

    fn state(t: u64, jobs: &[(u64, u64)], run: Option<u64>) -> State {
        let ty = jt();
        let active = jobs
            .iter()
            .map(|&(id, e)| (JobId(id), JobInfo::new(ty.clone(), Tick(100), Tick(e))))
            .collect();
        State::new(Tick(t), active, run.map(JobId), Mode::Normal).unwrap()
    }

    fn trace(rho: u64, samples: Vec<(u64, State)>) -> Trace {
        Trace::from_samples(
            Tick(rho),
            Tick(0),
            samples
                .into_iter()
                .map(|(a, s)| Sample::new(Tick(a), s))
                .collect(),
        )
        .unwrap()
    }

    fn arrival_trace(alphas: &[u64]) -> Trace {
        let mut samples = Vec::new();
        for (i, &a) in alphas.iter().enumerate() {
            let mut s = Sample::new(Tick(a), state(a, &[], None));
            s.events
                .push(TraceEvent::new(EventKind::Arrival, Some(JobId(i as u64 + 1)), Some("A")));
            samples.push(s);
        }
        Trace::from_samples(Tick(0), Tick(0), samples).unwrap()
    }

    #[test]
    fn push_rejects_decreasing_alpha() {
        let mut t = Trace::new(Tick(0), Tick(0));
        t.push(Sample::new(Tick(5), State::default())).unwrap();
        t.push(Sample::new(Tick(5), State::default())).unwrap();
        assert!(t.push(Sample::new(Tick(4), State::default())).is_err());
    }

    #[test]
    fn clock_exact_passes() {
        let t = trace(0, vec![(0, state(0, &[], None)), (7, state(7, &[], None))]);
        assert!(check_clock_tracking(&t).passed());
    }

    #[test]
    fn clock_regression_fails_monotonic_conjunct() {
        let t = trace(3, vec![(10, state(8, &[], None)), (20, state(7, &[], None))]);
        let v = check_clock_tracking(&t);
        assert!(v.is_fail());
        // (20, 7) is also off by 13 > 3; the regression pair is among the witnesses.
        let all = clock_tracking_violations(&t);
        assert!(all.iter().any(|w| w.pair == Some((0, 1))));
    }

    #[test]
    fn clock_drift_beyond_rho_fails_tracking_conjunct() {
        let t = trace(3, vec![(10, state(14, &[], None))]);
        let v = check_clock_tracking(&t);
        assert!(v.is_fail());
        assert_eq!(v.witness.unwrap().sample, Some(0));
    }

    #[test]
    fn empty_trace_is_vacuous() {
        let t = Trace::new(Tick(1), Tick(0));
        assert!(check_clock_tracking(&t).passed());
        assert!(check_exec_accounting(&t).passed());
        assert!(check_sigma_invariant(&t, &ArrivalModel::new()).passed());
    }

    #[test]
    fn exact_accrual_passes() {
        let t = trace(
            1,
            vec![(0, state(0, &[(1, 0)], Some(1))), (10, state(10, &[(1, 10)], Some(1)))],
        );
        assert!(check_exec_accounting(&t).passed());
    }

    #[test]
    fn idle_job_with_growing_e_fails() {
        let t = trace(
            1,
            vec![(0, state(0, &[(1, 2)], None)), (10, state(10, &[(1, 5)], None))],
        );
        let v = check_exec_accounting(&t);
        assert!(v.is_fail());
        assert_eq!(v.witness.as_ref().unwrap().job, Some(JobId(1)));
        assert_eq!(v.witness.unwrap().pair, Some((0, 1)));
    }

    #[test]
    fn running_job_with_short_accrual_fails() {
        // |4 - 10| = 6 > 1
        let t = trace(
            1,
            vec![(0, state(0, &[(1, 0)], Some(1))), (10, state(10, &[(1, 4)], Some(1)))],
        );
        assert!(check_exec_accounting(&t).is_fail());
        assert!(check_exec_accounting_pairwise(&t).is_fail());
    }

    #[test]
    fn mixed_run_status_is_unconstrained() {
        let t = trace(
            0,
            vec![
                (0, state(0, &[(1, 0)], Some(1))),
                (5, state(5, &[(1, 5)], None)),
                (9, state(9, &[(1, 5)], Some(1))),
                (10, state(10, &[(1, 6)], Some(1))),
            ],
        );
        assert!(check_exec_accounting(&t).passed());
        assert!(check_exec_accounting_pairwise(&t).passed());
    }

    #[test]
    fn sporadic_gaps() {
        let model = ArrivalModel::new().with("A", Arrival::sporadic(10));
        assert!(check_arrival_assumption(&arrival_trace(&[0, 10, 25]), &model).passed());
        let v = check_arrival_assumption(&arrival_trace(&[0, 6]), &model);
        assert!(v.is_fail());
        assert_eq!(v.witness.unwrap().sample, Some(1));
    }

    #[test]
    fn periodic_within_jitter() {
        let model = ArrivalModel::new().with("A", Arrival::periodic(20, 2));
        // 0 in [-2,2], 21 in [18,22], 39 in [38,42]
        assert!(check_arrival_assumption(&arrival_trace(&[0, 21, 39]), &model).passed());
        assert!(check_arrival_assumption(&arrival_trace(&[0, 23]), &model).is_fail());
    }

    #[test]
    fn unknown_type_is_reported() {
        let v = check_arrival_assumption(&arrival_trace(&[0]), &ArrivalModel::new());
        assert!(v.is_fail());
        assert!(v.witness.unwrap().message.contains("unknown type"));
    }

    #[test]
    fn unannotated_jobs_count_as_arrivals() {
        let model = ArrivalModel::new().with("A", Arrival::sporadic(10));
        let t = trace(
            0,
            vec![(0, state(0, &[(1, 0)], None)), (4, state(4, &[(1, 0), (2, 0)], None))],
        );
        assert!(check_arrival_assumption(&t, &model).is_fail());
    }

    #[test]
    fn sigma_is_a_conjunction() {
        let model = ArrivalModel::new().with("A", Arrival::sporadic(1));
        let t = trace(3, vec![(10, state(8, &[], None)), (20, state(7, &[], None))]);
        let r = check_sigma_invariant(&t, &model);
        assert!(!r.passed());
        assert!(r.clock.is_fail());
        assert!(r.arrival.passed());
        assert!(r.exec.passed());
    }

    #[test]
    fn arrival_validation() {
        assert!(Arrival::periodic(0, 0).validate().is_err());
        assert!(Arrival::periodic(10, 10).validate().is_err());
        assert!(Arrival::sporadic(0).validate().is_err());
        assert!(Arrival::periodic(10, 9).validate().is_ok());
    }
}
