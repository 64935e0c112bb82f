//! Per-state invariants, rely/guarantee relations over adjacent samples, and
//! the report that combines them with the whole-trace predicates.
//!
//! Assumptions (the arrival pattern and the scheduler's rely on job WCETs)
//! are kept apart from obligations. When an assumption breaks at sample `k`,
//! deadline obligations violated at or after `k` are reported as
//! [`Status::RelyBroken`] rather than [`Status::Fail`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{is_hi, JobId, Mode, State};
use crate::time::Tick;
use crate::trace::{self, ArrivalModel, EventKind, Trace};
use crate::verdict::{Status, Verdict, Witness};

pub const INV_STATE: &str = "inv-State";
pub const INV_STATE_W: &str = "inv-State-W";
pub const INV_STATE_FT: &str = "inv-State-FT";
pub const INV_EDF: &str = "inv-EDF";
pub const INV_EDF_FT: &str = "inv-EDF-FT";
pub const MODE_DOWN_TRIGGER: &str = "mode-down-trigger";
pub const MODE_UP_TRIGGER: &str = "mode-up-trigger";
pub const GUAR_SCHEDULER: &str = "guar-Scheduler";
pub const RELY_SCHEDULER: &str = "rely-Scheduler";
pub const RELY_SCHEDULER_FT: &str = "rely-Scheduler-FT";
pub const GUAR_JOB: &str = "guar-Job";
pub const RELY_JOB: &str = "rely-Job";

/// When Ft mode may hand back to Normal mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeUpRule {
    /// Only once no job at all is active.
    #[default]
    EmptyActive,
    /// As soon as no HI-crit job is active.
    LoOnlyRemaining,
}

impl ModeUpRule {
    pub fn allows(self, st: &State) -> bool {
        match self {
            ModeUpRule::EmptyActive => st.active().is_empty(),
            ModeUpRule::LoOnlyRemaining => !st.active().values().any(is_hi),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Use the fault-tolerant variants as the operative obligations.
    pub ft_enabled: bool,
    pub mode_up_rule: ModeUpRule,
}

/// Relaxation applied when a sample falls inside the scheduler's reaction
/// window, or when deadlines are allowed the reaction latency as slack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tolerance {
    pub deadline_slack: Tick,
    /// False while a dispatch decision may still be pending; conjuncts about
    /// which job is in `run` are then not evaluated.
    pub settled: bool,
}

impl Tolerance {
    pub const EXACT: Tolerance = Tolerance {
        deadline_slack: Tick::ZERO,
        settled: true,
    };
}

fn structural_witness(st: &State) -> Option<Witness> {
    match st.run() {
        None if !st.active().is_empty() => Some(Witness::new("jobs are active but none is running")),
        Some(id) if st.job(id).is_none() => Some(Witness::new("run is not active").for_job(id)),
        _ => None,
    }
}

fn first_missed_deadline(
    st: &State,
    slack: Tick,
    mut guard: impl FnMut(&crate::model::JobInfo) -> bool,
) -> Option<Witness> {
    st.active()
        .iter()
        .find(|(_, info)| guard(info) && st.t() > info.deadline + slack)
        .map(|(id, info)| {
            Witness::new(format!("t = {} is past deadline d = {}", st.t(), info.deadline)).for_job(*id)
        })
}

/// Mode is Normal, `run` is consistent with `active`, and no job is past its deadline.
pub fn inv_state(st: &State) -> Verdict {
    inv_state_with(st, Tolerance::EXACT)
}

pub fn inv_state_with(st: &State, tol: Tolerance) -> Verdict {
    if st.mode() != Mode::Normal {
        return Verdict::fail(INV_STATE, Witness::new("mode is not Normal"));
    }
    if tol.settled {
        if let Some(w) = structural_witness(st) {
            return Verdict::fail(INV_STATE, w);
        }
    }
    match first_missed_deadline(st, tol.deadline_slack, |_| true) {
        Some(w) => Verdict::fail(INV_STATE, w),
        None => Verdict::pass(INV_STATE),
    }
}

/// As [`inv_state`], but jobs that have overrun `C` are released from their deadline.
pub fn inv_state_w(st: &State) -> Verdict {
    inv_state_w_with(st, Tolerance::EXACT)
}

pub fn inv_state_w_with(st: &State, tol: Tolerance) -> Verdict {
    if st.mode() != Mode::Normal {
        return Verdict::fail(INV_STATE_W, Witness::new("mode is not Normal"));
    }
    if tol.settled {
        if let Some(w) = structural_witness(st) {
            return Verdict::fail(INV_STATE_W, w);
        }
    }
    match first_missed_deadline(st, tol.deadline_slack, |j| j.exec <= j.job_type.wcet) {
        Some(w) => Verdict::fail(INV_STATE_W, w),
        None => Verdict::pass(INV_STATE_W),
    }
}

/// [`inv_state`], or Ft mode with a HI job running and every HI job within its deadline.
pub fn inv_state_ft(st: &State) -> Verdict {
    inv_state_ft_with(st, Tolerance::EXACT)
}

pub fn inv_state_ft_with(st: &State, tol: Tolerance) -> Verdict {
    let normal = inv_state_with(st, tol);
    if normal.passed() || st.mode() != Mode::Ft {
        return Verdict { name: INV_STATE_FT.into(), ..normal };
    }
    if tol.settled {
        if st.active().is_empty() {
            return Verdict::fail(INV_STATE_FT, Witness::new("Ft mode with no active job"));
        }
        match st.running_job() {
            None => return Verdict::fail(INV_STATE_FT, Witness::new("Ft mode with nothing running")),
            Some((id, info)) if !is_hi(info) => {
                return Verdict::fail(INV_STATE_FT, Witness::new("Ft mode running a LO-crit job").for_job(id))
            }
            Some(_) => {}
        }
    }
    match first_missed_deadline(st, tol.deadline_slack, is_hi) {
        Some(w) => Verdict::fail(INV_STATE_FT, w),
        None => Verdict::pass(INV_STATE_FT),
    }
}

/// Mode is Normal and the running job has the earliest deadline.
pub fn inv_edf(st: &State) -> Verdict {
    inv_edf_with(st, Tolerance::EXACT)
}

pub fn inv_edf_with(st: &State, tol: Tolerance) -> Verdict {
    if st.mode() != Mode::Normal {
        return Verdict::fail(INV_EDF, Witness::new("mode is not Normal"));
    }
    if !tol.settled {
        return Verdict::pass(INV_EDF);
    }
    let Some((_, running)) = st.running_job() else {
        return Verdict::pass(INV_EDF);
    };
    match st.active().iter().find(|(_, j)| j.deadline < running.deadline) {
        Some((id, j)) => Verdict::fail(
            INV_EDF,
            Witness::new(format!(
                "running deadline {} but this job's deadline is {}",
                running.deadline, j.deadline
            ))
            .for_job(*id),
        ),
        None => Verdict::pass(INV_EDF),
    }
}

/// [`inv_edf`], or Ft mode running the HI job with the earliest deadline among HI jobs.
pub fn inv_edf_ft(st: &State) -> Verdict {
    inv_edf_ft_with(st, Tolerance::EXACT)
}

pub fn inv_edf_ft_with(st: &State, tol: Tolerance) -> Verdict {
    let normal = inv_edf_with(st, tol);
    if normal.passed() || st.mode() != Mode::Ft {
        return Verdict { name: INV_EDF_FT.into(), ..normal };
    }
    if !tol.settled {
        return Verdict::pass(INV_EDF_FT);
    }
    let Some((run_id, running)) = st.running_job() else {
        return Verdict::fail(INV_EDF_FT, Witness::new("Ft mode with nothing running"));
    };
    if !is_hi(running) {
        return Verdict::fail(INV_EDF_FT, Witness::new("Ft mode running a LO-crit job").for_job(run_id));
    }
    match st
        .active()
        .iter()
        .find(|(_, j)| is_hi(j) && j.deadline < running.deadline)
    {
        Some((id, j)) => Verdict::fail(
            INV_EDF_FT,
            Witness::new(format!(
                "running HI deadline {} but this HI job's deadline is {}",
                running.deadline, j.deadline
            ))
            .for_job(*id),
        ),
        None => Verdict::pass(INV_EDF_FT),
    }
}

/// In Normal mode no job may have consumed more than `C`.
pub fn mode_down_trigger(st: &State) -> Verdict {
    if st.mode() != Mode::Normal {
        return Verdict::vacuous(MODE_DOWN_TRIGGER);
    }
    match st.active().iter().find(|(_, j)| j.exec > j.job_type.wcet) {
        Some((id, j)) => Verdict::fail(
            MODE_DOWN_TRIGGER,
            Witness::new(format!(
                "e = {} exceeds C = {} in Normal mode",
                j.exec, j.job_type.wcet
            ))
            .for_job(*id),
        ),
        None => Verdict::pass(MODE_DOWN_TRIGGER),
    }
}

/// Ft mode must not persist once the configured return condition holds.
pub fn mode_up_trigger(st: &State, rule: ModeUpRule) -> Verdict {
    if st.mode() != Mode::Ft {
        return Verdict::vacuous(MODE_UP_TRIGGER);
    }
    if rule.allows(st) {
        Verdict::fail(
            MODE_UP_TRIGGER,
            Witness::new(format!("still in Ft mode although {rule:?} holds")),
        )
    } else {
        Verdict::pass(MODE_UP_TRIGGER)
    }
}

/// The scheduler never changes the type of a job that stays active.
pub fn check_guar_scheduler(before: &State, after: &State) -> Verdict {
    for (id, a) in after.active() {
        if let Some(b) = before.job(*id) {
            if a.job_type != b.job_type {
                return Verdict::fail(
                    GUAR_SCHEDULER,
                    Witness::new(format!("type of job changed ({:?} -> {:?})", b.job_type, a.job_type))
                        .for_job(*id),
                );
            }
        }
    }
    Verdict::pass(GUAR_SCHEDULER)
}

fn rely_name(ft: bool) -> &'static str {
    if ft {
        RELY_SCHEDULER_FT
    } else {
        RELY_SCHEDULER
    }
}

/// Every job's consumption in `after` within the bound that applies in its
/// mode: `C` in Normal mode, `HC` for HI jobs in Ft mode (LO jobs free).
pub fn check_rely_scheduler(after: &State, ft: bool) -> Verdict {
    let name = rely_name(ft);
    match first_budget_overrun(after, ft) {
        Some(w) => Verdict::fail(name, w),
        None => Verdict::pass(name),
    }
}

fn first_budget_overrun(st: &State, ft: bool) -> Option<Witness> {
    st.active().iter().find_map(|(id, j)| {
        let limit = budget(j, st.mode(), ft)?;
        (j.exec > limit).then(|| {
            Witness::new(format!("e = {} exceeds its bound {limit}", j.exec)).for_job(*id)
        })
    })
}

/// Execution bound a job guarantees in the given mode, if any.
fn budget(job: &crate::model::JobInfo, mode: Mode, ft: bool) -> Option<Tick> {
    if ft && mode == Mode::Ft {
        job.job_type.hi.as_ref().map(|x| x.hc)
    } else {
        Some(job.job_type.wcet)
    }
}

/// True iff every job in `st` is within the bound its guarantee promises.
pub fn jobs_within_guarantee(st: &State, ft: bool) -> bool {
    first_budget_overrun(st, ft).is_none()
}

fn unknown_job(name: &str, id: JobId) -> Verdict {
    Verdict::fail(name, Witness::new("unknown job").for_job(id))
}

/// Job `id` stays within its execution bound at every sample containing it.
pub fn check_guar_job(trace: &Trace, id: JobId, ft: bool) -> Verdict {
    let mut seen = false;
    for (k, s) in trace.samples().iter().enumerate() {
        let Some(j) = s.state.job(id) else { continue };
        seen = true;
        if let Some(limit) = budget(j, s.state.mode(), ft) {
            if j.exec > limit {
                return Verdict::fail(
                    GUAR_JOB,
                    Witness::new(format!("e = {} exceeds {limit}", j.exec))
                        .at_sample(k)
                        .for_job(id),
                );
            }
        }
    }
    if seen {
        Verdict::pass(GUAR_JOB)
    } else {
        unknown_job(GUAR_JOB, id)
    }
}

/// Job `id` keeps its type and sees `t <= d` at every sample containing it.
pub fn check_rely_job(trace: &Trace, id: JobId) -> Verdict {
    match rely_job_witnesses(trace, id, trace.rho_s()) {
        None => unknown_job(RELY_JOB, id),
        Some(ws) => Verdict::from_witnesses(RELY_JOB, ws),
    }
}

/// `None` if the job never appears. LO jobs in Ft samples are exempt from
/// the deadline clause; the deadline is whatever `d` the sample carries.
fn rely_job_witnesses(trace: &Trace, id: JobId, slack: Tick) -> Option<Vec<Witness>> {
    let mut out = Vec::new();
    let mut first_type = None;
    for (k, s) in trace.samples().iter().enumerate() {
        let Some(j) = s.state.job(id) else { continue };
        let ty = first_type.get_or_insert_with(|| j.job_type.clone());
        if *ty != j.job_type {
            out.push(Witness::new("job type changed").at_sample(k).for_job(id));
        }
        let exempt = s.state.mode() == Mode::Ft && !is_hi(j);
        if !exempt && s.state.t() > j.deadline + slack {
            out.push(
                Witness::new(format!("t = {} past d = {}", s.state.t(), j.deadline))
                    .at_sample(k)
                    .for_job(id),
            );
        }
    }
    first_type.map(|_| out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "RELY-BROKEN")]
    RelyBroken,
}

impl Classification {
    /// Process exit code for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            Classification::Pass => 0,
            Classification::Fail => 4,
            Classification::RelyBroken => 5,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Pass => "PASS",
            Classification::Fail => "FAIL",
            Classification::RelyBroken => "RELY-BROKEN",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub classification: Classification,
    /// First sample at which an assumption was broken, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption_broken_at: Option<usize>,
    /// Sorted by predicate name.
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        self.classification.exit_code()
    }

    /// The scheduler's rely verdict, whichever variant is configured.
    pub fn rely_scheduler(&self) -> &Verdict {
        self.verdict(RELY_SCHEDULER)
            .or_else(|| self.verdict(RELY_SCHEDULER_FT))
            .expect("report always carries a rely-Scheduler verdict")
    }
}

/// Violations of one predicate, one entry per violating sample (or pair).
struct Collected {
    name: &'static str,
    hits: Vec<Witness>,
}

impl Collected {
    fn new(name: &'static str) -> Self {
        Collected { name, hits: Vec::new() }
    }

    fn note(&mut self, k: usize, v: Verdict) {
        if !v.passed() {
            let mut w = v.witness.unwrap_or_else(|| Witness::new("violated"));
            if w.sample.is_none() && w.pair.is_none() {
                w.sample = Some(k);
            }
            self.hits.push(w);
        }
    }

    fn first_position(&self) -> Option<usize> {
        self.hits.iter().filter_map(Witness::position).min()
    }

    /// Verdict where violations at or after `excused_from` are excused.
    fn verdict(mut self, excused_from: Option<usize>, broken_status: Status) -> Verdict {
        self.hits.sort_by_key(|w| (w.position(), w.job));
        let mut v = Verdict::from_witnesses(self.name, self.hits);
        if !v.passed() {
            let first = v.witness.as_ref().and_then(Witness::position);
            let excused = matches!((first, excused_from), (Some(f), Some(b)) if f >= b);
            if excused {
                v.status = broken_status;
            }
        }
        v
    }
}

/// Runs every check over the trace and classifies the outcome.
pub fn check_trace(trace: &Trace, model: &ArrivalModel, cfg: &MonitorConfig) -> Report {
    let ft = cfg.ft_enabled;
    let samples = trace.samples();
    let slack = trace.rho_s();

    let mut inv_s = Collected::new(INV_STATE);
    let mut inv_w = Collected::new(INV_STATE_W);
    let mut inv_ft = Collected::new(INV_STATE_FT);
    let mut edf = Collected::new(INV_EDF);
    let mut edf_ft = Collected::new(INV_EDF_FT);
    let mut down = Collected::new(MODE_DOWN_TRIGGER);
    let mut down_lo = Collected::new(MODE_DOWN_TRIGGER);
    let mut up = Collected::new(MODE_UP_TRIGGER);
    let mut guar_s = Collected::new(GUAR_SCHEDULER);
    let mut rely_s = Collected::new(rely_name(ft));

    let mut last_event_alpha: Option<Tick> = None;
    for (k, s) in samples.iter().enumerate() {
        if s.events.iter().any(|e| {
            !matches!(e.kind, EventKind::Overrun) && !(e.kind == EventKind::Arrival && e.job.is_none())
        }) {
            last_event_alpha = Some(s.alpha);
        }
        let settled = match last_event_alpha {
            Some(a) => s.alpha.get() - a.get() >= slack.get(),
            None => true,
        };
        let tol = Tolerance {
            deadline_slack: slack,
            settled,
        };
        let st = &s.state;
        inv_s.note(k, inv_state_with(st, tol));
        inv_w.note(k, inv_state_w_with(st, tol));
        inv_ft.note(k, inv_state_ft_with(st, tol));
        edf.note(k, inv_edf_with(st, tol));
        edf_ft.note(k, inv_edf_ft_with(st, tol));
        let v = mode_down_trigger(st);
        if !v.passed() {
            // A LO job past C is its own fault; only a HI overrun obliges a mode switch.
            let hi_over = st.active().values().any(|j| is_hi(j) && j.exec > j.job_type.wcet);
            if hi_over {
                down.note(k, v);
            } else {
                down_lo.note(k, v);
            }
        }
        up.note(k, mode_up_trigger(st, cfg.mode_up_rule));
        rely_s.note(k, check_rely_scheduler(st, ft));
        if k > 0 {
            let v = check_guar_scheduler(&samples[k - 1].state, st);
            if !v.passed() {
                let mut w = v.witness.unwrap_or_default();
                w.pair = Some((k - 1, k));
                guar_s.hits.push(w);
            }
        }
    }

    let mut guar_j = Collected::new(GUAR_JOB);
    let mut rely_j = Collected::new(RELY_JOB);
    for id in trace.job_ids() {
        let g = check_guar_job(trace, id, ft);
        if !g.passed() {
            guar_j.hits.extend(g.witness);
        }
        if let Some(ws) = rely_job_witnesses(trace, id, slack) {
            rely_j.hits.extend(ws);
        }
    }

    let arrival_hits = trace::arrival_violations(trace, model);
    let arrival_first = arrival_hits.iter().filter_map(Witness::position).min();
    let broken_at = [arrival_first, rely_s.first_position()]
        .into_iter()
        .flatten()
        .min();

    let sigma_a = if samples.is_empty() {
        Verdict::vacuous(trace::ARRIVAL_ASSUMPTION)
    } else {
        Verdict::from_witnesses(trace::ARRIVAL_ASSUMPTION, arrival_hits)
    };

    let mut verdicts = vec![
        sigma_a,
        trace::check_clock_tracking(trace),
        trace::check_exec_accounting(trace),
        inv_s.verdict(broken_at, Status::RelyBroken),
        inv_w.verdict(broken_at, Status::RelyBroken),
        inv_ft.verdict(broken_at, Status::RelyBroken),
        rely_j.verdict(broken_at, Status::RelyBroken),
        edf.verdict(None, Status::Fail),
        edf_ft.verdict(None, Status::Fail),
        if down.hits.is_empty() {
            down_lo.verdict(Some(0), Status::RelyBroken)
        } else {
            down.verdict(None, Status::Fail)
        },
        up.verdict(None, Status::Fail),
        guar_s.verdict(None, Status::Fail),
        // Assumption side: a violation means the environment broke its promise.
        rely_s.verdict(Some(0), Status::RelyBroken),
        guar_j.verdict(Some(0), Status::RelyBroken),
    ];

    let informational: &[&str] = if ft {
        &[INV_STATE, INV_STATE_W, INV_EDF]
    } else {
        &[INV_STATE_W, INV_STATE_FT, INV_EDF_FT, MODE_DOWN_TRIGGER, MODE_UP_TRIGGER]
    };
    for v in &mut verdicts {
        v.operative = !informational.contains(&v.name.as_str());
    }
    verdicts.sort_by(|a, b| a.name.cmp(&b.name));

    let classification = classify(&verdicts);
    Report {
        classification,
        assumption_broken_at: broken_at,
        verdicts,
    }
}

fn classify(verdicts: &[Verdict]) -> Classification {
    let operative = || verdicts.iter().filter(|v| v.operative);
    let is_assumption = |v: &Verdict| v.name == trace::ARRIVAL_ASSUMPTION;
    if operative().any(|v| v.is_fail() && !is_assumption(v)) {
        Classification::Fail
    } else if operative().any(|v| !v.passed()) {
        Classification::RelyBroken
    } else {
        Classification::Pass
    }
}

/// Per-sample check that jobs keeping their guarantees imply the scheduler's
/// rely holds. Returns the indices of samples where it does not.
pub fn rely_follows_from_job_guarantees(trace: &Trace, ft: bool) -> Vec<usize> {
    trace
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| jobs_within_guarantee(&s.state, ft) && !check_rely_scheduler(&s.state, ft).passed())
        .map(|(k, _)| k)
        .collect()
}

/// Count of verdicts per status, handy for summaries.
pub fn status_counts(report: &Report) -> BTreeMap<Status, usize> {
    let mut out = BTreeMap::new();
    for v in &report.verdicts {
        *out.entry(v.status).or_insert(0) += 1;
    }
    out
}
