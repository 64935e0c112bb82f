//! Pass/fail outcomes of individual predicates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::JobId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    /// The predicate's guard never held, so it passes trivially.
    #[serde(rename = "VACUOUS")]
    Vacuous,
    /// Violated, but only after an assumption the obligation depends on was
    /// already broken; the scheduler is excused.
    #[serde(rename = "RELY-BROKEN")]
    RelyBroken,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn passed(self) -> bool {
        matches!(self, Status::Pass | Status::Vacuous)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Vacuous => "VACUOUS",
            Status::RelyBroken => "RELY-BROKEN",
            Status::Fail => "FAIL",
        })
    }
}

/// Where a predicate was violated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<JobId>,
    pub message: String,
}

impl Witness {
    pub fn new(message: impl Into<String>) -> Self {
        Witness {
            message: message.into(),
            ..Witness::default()
        }
    }

    pub fn at_sample(mut self, index: usize) -> Self {
        self.sample = Some(index);
        self
    }

    pub fn at_pair(mut self, first: usize, second: usize) -> Self {
        self.pair = Some((first, second));
        self
    }

    pub fn for_job(mut self, id: JobId) -> Self {
        self.job = Some(id);
        self
    }

    /// Earliest sample index this witness refers to.
    pub fn position(&self) -> Option<usize> {
        match (self.sample, self.pair) {
            (Some(s), Some((a, _))) => Some(s.min(a)),
            (Some(s), None) => Some(s),
            (None, Some((a, _))) => Some(a),
            (None, None) => None,
        }
    }

    /// True iff the witness mentions sample `index` directly or as part of a pair.
    pub fn touches(&self, index: usize) -> bool {
        self.sample == Some(index) || matches!(self.pair, Some((a, b)) if a == index || b == index)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = self.sample {
            write!(f, "sample {s}: ")?;
        }
        if let Some((a, b)) = self.pair {
            write!(f, "samples {a}..{b}: ")?;
        }
        if let Some(j) = self.job {
            write!(f, "job {j}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// Whether this predicate counts toward the overall classification
    /// under the active monitor configuration.
    #[serde(default = "yes")]
    pub operative: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default)]
    pub violations: usize,
}

fn yes() -> bool {
    true
}

impl Verdict {
    pub fn pass(name: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            status: Status::Pass,
            operative: true,
            witness: None,
            violations: 0,
        }
    }

    pub fn vacuous(name: impl Into<String>) -> Self {
        Verdict {
            status: Status::Vacuous,
            ..Verdict::pass(name)
        }
    }

    pub fn fail(name: impl Into<String>, witness: Witness) -> Self {
        Verdict {
            name: name.into(),
            status: Status::Fail,
            operative: true,
            witness: Some(witness),
            violations: 1,
        }
    }

    /// FAIL carrying the first of `witnesses`, or PASS when empty.
    pub fn from_witnesses(name: impl Into<String>, witnesses: Vec<Witness>) -> Self {
        let n = witnesses.len();
        match witnesses.into_iter().next() {
            None => Verdict::pass(name),
            Some(w) => Verdict {
                violations: n,
                ..Verdict::fail(name, w)
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.status.passed()
    }

    pub fn is_fail(&self) -> bool {
        self.status == Status::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<11} {}", self.status.to_string(), self.name)?;
        if !self.operative {
            f.write_str(" (informational)")?;
        }
        if let Some(w) = &self.witness {
            write!(f, " -- {w}")?;
            if self.violations > 1 {
                write!(f, " (+{} more)", self.violations - 1)?;
            }
        }
        Ok(())
    }
}
