//! Integer time grid shared by durations, clock values and external time.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A non-negative number of simulation ticks.
///
/// The same grid carries relative durations (`D`, `C`, `AD`, `HC`), computer
/// clock values (`t`, absolute deadlines) and external time (`alpha`). What a
/// tick means in the real world is a documentation convention only; the
/// default reading is one microsecond.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tick(pub u64);

impl Tick {
    pub const ZERO: Tick = Tick(0);

    pub const fn new(value: u64) -> Self {
        Tick(value)
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, rhs: Tick) -> Tick {
        Tick(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: Tick) -> Option<Tick> {
        self.0.checked_sub(rhs.0).map(Tick)
    }

    /// `|self - other|`
    pub fn abs_diff(self, other: Tick) -> u64 {
        self.0.abs_diff(other.0)
    }

    /// Equality within a precision: `|self - other| <= rho`.
    pub fn within(self, other: Tick, rho: Tick) -> bool {
        self.abs_diff(other) <= rho.0
    }

    /// Shift by a signed offset, saturating at zero.
    pub fn offset(self, delta: i64) -> Tick {
        if delta >= 0 {
            Tick(self.0.saturating_add(delta as u64))
        } else {
            Tick(self.0.saturating_sub(delta.unsigned_abs()))
        }
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for Tick {
    fn from(v: u64) -> Self {
        Tick(v)
    }
}

impl Add for Tick {
    type Output = Tick;
    fn add(self, rhs: Tick) -> Tick {
        Tick(self.0 + rhs.0)
    }
}

impl AddAssign for Tick {
    fn add_assign(&mut self, rhs: Tick) {
        self.0 += rhs.0;
    }
}

impl Sub for Tick {
    type Output = Tick;
    fn sub(self, rhs: Tick) -> Tick {
        Tick(self.0 - rhs.0)
    }
}

impl Mul<u64> for Tick {
    type Output = Tick;
    fn mul(self, rhs: u64) -> Tick {
        Tick(self.0 * rhs)
    }
}

impl Sum for Tick {
    fn sum<I: Iterator<Item = Tick>>(iter: I) -> Tick {
        Tick(iter.map(|t| t.0).sum())
    }
}
