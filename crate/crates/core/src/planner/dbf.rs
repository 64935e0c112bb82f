//! Demand-bound functions and the processor-demand criterion.

/// Sporadic task as seen by the demand test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DbfTask {
    pub c: u64,
    pub d: u64,
    pub t: u64,
    /// Release jitter, two-sided: releases fall within `k*t ± j`.
    pub j: u64,
}

impl DbfTask {
    /// Maximum demand of jobs released and due inside any window of length `l`.
    pub fn dbf(&self, l: u64) -> u128 {
        if l < self.d {
            return 0;
        }
        let count = (l - self.d + 2 * self.j) / self.t + 1;
        count as u128 * self.c as u128
    }

    /// Window lengths at which `dbf` steps, up to `bound`.
    fn steps(&self, bound: u64, out: &mut Vec<u64>) {
        out.push(self.d);
        // later jumps where (l - d + 2j) reaches a multiple of t
        let mut l = self.d + self.t * (1 + 2 * self.j / self.t) - 2 * self.j;
        while l <= bound {
            out.push(l);
            l += self.t;
        }
    }
}

/// First window length with demand above supply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overload {
    pub at: u64,
    pub demand: u128,
}

/// Checks `sum dbf(l) <= l` at every step point up to `bound`.
pub fn demand_test(tasks: &[DbfTask], bound: u64) -> Result<(), Overload> {
    let mut points = Vec::new();
    for t in tasks {
        t.steps(bound, &mut points);
    }
    points.sort_unstable();
    points.dedup();
    for l in points.into_iter().filter(|&l| l <= bound) {
        let demand: u128 = tasks.iter().map(|t| t.dbf(l)).sum();
        if demand > l as u128 {
            return Err(Overload { at: l, demand });
        }
    }
    Ok(())
}

/// HI task after a switch to Ft mode: `c` and `dv` are its Normal-mode
/// budget and virtual deadline, `hc` and `dreal` its Ft-mode ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HiModeTask {
    pub c: u64,
    pub hc: u64,
    pub dv: u64,
    pub dreal: u64,
    pub t: u64,
    pub j: u64,
}

impl HiModeTask {
    fn ad(&self) -> u64 {
        self.dreal - self.dv
    }

    /// Ft-mode demand in a window of length `l`, crediting the work a
    /// carry-over job must already have done in Normal mode.
    pub fn dbf(&self, l: u64) -> u128 {
        let ad = self.ad();
        if l < ad {
            return 0;
        }
        let full = ((l - ad + 2 * self.j) / self.t + 1) as u128 * self.hc as u128;
        let done = if self.j > 0 {
            0
        } else {
            let n = l % self.t;
            if n >= ad && n < self.dreal {
                (self.c + ad).saturating_sub(n) as u128
            } else {
                0
            }
        };
        full.saturating_sub(done)
    }

    fn steps(&self, bound: u64, out: &mut Vec<u64>) {
        let ad = self.ad();
        out.extend([ad, ad.saturating_sub(1)]);
        let mut base = ad.saturating_sub(2 * self.j);
        loop {
            for p in [base, base + 1, base + self.c, base + self.c + 1] {
                if p <= bound {
                    out.push(p);
                    out.push(p.saturating_sub(1));
                }
            }
            if base > bound {
                break;
            }
            base += self.t;
        }
    }
}

/// Ft-mode demand test over HI tasks with carry-over credit.
pub fn hi_mode_test(tasks: &[HiModeTask], bound: u64) -> Result<(), Overload> {
    let mut points = Vec::new();
    for t in tasks {
        t.steps(bound, &mut points);
    }
    points.sort_unstable();
    points.dedup();
    for l in points.into_iter().filter(|&l| l > 0 && l <= bound) {
        let demand: u128 = tasks.iter().map(|t| t.dbf(l)).sum();
        if demand > l as u128 {
            return Err(Overload { at: l, demand });
        }
    }
    Ok(())
}
