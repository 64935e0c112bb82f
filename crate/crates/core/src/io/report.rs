//! Report rendering for the command line.

use std::fmt::Write;

use crate::monitor::Report;

/// One line per verdict after the classification line.
pub fn render_human(report: &Report) -> String {
    let mut out = format!("classification: {}\n", report.classification);
    if let Some(k) = report.assumption_broken_at {
        let _ = writeln!(out, "assumption broken at sample {k}");
    }
    for v in &report.verdicts {
        let _ = writeln!(out, "  {v}");
    }
    out
}

pub fn render_machine(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::Classification;
    use crate::verdict::{Verdict, Witness};

    fn sample() -> Report {
        Report {
            classification: Classification::Fail,
            assumption_broken_at: None,
            verdicts: vec![
                Verdict::pass("inv-EDF"),
                Verdict::fail("inv-State", Witness::new("deadline passed").at_sample(3)),
            ],
        }
    }

    #[test]
    fn human_lists_each_verdict() {
        let text = render_human(&sample());
        assert!(text.starts_with("classification: FAIL\n"));
        assert!(text.contains("PASS        inv-EDF"));
        assert!(text.contains("FAIL        inv-State -- sample 3: deadline passed"));
    }

    #[test]
    fn machine_output_round_trips() {
        let r = sample();
        let back: Report = serde_json::from_str(&render_machine(&r)).unwrap();
        assert_eq!(back, r);
    }
}
