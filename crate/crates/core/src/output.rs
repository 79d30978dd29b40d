//! Rendering of results as JSON, CSV and fixed-precision text.
//!
//! JSON and CSV carry shortest round-trip decimals; text uses 12
//! significant digits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::experiment::{CoincidenceTally, ContextualityReport, JointDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Text,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Shortest decimal that parses back to the same `f64`.
pub fn round_trip(x: f64) -> String {
    format!("{x:?}")
}

/// `x` with 12 significant digits, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{e}", trim_zeros(mantissa.to_string())),
            None => s,
        }
    }
}

/// Probability with 12 decimals, trailing zeros trimmed. Round-off far
/// below that resolution prints as `0`.
pub fn prob12(p: f64) -> String {
    let s = trim_zeros(format!("{p:.12}"));
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn distribution_csv(d: &JointDistribution) -> String {
    let mut out = String::from("side1_label,side2_label,probability\n");
    for (i, row) in d.probabilities.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                round_trip(d.side1_labels[i]),
                round_trip(d.side2_labels[j]),
                round_trip(*p)
            );
        }
    }
    out
}

pub fn tally_csv(t: &CoincidenceTally) -> String {
    let mut out = String::from("side1_label,side2_label,count\n");
    for (i, row) in t.counts.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{c}",
                round_trip(t.side1_labels[i]),
                round_trip(t.side2_labels[j])
            );
        }
    }
    out
}

fn table<T>(
    side1: &[f64; 3],
    side2: &[f64; 3],
    cells: &[[T; 3]; 3],
    cell: impl Fn(&T) -> String,
) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>16}", "side1 \\ side2");
    for l in side2 {
        let _ = write!(out, " {:>16}", sig12(*l));
    }
    out.push('\n');
    for (i, row) in cells.iter().enumerate() {
        let _ = write!(out, "{:>16}", sig12(side1[i]));
        for c in row {
            let _ = write!(out, " {:>16}", cell(c));
        }
        out.push('\n');
    }
    out
}

pub fn distribution_text(d: &JointDistribution) -> String {
    table(&d.side1_labels, &d.side2_labels, &d.probabilities, |p| {
        prob12(*p)
    })
}

pub fn tally_text(t: &CoincidenceTally) -> String {
    let mut out = format!(
        "shots {}  seed {}  streams {}\nrng {}\n",
        t.shots, t.seed, t.streams, t.algorithm
    );
    out.push_str(&table(&t.side1_labels, &t.side2_labels, &t.counts, |c| {
        c.to_string()
    }));
    out
}

pub fn contextuality_text(r: &ContextualityReport) -> String {
    let mut out = String::new();
    let line = |out: &mut String, c: &crate::experiment::CellReport| {
        let count = c
            .count
            .map(|n| format!("  ({n} counts)"))
            .unwrap_or_default();
        let _ = writeln!(out, "  {:<16} {}{count}", c.cell, prob12(c.probability));
    };
    out.push_str("forbidden coincidences:\n");
    for c in &r.forbidden {
        line(&mut out, c);
    }
    out.push_str("shared ray:\n");
    line(&mut out, &r.shared);
    out.push_str("allowed cross cells:\n");
    for c in &r.allowed_cross {
        line(&mut out, c);
    }
    if let Some(bound) = r.forbidden_upper_bound {
        let _ = writeln!(
            out,
            "forbidden probability upper bound (99.9%): {}",
            sig12(bound)
        );
    }
    let _ = writeln!(out, "verdict: {}", r.verdict);
    out
}
