//! Rendering evaluation reports and comparing them with published results.
//!
//! Numbers are printed with two decimals, rounding halves up. Classes that were
//! neither predicted nor annotated are shown as `-` and are left out of the
//! macro average.

mod reference;

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

pub use reference::{all_references, reference, reference_keys, ReferenceResults, ReferenceRow, MACRO_F1_SUMMARY};

use crate::evaluation::{ClassMetrics, EvaluationReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Two-decimal rendering with halves rounded away from zero. The small bias
/// absorbs binary representation error (0.145 is stored as 0.14499…).
pub fn two_decimals(x: f64) -> String {
    let cents = (x.abs() * 100.0 + 0.5 + 1e-9).floor();
    if cents == 0.0 {
        return "0.00".into();
    }
    let sign = if x < 0.0 { "-" } else { "" };
    format!("{sign}{}.{:02}", (cents / 100.0).floor() as u64, (cents % 100.0) as u64)
}

fn cells(c: &ClassMetrics) -> [String; 3] {
    if c.participates {
        [two_decimals(c.precision), two_decimals(c.recall), two_decimals(c.f1)]
    } else {
        ["-".into(), "-".into(), "-".into()]
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(report.to_json()? + "\n"),
        ReportFormat::Csv => Ok(render_csv(report)),
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

fn render_markdown(r: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| Label | P | R | F |");
    let _ = writeln!(out, "|:--|--:|--:|--:|");
    for c in &r.per_class {
        let [p, rc, f] = cells(c);
        let _ = writeln!(out, "| {} | {p} | {rc} | {f} |", c.display_name);
    }
    let _ = writeln!(out, "| Accuracy |  |  | {} |", two_decimals(r.accuracy));
    let m = &r.macro_avg;
    let _ = writeln!(
        out,
        "| Macro Average | {} | {} | {} |",
        two_decimals(m.precision),
        two_decimals(m.recall),
        two_decimals(m.f1)
    );
    let m = &r.micro_avg;
    let _ = writeln!(
        out,
        "| Micro Average | {} | {} | {} |",
        two_decimals(m.precision),
        two_decimals(m.recall),
        two_decimals(m.f1)
    );
    let n = &r.counts;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Taxonomy: {}. Scoring: {}. Segments: {}, scored: {}, correct: {}, ignored: {}, discarded: {}, excluded: {}, unparsable: {}.",
        r.taxonomy, r.policy.name, n.segments, n.scored, n.correct, n.ignored, n.discarded, n.excluded, n.unparsable
    );
    out
}

fn render_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("label,precision,recall,f1\n");
    for c in &r.per_class {
        let [p, rc, f] = cells(c);
        let _ = writeln!(out, "{},{p},{rc},{f}", csv_field(&c.display_name));
    }
    let _ = writeln!(out, "Accuracy,,,{}", two_decimals(r.accuracy));
    for (name, m) in [("Macro Average", &r.macro_avg), ("Micro Average", &r.micro_avg)] {
        let _ = writeln!(
            out,
            "{name},{},{},{}",
            two_decimals(m.precision),
            two_decimals(m.recall),
            two_decimals(m.f1)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub label: String,
    /// Measured minus published, unrounded.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub reference: &'static str,
    pub rows: Vec<DeltaRow>,
    pub accuracy: Option<f64>,
    pub macro_avg: DeltaRow,
    /// Measured classes that the reference does not report.
    pub unmatched: Vec<String>,
}

/// Differences between a report and a published result set, class by class.
pub fn compare(report: &EvaluationReport, reference: &ReferenceResults) -> Result<Comparison> {
    if report.taxonomy != reference.taxonomy {
        return Err(Error::ClassSetMismatch(format!(
            "report is for taxonomy `{}`, reference `{}` is for `{}`",
            report.taxonomy, reference.key, reference.taxonomy
        )));
    }
    let mut rows = Vec::with_capacity(reference.rows.len());
    for row in &reference.rows {
        let measured = report.class(row.category_id).ok_or_else(|| {
            Error::ClassSetMismatch(format!(
                "reference `{}` reports `{}`, which the evaluation does not contain",
                reference.key, row.category_id
            ))
        })?;
        rows.push(DeltaRow {
            label: measured.display_name.clone(),
            precision: measured.precision - row.precision,
            recall: measured.recall - row.recall,
            f1: measured.f1 - row.f1,
        });
    }
    let unmatched = report
        .per_class
        .iter()
        .filter(|c| c.participates && !reference.rows.iter().any(|r| r.category_id == c.id))
        .map(|c| c.display_name.clone())
        .collect();
    let (p, r, f) = reference.macro_avg;
    Ok(Comparison {
        reference: reference.key,
        rows,
        accuracy: reference.accuracy.map(|a| report.accuracy - a),
        macro_avg: DeltaRow {
            label: "Macro Average".into(),
            precision: report.macro_avg.precision - p,
            recall: report.macro_avg.recall - r,
            f1: report.macro_avg.f1 - f,
        },
        unmatched,
    })
}

/// Markdown delta table (measured minus published).
pub fn compare_to_reference(report: &EvaluationReport, reference: &ReferenceResults) -> Result<String> {
    let cmp = compare(report, reference)?;
    let mut out = String::new();
    let _ = writeln!(out, "Compared with {} ({}), measured minus published:", reference.model, cmp.reference);
    let _ = writeln!(out);
    let _ = writeln!(out, "| Label | ΔP | ΔR | ΔF |");
    let _ = writeln!(out, "|:--|--:|--:|--:|");
    for row in cmp.rows.iter().chain(std::iter::once(&cmp.macro_avg)) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            row.label,
            two_decimals(row.precision),
            two_decimals(row.recall),
            two_decimals(row.f1)
        );
    }
    if let Some(a) = cmp.accuracy {
        let _ = writeln!(out, "| Accuracy |  |  | {} |", two_decimals(a));
    }
    if !cmp.unmatched.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Not reported by the reference: {}.", cmp.unmatched.join(", "));
    }
    Ok(out)
}
