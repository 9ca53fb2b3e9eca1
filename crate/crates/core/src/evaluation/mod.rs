//! Scoring predictions against gold labels.
//!
//! Evaluation is a pure function of predictions, segments, taxonomy and
//! scoring policy: each labeled segment gets a [`Verdict`], verdicts are
//! tallied into per-class TP/FP/FN counts, and the counts are turned into
//! precision, recall, F1 and accuracy.

mod metrics;
mod scoring;

use std::collections::{HashMap, HashSet};

pub use metrics::{
    compute_metrics, prf, tally, Averages, ClassCounts, ClassMetrics, ConfusionTally, EvaluationReport,
    OutcomeCounts,
};
pub use scoring::{
    score_segment, OtherHandling, PolicyName, ScoringPolicy, SegmentOutcome, UnparsableHandling, Verdict,
};

use crate::corpus::{Prediction, Segment, Taxonomy};
use crate::error::{Error, Result};

/// Scores every labeled segment and returns the per-segment outcomes in
/// segment order.
pub fn score_all(
    predictions: &[Prediction],
    segments: &[Segment],
    policy: &ScoringPolicy,
    taxonomy: &Taxonomy,
) -> Result<Vec<SegmentOutcome>> {
    let known: HashSet<&str> = segments.iter().map(|s| s.segment_id.as_str()).collect();
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !known.contains(p.segment_id.as_str()) {
            return Err(Error::EvaluationInput(format!(
                "prediction for unknown segment `{}`",
                p.segment_id
            )));
        }
        if by_id.insert(&p.segment_id, p).is_some() {
            return Err(Error::EvaluationInput(format!(
                "more than one prediction for segment `{}`",
                p.segment_id
            )));
        }
        if let Some(label) = p.predicted_label.category() {
            if !taxonomy.contains(label) {
                return Err(Error::EvaluationInput(format!(
                    "segment `{}` predicted `{label}`, which is not a {} category",
                    p.segment_id, taxonomy.name
                )));
            }
        }
    }

    let other = taxonomy.other_label();
    segments
        .iter()
        .filter(|s| !s.gold_labels.is_empty())
        .map(|s| {
            let p = by_id.get(s.segment_id.as_str()).ok_or_else(|| {
                Error::EvaluationInput(format!("no prediction for labeled segment `{}`", s.segment_id))
            })?;
            score_segment(&s.segment_id, &p.predicted_label, &s.gold_labels, policy, other)
        })
        .collect()
}

/// Full evaluation: scoring, tallying and metric computation.
///
/// Segments without gold labels are skipped; predictions for them are
/// allowed and have no effect.
pub fn evaluate(
    predictions: &[Prediction],
    segments: &[Segment],
    policy: &ScoringPolicy,
    taxonomy: &Taxonomy,
) -> Result<EvaluationReport> {
    let outcomes = score_all(predictions, segments, policy, taxonomy)?;
    compute_metrics(&tally(&outcomes, taxonomy, policy))
}
