use serde::{Deserialize, Serialize};

use super::scoring::{ScoringPolicy, SegmentOutcome, Verdict};
use crate::corpus::Taxonomy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub id: String,
    pub display_name: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassCounts {
    /// A class takes part in macro averages only if it was predicted or annotated.
    pub fn participates(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    /// Labeled segments that entered scoring.
    pub segments: u64,
    /// Segments with a correct or incorrect verdict.
    pub scored: u64,
    pub correct: u64,
    pub incorrect: u64,
    pub ignored: u64,
    pub discarded: u64,
    pub excluded: u64,
    /// Scored segments whose prediction was unparsable.
    pub unparsable: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTally {
    pub taxonomy: String,
    pub policy: ScoringPolicy,
    pub classes: Vec<ClassCounts>,
    pub counts: OutcomeCounts,
}

impl ConfusionTally {
    pub fn class(&self, id: &str) -> Option<&ClassCounts> {
        self.classes.iter().find(|c| c.id == id)
    }

    fn slot(&mut self, id: &str) -> &mut ClassCounts {
        let i = match self.classes.iter().position(|c| c.id == id) {
            Some(i) => i,
            None => {
                self.classes.push(ClassCounts {
                    id: id.to_string(),
                    display_name: id.to_string(),
                    tp: 0,
                    fp: 0,
                    fn_: 0,
                });
                self.classes.len() - 1
            }
        };
        &mut self.classes[i]
    }
}

/// Accumulates per-class counts. Classes appear in taxonomy order, followed by
/// the gold-only catch-all label and then any label the taxonomy does not know.
pub fn tally(outcomes: &[SegmentOutcome], taxonomy: &Taxonomy, policy: &ScoringPolicy) -> ConfusionTally {
    let mut classes: Vec<ClassCounts> = taxonomy
        .categories
        .iter()
        .map(|c| ClassCounts {
            id: c.id.clone(),
            display_name: c.display_name.clone(),
            tp: 0,
            fp: 0,
            fn_: 0,
        })
        .collect();
    if let Some(reserved) = &taxonomy.reserved_other_id {
        classes.push(ClassCounts {
            id: reserved.clone(),
            display_name: "Other".into(),
            tp: 0,
            fp: 0,
            fn_: 0,
        });
    }
    let mut t = ConfusionTally {
        taxonomy: taxonomy.name.clone(),
        policy: *policy,
        classes,
        counts: OutcomeCounts::default(),
    };

    for o in outcomes {
        t.counts.segments += 1;
        match o.verdict {
            Verdict::Correct => {
                t.counts.scored += 1;
                t.counts.correct += 1;
                if let Some(p) = o.predicted.category() {
                    t.slot(p).tp += 1;
                }
            }
            Verdict::Incorrect => {
                t.counts.scored += 1;
                t.counts.incorrect += 1;
                match o.predicted.category() {
                    Some(p) => t.slot(p).fp += 1,
                    None => t.counts.unparsable += 1,
                }
                for g in &o.gold_set {
                    t.slot(g).fn_ += 1;
                }
            }
            Verdict::Ignored => t.counts.ignored += 1,
            Verdict::Discarded => t.counts.discarded += 1,
            Verdict::Excluded => t.counts.excluded += 1,
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub id: String,
    pub display_name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// False when the class was neither predicted nor annotated.
    pub participates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub taxonomy: String,
    pub policy: ScoringPolicy,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub micro_avg: Averages,
    pub counts: OutcomeCounts,
}

impl EvaluationReport {
    pub fn class(&self, id: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 from raw counts, with every 0/0 taken as 0.
/// F1 uses the count form 2TP / (2TP + FP + FN), which equals the harmonic
/// mean of precision and recall whenever that is defined.
pub fn prf(tp: u64, fp: u64, fn_: u64) -> Averages {
    Averages {
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}

pub fn compute_metrics(t: &ConfusionTally) -> Result<EvaluationReport> {
    if t.counts.scored == 0 {
        return Err(Error::NothingScored);
    }
    let per_class: Vec<ClassMetrics> = t
        .classes
        .iter()
        .map(|c| {
            let m = prf(c.tp, c.fp, c.fn_);
            ClassMetrics {
                id: c.id.clone(),
                display_name: c.display_name.clone(),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                support: c.tp + c.fn_,
                participates: c.participates(),
            }
        })
        .collect();

    let participating: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.participates).collect();
    let n = participating.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if participating.is_empty() {
            0.0
        } else {
            participating.iter().map(|c| f(c)).sum::<f64>() / n
        }
    };
    let macro_avg = Averages {
        precision: mean(|c| c.precision),
        recall: mean(|c| c.recall),
        f1: mean(|c| c.f1),
    };

    let (tp, fp, fn_) = t
        .classes
        .iter()
        .fold((0, 0, 0), |(a, b, c), k| (a + k.tp, b + k.fp, c + k.fn_));

    Ok(EvaluationReport {
        taxonomy: t.taxonomy.clone(),
        policy: t.policy,
        per_class,
        accuracy: ratio(t.counts.correct, t.counts.scored),
        macro_avg,
        micro_avg: prf(tp, fp, fn_),
        counts: t.counts.clone(),
    })
}
