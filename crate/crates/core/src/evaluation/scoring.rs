use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{PredictedLabel, Taxonomy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    /// Correct when the prediction is any of the segment's gold labels.
    FlexibleMulti,
    /// Correct only when the prediction equals the single gold label.
    StrictSingle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OtherHandling {
    /// Gold "Other" segments predicted as something else are left out of scoring.
    #[serde(rename = "opp115-ignore")]
    Opp115Ignore,
    /// Gold "Other" segments are dropped before scoring.
    PpgdprDiscard,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnparsableHandling {
    CountIncorrect,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoringPolicy {
    pub name: PolicyName,
    pub other_handling: OtherHandling,
    pub unparsable_handling: UnparsableHandling,
}

impl ScoringPolicy {
    pub const fn flexible_multi() -> Self {
        ScoringPolicy {
            name: PolicyName::FlexibleMulti,
            other_handling: OtherHandling::Opp115Ignore,
            unparsable_handling: UnparsableHandling::CountIncorrect,
        }
    }

    pub const fn strict_single() -> Self {
        ScoringPolicy {
            name: PolicyName::StrictSingle,
            other_handling: OtherHandling::PpgdprDiscard,
            unparsable_handling: UnparsableHandling::CountIncorrect,
        }
    }

    pub fn for_taxonomy(taxonomy: &Taxonomy) -> Result<Self> {
        taxonomy.scoring_default.parse()
    }

    pub fn with_other_handling(mut self, handling: OtherHandling) -> Self {
        self.other_handling = handling;
        self
    }

    pub fn with_unparsable_handling(mut self, handling: UnparsableHandling) -> Self {
        self.unparsable_handling = handling;
        self
    }
}

impl FromStr for ScoringPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flexible-multi" => Ok(ScoringPolicy::flexible_multi()),
            "strict-single" => Ok(ScoringPolicy::strict_single()),
            other => Err(Error::Config(format!(
                "unknown scoring policy `{other}` (expected flexible-multi or strict-single)"
            ))),
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyName::FlexibleMulti => "flexible-multi",
            PolicyName::StrictSingle => "strict-single",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
    Ignored,
    Discarded,
    /// Unparsable answer under [`UnparsableHandling::Exclude`].
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub segment_id: String,
    pub verdict: Verdict,
    pub predicted: PredictedLabel,
    pub gold_set: BTreeSet<String>,
}

/// Judges one prediction against its gold label set.
///
/// `other_label` is the taxonomy's catch-all id; without one, both "Other"
/// handlings are inert.
pub fn score_segment(
    segment_id: &str,
    predicted: &PredictedLabel,
    gold: &BTreeSet<String>,
    policy: &ScoringPolicy,
    other_label: Option<&str>,
) -> Result<SegmentOutcome> {
    if gold.is_empty() {
        return Err(Error::EvaluationInput(format!(
            "segment `{segment_id}` has no gold labels"
        )));
    }
    let gold_has_other = other_label.is_some_and(|o| gold.contains(o));
    let outcome = |verdict| SegmentOutcome {
        segment_id: segment_id.to_string(),
        verdict,
        predicted: predicted.clone(),
        gold_set: gold.clone(),
    };

    if policy.other_handling == OtherHandling::PpgdprDiscard && gold_has_other {
        return Ok(outcome(Verdict::Discarded));
    }
    if policy.name == PolicyName::StrictSingle && gold.len() != 1 {
        return Err(Error::EvaluationInput(format!(
            "strict-single scoring needs exactly one gold label, segment `{segment_id}` has {}",
            gold.len()
        )));
    }
    let Some(label) = predicted.category() else {
        return Ok(outcome(match policy.unparsable_handling {
            UnparsableHandling::CountIncorrect => Verdict::Incorrect,
            UnparsableHandling::Exclude => Verdict::Excluded,
        }));
    };
    if gold.contains(label) {
        return Ok(outcome(Verdict::Correct));
    }
    if policy.other_handling == OtherHandling::Opp115Ignore && gold_has_other {
        return Ok(outcome(Verdict::Ignored));
    }
    Ok(outcome(Verdict::Incorrect))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(labels: &[&str]) -> BTreeSet<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    fn verdict(pred: &str, g: &[&str], policy: ScoringPolicy) -> Verdict {
        score_segment("s", &PredictedLabel::from(pred), &gold(g), &policy, Some("other"))
            .unwrap()
            .verdict
    }

    #[test]
    fn flexible_accepts_any_gold_label() {
        let p = ScoringPolicy::flexible_multi();
        assert_eq!(verdict("data-security", &["data-security", "other"], p), Verdict::Correct);
        assert_eq!(verdict("policy-change", &["other"], p), Verdict::Ignored);
        assert_eq!(verdict("other", &["other"], p), Verdict::Correct);
        assert_eq!(verdict("policy-change", &["data-security"], p), Verdict::Incorrect);
    }

    #[test]
    fn strict_requires_equality_and_discards_other() {
        let p = ScoringPolicy::strict_single();
        assert_eq!(verdict("right-to-access", &["right-to-access"], p), Verdict::Correct);
        assert_eq!(verdict("right-to-access", &["other"], p), Verdict::Discarded);
        assert_eq!(verdict("unparsable", &["other"], p), Verdict::Discarded);
        assert_eq!(verdict("contact-details", &["right-to-access"], p), Verdict::Incorrect);
    }

    #[test]
    fn unparsable_handling() {
        let p = ScoringPolicy::flexible_multi();
        assert_eq!(verdict("unparsable", &["data-security"], p), Verdict::Incorrect);
        assert_eq!(verdict("unparsable", &["other"], p), Verdict::Incorrect);
        let p = p.with_unparsable_handling(UnparsableHandling::Exclude);
        assert_eq!(verdict("unparsable", &["data-security"], p), Verdict::Excluded);
    }

    #[test]
    fn errors() {
        let p = ScoringPolicy::strict_single();
        assert!(score_segment("s", &"a".into(), &gold(&[]), &p, None).is_err());
        assert!(score_segment("s", &"a".into(), &gold(&["a", "b"]), &p, None).is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("flexible-multi".parse::<ScoringPolicy>().unwrap(), ScoringPolicy::flexible_multi());
        assert_eq!("strict-single".parse::<ScoringPolicy>().unwrap().other_handling, OtherHandling::PpgdprDiscard);
        assert!("lenient".parse::<ScoringPolicy>().is_err());
        let json = serde_json::to_string(&ScoringPolicy::flexible_multi()).unwrap();
        assert_eq!(
            json,
            r#"{"name":"flexible-multi","other_handling":"opp115-ignore","unparsable_handling":"count-incorrect"}"#
        );
    }
}
