//! Offline keyword backend.
//!
//! The answer depends only on the prompt: the target text (everything after
//! the task-instruction line) is lowercased and matched against a keyword
//! table picked by which annotation scheme the prompt describes. The first
//! table row with a matching keyword supplies the answer.

use super::{Backend, BackendError, CompletionRequest};

pub const MOCK_MODEL_ID: &str = "mock-keyword-v1";

const INSTRUCTION_START: &str = "For the text of privacy policy I show you below";

type KeywordTable = &'static [(&'static [&'static str], &'static str)];

const OPP_115_TABLE: KeywordTable = &[
    (&["do not track", "do-not-track"], "Do Not Track"),
    (&["how long", "retain", "retention", "stored for"], "Data Retention"),
    (&["children", "under the age", "california", "europe"], "International & Specific Audiences"),
    (&["secur", "encrypt", "safeguard", "protected"], "Data Security"),
    (&["changes to this", "change this policy", "update this policy", "amend"], "Policy Change"),
    (&["access, edit", "delete your", "correct your", "access your", "update your information"], "User Access, Edit, & Deletion"),
    (&["opt out", "opt-out", "unsubscribe", "your choice", "you may choose"], "User Choice/Control"),
    (&["third part", "share", "partners", "advertisers"], "Third Party Sharing/Collection"),
    (&["collect", "we use"], "First Party Collection/Use"),
];
const OPP_115_FALLBACK: &str = "Other";

const PPGDPR_TABLE: KeywordTable = &[
    (&["complaint", "supervisory authority"], "Right to Lodge a Complaint"),
    (&["portab", "transmit"], "Right to Data Portability"),
    (&["object to"], "Right to Object to Processing"),
    (&["restrict"], "Right to Restrict of Processing"),
    (&["rectif", "erase", "erasure", "delete"], "Right to Rectify or Erase"),
    (&["access"], "Right to Access"),
    (&["contact", "data protection officer", "email us"], "Contact Details"),
    (&["how long", "retain", "retention"], "Data Retention Period"),
    (&["purpose", "in order to", "we use"], "Data Processing Purposes"),
    (&["collect"], "Collect Personal Information"),
];
const PPGDPR_FALLBACK: &str = "None of the categories apply.";

#[derive(Debug, Clone, Default)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        MockBackend
    }

    /// Target text of a rendered prompt.
    pub fn target_text(prompt: &str) -> &str {
        let Some(start) = prompt.find(INSTRUCTION_START) else {
            return prompt.trim();
        };
        let after = &prompt[start..];
        match after.find('\n') {
            Some(nl) => after[nl..].trim(),
            None => "",
        }
    }

    pub fn answer(prompt: &str) -> &'static str {
        let (table, fallback) = if prompt.contains("app's privacy policy") {
            (PPGDPR_TABLE, PPGDPR_FALLBACK)
        } else {
            (OPP_115_TABLE, OPP_115_FALLBACK)
        };
        let target = Self::target_text(prompt).to_lowercase();
        table
            .iter()
            .find(|(keywords, _)| keywords.iter().any(|k| target.contains(k)))
            .map_or(fallback, |&(_, answer)| answer)
    }
}

impl Backend for MockBackend {
    fn is_live(&self) -> bool {
        false
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        Ok(Self::answer(request.prompt).to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::parse::parse_label;
    use crate::corpus::{load_taxonomy, Segment, SegmentKind};
    use crate::prompting::build_prompt;

    fn answer_for(taxonomy: &str, text: &str) -> &'static str {
        let t = load_taxonomy(taxonomy).unwrap();
        let seg = Segment::new("p", 0, SegmentKind::Paragraph, text.into());
        MockBackend::answer(&build_prompt(&t, &seg).unwrap().prompt_text)
    }

    #[test]
    fn retention_text_maps_to_data_retention() {
        assert_eq!(
            answer_for("opp-115", "This section explains how long user information is stored."),
            "Data Retention"
        );
    }

    #[test]
    fn category_block_is_not_mistaken_for_target() {
        // the prefix mentions every keyword, the target none of them
        assert_eq!(answer_for("opp-115", "Welcome to our website."), "Other");
        assert_eq!(answer_for("ppgdpr", "Welcome."), PPGDPR_FALLBACK);
    }

    #[test]
    fn every_answer_parses() {
        for (table, name) in [(OPP_115_TABLE, "opp-115"), (PPGDPR_TABLE, "ppgdpr")] {
            let t = load_taxonomy(name).unwrap();
            for (_, answer) in table {
                assert!(!parse_label(answer, &t).is_unparsable(), "{answer}");
            }
        }
        let t = load_taxonomy("ppgdpr").unwrap();
        assert!(parse_label(PPGDPR_FALLBACK, &t).is_unparsable());
    }

    #[test]
    fn ppgdpr_keywords() {
        assert_eq!(
            answer_for("ppgdpr", "You may lodge a complaint with your supervisory authority."),
            "Right to Lodge a Complaint"
        );
        assert_eq!(answer_for("ppgdpr", "We keep data for as long as needed; retention is 2 years."), "Data Retention Period");
    }
}
