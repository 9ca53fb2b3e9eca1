//! Data model for taxonomies, policies, segments and predictions, plus the
//! line-delimited JSON formats they are stored in.
//!
//! Two taxonomies ship with the crate (`opp-115` and `ppgdpr`); any other
//! taxonomy can be loaded from a JSON file with the same layout.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const OPP_115_JSON: &str = include_str!("../assets/taxonomies/opp-115.json");
const PPGDPR_JSON: &str = include_str!("../assets/taxonomies/ppgdpr.json");

/// Names of the taxonomies bundled with the crate.
pub const SHIPPED_TAXONOMIES: [&str; 2] = ["opp-115", "ppgdpr"];

/// Sentinel stored in place of a category id when a response could not be
/// mapped onto the taxonomy.
pub const UNPARSABLE: &str = "unparsable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub display_name: String,
    pub description: String,
    /// 1-based position inside the owning taxonomy. Derived from file order.
    #[serde(skip)]
    pub ordinal: usize,
    /// Alternative spellings accepted when parsing model answers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub name: String,
    /// Catch-all category that is part of the prompt (OPP-115's "Other").
    #[serde(default)]
    pub other_id: Option<String>,
    /// Catch-all label that exists only in gold data and is never offered to
    /// the model (PPGDPR's "Other").
    #[serde(default)]
    pub reserved_other_id: Option<String>,
    pub scoring_default: String,
    pub categories: Vec<Category>,
}

impl Taxonomy {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut taxonomy: Taxonomy = serde_json::from_str(text)?;
        for (i, category) in taxonomy.categories.iter_mut().enumerate() {
            category.ordinal = i + 1;
        }
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidTaxonomy {
            name: self.name.clone(),
            reason,
        };
        if self.categories.is_empty() {
            return Err(invalid("taxonomy has no categories".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.categories {
            if c.id.is_empty() || c.display_name.trim().is_empty() || c.description.trim().is_empty() {
                return Err(invalid(format!(
                    "category {} has an empty id, name or description",
                    c.ordinal
                )));
            }
            if c.id == UNPARSABLE {
                return Err(invalid(format!("`{UNPARSABLE}` is a reserved id")));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(invalid(format!("duplicate category id `{}`", c.id)));
            }
        }
        if let Some(other) = &self.other_id {
            if !seen.contains(other.as_str()) {
                return Err(invalid(format!("other_id `{other}` is not a category")));
            }
        }
        if let Some(reserved) = &self.reserved_other_id {
            if seen.contains(reserved.as_str()) || reserved == UNPARSABLE {
                return Err(invalid(format!(
                    "reserved_other_id `{reserved}` collides with a category id"
                )));
            }
        }
        Ok(())
    }

    pub fn category(&self, id: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.category(id).is_some()
    }

    /// The label that marks catch-all gold annotations, whether or not it is
    /// offered in the prompt.
    pub fn other_label(&self) -> Option<&str> {
        self.other_id
            .as_deref()
            .or(self.reserved_other_id.as_deref())
    }

    /// True for every id that may appear in gold annotations.
    pub fn accepts_gold(&self, id: &str) -> bool {
        self.contains(id) || self.reserved_other_id.as_deref() == Some(id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Loads a shipped taxonomy by name, or a taxonomy file by path.
pub fn load_taxonomy(name: &str) -> Result<Taxonomy> {
    match name {
        "opp-115" => Taxonomy::from_json(OPP_115_JSON),
        "ppgdpr" => Taxonomy::from_json(PPGDPR_JSON),
        other => {
            let path = Path::new(other);
            if !path.is_file() {
                return Err(Error::UnknownTaxonomy(other.to_string()));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Taxonomy::from_json(&text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub policy_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_html: Option<String>,
    /// Plain text; paragraphs separated by blank lines.
    pub body_text: String,
}

impl PolicyDocument {
    pub fn from_text(policy_id: impl Into<String>, body_text: impl Into<String>) -> Self {
        PolicyDocument {
            policy_id: policy_id.into(),
            source: None,
            raw_html: None,
            body_text: body_text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Sentence,
    Paragraph,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Sentence => "sentence",
            SegmentKind::Paragraph => "paragraph",
        })
    }
}

impl FromStr for SegmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentence" => Ok(SegmentKind::Sentence),
            "paragraph" => Ok(SegmentKind::Paragraph),
            other => Err(Error::Config(format!(
                "unknown segmentation mode `{other}` (expected sentence or paragraph)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub policy_id: String,
    pub segment_id: String,
    pub index: usize,
    pub kind: SegmentKind,
    pub text: String,
    #[serde(rename = "labels", default)]
    pub gold_labels: BTreeSet<String>,
}

impl Segment {
    pub fn new(policy_id: &str, index: usize, kind: SegmentKind, text: String) -> Self {
        Segment {
            policy_id: policy_id.to_string(),
            segment_id: format!("{policy_id}:{index}"),
            index,
            kind,
            text,
            gold_labels: BTreeSet::new(),
        }
    }
}

/// A parsed model answer: either a category id or the `unparsable` sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictedLabel {
    Category(String),
    Unparsable,
}

impl PredictedLabel {
    pub fn as_str(&self) -> &str {
        match self {
            PredictedLabel::Category(id) => id,
            PredictedLabel::Unparsable => UNPARSABLE,
        }
    }

    pub fn category(&self) -> Option<&str> {
        match self {
            PredictedLabel::Category(id) => Some(id),
            PredictedLabel::Unparsable => None,
        }
    }

    pub fn is_unparsable(&self) -> bool {
        matches!(self, PredictedLabel::Unparsable)
    }
}

impl From<&str> for PredictedLabel {
    fn from(s: &str) -> Self {
        if s == UNPARSABLE {
            PredictedLabel::Unparsable
        } else {
            PredictedLabel::Category(s.to_string())
        }
    }
}

impl fmt::Display for PredictedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PredictedLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PredictedLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(PredictedLabel::from(s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub segment_id: String,
    pub predicted_label: PredictedLabel,
    pub raw_response: String,
    pub backend_id: String,
    pub model_id: String,
    pub from_cache: bool,
    pub timestamp: DateTime<Utc>,
}

fn read_jsonl<T, F>(path: &Path, mut on_record: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::InvalidRecord {
            path: path.to_path_buf(),
            line: line_no,
            reason: e.to_string(),
        })?;
        on_record(line_no, record)?;
    }
    Ok(())
}

fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a segment file, validating every record against `taxonomy`.
pub fn load_segments(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Vec<Segment>> {
    let path = path.as_ref();
    let mut segments: Vec<Segment> = Vec::new();
    let mut ids = HashSet::new();
    let mut indices: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    read_jsonl(path, |line, mut segment: Segment| {
        let bad = |reason: String| Error::InvalidRecord {
            path: path.to_path_buf(),
            line,
            reason,
        };
        segment.text = segment.text.trim().to_string();
        if segment.text.is_empty() {
            return Err(bad(format!("segment `{}` has empty text", segment.segment_id)));
        }
        if segment.kind == SegmentKind::Sentence && segment.text.contains("\n\n") {
            return Err(bad(format!(
                "sentence segment `{}` contains a paragraph break",
                segment.segment_id
            )));
        }
        if let Some(label) = segment.gold_labels.iter().find(|l| !taxonomy.accepts_gold(l)) {
            return Err(bad(format!(
                "unknown label `{label}` for taxonomy `{}`",
                taxonomy.name
            )));
        }
        if !ids.insert(segment.segment_id.clone()) {
            return Err(bad(format!("duplicate segment_id `{}`", segment.segment_id)));
        }
        indices
            .entry(segment.policy_id.clone())
            .or_default()
            .push((segment.index, line));
        segments.push(segment);
        Ok(())
    })?;
    // records may come in any order, but each policy's indices must be 0..n
    for (policy_id, mut seen) in indices {
        seen.sort_unstable();
        if let Some((expected, &(index, line))) = seen.iter().enumerate().find(|(i, (index, _))| i != index) {
            return Err(Error::InvalidRecord {
                path: path.to_path_buf(),
                line,
                reason: format!("index {index} of policy `{policy_id}` is not contiguous (expected {expected})"),
            });
        }
    }
    Ok(segments)
}

pub fn write_segments(segments: &[Segment], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(segments, path.as_ref())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let mut predictions = Vec::new();
    read_jsonl(path.as_ref(), |_, p: Prediction| {
        predictions.push(p);
        Ok(())
    })?;
    Ok(predictions)
}

pub fn write_predictions(predictions: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(predictions, path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn opp115_has_ten_categories() {
        let t = load_taxonomy("opp-115").unwrap();
        assert_eq!(t.categories.len(), 10);
        let c = &t.categories[4];
        assert_eq!(c.ordinal, 5);
        assert_eq!(c.display_name, "Data Retention");
        assert_eq!(c.description, "how long user information is stored.");
        assert_eq!(t.other_id.as_deref(), Some("other"));
        assert_eq!(t.scoring_default, "flexible-multi");
    }

    #[test]
    fn ppgdpr_other_is_gold_only() {
        let t = load_taxonomy("ppgdpr").unwrap();
        assert_eq!(t.categories.len(), 10);
        assert_eq!(t.categories[9].display_name, "Right to Lodge a Complaint");
        assert!(t.other_id.is_none());
        assert!(!t.contains("other"));
        assert!(t.accepts_gold("other"));
        assert_eq!(t.other_label(), Some("other"));
        assert_eq!(t.scoring_default, "strict-single");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let json = r#"{"name":"dup","scoring_default":"strict-single","categories":[
            {"id":"a","display_name":"A","description":"first."},
            {"id":"a","display_name":"B","description":"second."}]}"#;
        let f = write_lines(&[json]);
        let err = load_taxonomy(f.path().to_str().unwrap()).unwrap_err();
        assert!(err.to_string().contains("duplicate category id"), "{err}");
    }

    #[test]
    fn unknown_taxonomy_name() {
        assert!(matches!(
            load_taxonomy("no-such-taxonomy"),
            Err(Error::UnknownTaxonomy(_))
        ));
    }

    #[test]
    fn loads_segments_in_order() {
        let t = load_taxonomy("opp-115").unwrap();
        let f = write_lines(&[
            r#"{"policy_id":"p","segment_id":"p:0","index":0,"kind":"paragraph","text":"We collect data.","labels":["first-party-collection"]}"#,
            r#"{"policy_id":"p","segment_id":"p:1","index":1,"kind":"paragraph","text":"We share data.","labels":["third-party-sharing"]}"#,
            r#"{"policy_id":"q","segment_id":"q:0","index":0,"kind":"paragraph","text":"We protect data.","labels":[]}"#,
        ]);
        let segs = load_segments(f.path(), &t).unwrap();
        let ids: Vec<_> = segs.iter().map(|s| s.segment_id.as_str()).collect();
        assert_eq!(ids, ["p:0", "p:1", "q:0"]);
    }

    #[test]
    fn unknown_label_names_line() {
        let t = load_taxonomy("opp-115").unwrap();
        let f = write_lines(&[
            r#"{"policy_id":"p","segment_id":"p:0","index":0,"kind":"paragraph","text":"a","labels":["other"]}"#,
            r#"{"policy_id":"p","segment_id":"p:1","index":1,"kind":"paragraph","text":"b","labels":["no-such-cat"]}"#,
        ]);
        match load_segments(f.path(), &t).unwrap_err() {
            Error::InvalidRecord { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("no-such-cat"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn multi_annotation_segment() {
        let t = load_taxonomy("opp-115").unwrap();
        let f = write_lines(&[
            r#"{"policy_id":"p","segment_id":"p:0","index":0,"kind":"paragraph","text":"We use SSL.","labels":["other","data-security"]}"#,
        ]);
        let segs = load_segments(f.path(), &t).unwrap();
        assert_eq!(segs[0].gold_labels.len(), 2);
        assert!(segs[0].gold_labels.contains("data-security"));
    }

    #[test]
    fn empty_text_and_duplicates_rejected() {
        let t = load_taxonomy("opp-115").unwrap();
        let f = write_lines(&[
            r#"{"policy_id":"p","segment_id":"p:0","index":0,"kind":"paragraph","text":"   ","labels":[]}"#,
        ]);
        assert!(load_segments(f.path(), &t).unwrap_err().to_string().contains("empty text"));
        let f = write_lines(&[
            r#"{"policy_id":"p","segment_id":"x","index":0,"kind":"paragraph","text":"a","labels":[]}"#,
            r#"{"policy_id":"p","segment_id":"x","index":1,"kind":"paragraph","text":"b","labels":[]}"#,
        ]);
        assert!(load_segments(f.path(), &t).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn ppgdpr_accepts_reserved_other_in_gold() {
        let t = load_taxonomy("ppgdpr").unwrap();
        let f = write_lines(&[
            r#"{"policy_id":"app","segment_id":"app:0","index":0,"kind":"sentence","text":"Welcome.","labels":["other"]}"#,
        ]);
        assert_eq!(load_segments(f.path(), &t).unwrap().len(), 1);
    }

    #[test]
    fn empty_prediction_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        write_predictions(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert!(load_predictions(&path).unwrap().is_empty());
    }

    #[test]
    fn unparsable_sentinel_survives_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let preds = vec![
            Prediction {
                segment_id: "p:0".into(),
                predicted_label: PredictedLabel::Unparsable,
                raw_response: "I cannot tell.".into(),
                backend_id: "mock".into(),
                model_id: "mock-keyword-v1".into(),
                from_cache: false,
                timestamp: "2023-06-13T10:00:00.123456789Z".parse().unwrap(),
            },
            Prediction {
                segment_id: "p:1".into(),
                predicted_label: PredictedLabel::Category("data-retention".into()),
                raw_response: "Data Retention".into(),
                backend_id: "mock".into(),
                model_id: "mock-keyword-v1".into(),
                from_cache: true,
                timestamp: "2023-06-13T10:00:01Z".parse().unwrap(),
            },
        ];
        write_predictions(&preds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(r#""predicted_label":"unparsable""#));
        assert_eq!(load_predictions(&path).unwrap(), preds);
    }
}
