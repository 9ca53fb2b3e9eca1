//! Zero-shot privacy-policy classification with chat models.
//!
//! The pipeline runs HTML policies through [`extraction`], cuts the text into
//! sentences or paragraphs ([`segmentation`]), wraps each segment in a fixed
//! instruction prefix ([`prompting`]), sends it to a model ([`backends`]),
//! scores the answers against gold labels ([`evaluation`]) and renders the
//! result tables ([`reporting`]).

pub mod backends;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod prompting;
pub mod reporting;
pub mod segmentation;

pub use backends::{parse_label, BackendConfig, BackendError, CompletionClient, ResponseCache};
pub use corpus::{
    load_predictions, load_segments, load_taxonomy, write_predictions, write_segments, Category, PolicyDocument,
    PredictedLabel, Prediction, Segment, SegmentKind, Taxonomy,
};
pub use error::{Error, Result};
pub use evaluation::{evaluate, EvaluationReport, ScoringPolicy};
pub use extraction::{extract_policy_text, ExtractionReport};
pub use prompting::{build_prompt, PromptBuilder, PromptBundle, PromptTemplate};
pub use reporting::{compare_to_reference, render_report, ReportFormat};
pub use segmentation::{segment, split_paragraphs, split_sentences, SegmenterConfig};
