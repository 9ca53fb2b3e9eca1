//! Zero-shot prefix prompts.
//!
//! A prompt is a fixed prefix (annotation-scheme preamble, one enumerated line
//! per category, task instruction) followed by the target text. Only the
//! target varies between segments, so the prefix is rendered once per
//! taxonomy and reused.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Segment, Taxonomy};
use crate::error::{Error, Result};

const OPP_115_TEMPLATE: &str = include_str!("../assets/templates/opp-115.json");
const PPGDPR_TEMPLATE: &str = include_str!("../assets/templates/ppgdpr.json");

/// Default budget for target text, in characters.
pub const DEFAULT_TARGET_BUDGET: usize = 12_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub taxonomy: String,
    pub version: String,
    pub preamble: String,
    /// Rendering rule for one category; supports `{ordinal}`, `{name}` and `{description}`.
    pub item_format: String,
    pub item_separator: String,
    pub after_items: String,
    pub task_instruction: String,
    pub target_separator: String,
    /// Category names that the prompt spells differently from the taxonomy, keyed by ordinal.
    #[serde(default)]
    pub name_overrides: BTreeMap<String, String>,
    /// Extra text appended to individual category lines, keyed by ordinal.
    #[serde(default)]
    pub item_suffixes: BTreeMap<String, String>,
}

impl PromptTemplate {
    pub fn from_json(text: &str) -> Result<Self> {
        let template: PromptTemplate = serde_json::from_str(text)?;
        for placeholder in ["{ordinal}", "{name}", "{description}"] {
            if !template.item_format.contains(placeholder) {
                return Err(Error::InvalidTemplate(format!(
                    "item_format is missing {placeholder}"
                )));
            }
        }
        Ok(template)
    }

    /// The name printed for `ordinal`, honouring overrides.
    pub fn prompt_name<'a>(&'a self, ordinal: usize, display_name: &'a str) -> &'a str {
        self.name_overrides
            .get(&ordinal.to_string())
            .map_or(display_name, String::as_str)
    }

    fn render_item(&self, ordinal: usize, name: &str, description: &str) -> String {
        let mut out = String::new();
        let mut rest = self.item_format.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let tail = &rest[open..];
            let (value, len) = if tail.starts_with("{ordinal}") {
                (ordinal.to_string(), "{ordinal}".len())
            } else if tail.starts_with("{name}") {
                (name.to_string(), "{name}".len())
            } else if tail.starts_with("{description}") {
                (description.to_string(), "{description}".len())
            } else {
                ("{".to_string(), 1)
            };
            out.push_str(&value);
            rest = &tail[len..];
        }
        out.push_str(rest);
        if let Some(suffix) = self.item_suffixes.get(&ordinal.to_string()) {
            out.push_str(suffix);
        }
        out
    }

    /// Everything before the target text.
    pub fn render_prefix(&self, taxonomy: &Taxonomy) -> Result<String> {
        if taxonomy.categories.is_empty() {
            return Err(Error::InvalidTaxonomy {
                name: taxonomy.name.clone(),
                reason: "cannot build a prompt without categories".into(),
            });
        }
        let items: Vec<String> = taxonomy
            .categories
            .iter()
            .map(|c| {
                self.render_item(
                    c.ordinal,
                    self.prompt_name(c.ordinal, &c.display_name),
                    &c.description,
                )
            })
            .collect();
        Ok(format!(
            "{}{}{}{}",
            self.preamble,
            items.join(&self.item_separator),
            self.after_items,
            self.task_instruction
        ))
    }
}

/// Template shipped for `name`, or loaded from a JSON file if `name` is a path.
pub fn load_template(name: &str) -> Result<PromptTemplate> {
    match name {
        "opp-115" => PromptTemplate::from_json(OPP_115_TEMPLATE),
        "ppgdpr" => PromptTemplate::from_json(PPGDPR_TEMPLATE),
        other => {
            let path = Path::new(other);
            if !path.is_file() {
                return Err(Error::InvalidTemplate(format!(
                    "no template shipped for `{other}`"
                )));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            PromptTemplate::from_json(&text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub prompt_text: String,
    pub taxonomy_name: String,
    pub segment_id: String,
    pub template_version: String,
}

#[derive(Debug, Clone)]
pub struct PromptBuilder {
    taxonomy_name: String,
    template: PromptTemplate,
    prefix: String,
    target_budget: usize,
}

impl PromptBuilder {
    pub fn new(taxonomy: &Taxonomy, template: PromptTemplate) -> Result<Self> {
        let prefix = template.render_prefix(taxonomy)?;
        Ok(PromptBuilder {
            taxonomy_name: taxonomy.name.clone(),
            template,
            prefix,
            target_budget: DEFAULT_TARGET_BUDGET,
        })
    }

    /// Builder over the template shipped for `taxonomy`.
    pub fn shipped(taxonomy: &Taxonomy) -> Result<Self> {
        PromptBuilder::new(taxonomy, load_template(&taxonomy.name)?)
    }

    pub fn with_target_budget(mut self, chars: usize) -> Self {
        self.target_budget = chars.max(1);
        self
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn build(&self, segment: &Segment) -> Result<PromptBundle> {
        let text = segment.text.trim();
        if text.is_empty() {
            return Err(Error::Config(format!(
                "segment `{}` has no text to classify",
                segment.segment_id
            )));
        }
        let target = truncate_at_sentence(text, self.target_budget);
        if target.len() < text.len() {
            log::warn!(
                "segment {} truncated from {} to {} characters",
                segment.segment_id,
                text.chars().count(),
                target.chars().count()
            );
        }
        Ok(PromptBundle {
            prompt_text: format!("{}{}{}", self.prefix, self.template.target_separator, target),
            taxonomy_name: self.taxonomy_name.clone(),
            segment_id: segment.segment_id.clone(),
            template_version: self.template.version.clone(),
        })
    }
}

/// Renders the shipped prompt for one segment.
pub fn build_prompt(taxonomy: &Taxonomy, segment: &Segment) -> Result<PromptBundle> {
    PromptBuilder::shipped(taxonomy)?.build(segment)
}

/// Cuts `text` to at most `budget` characters, preferring the last sentence
/// end, then the last space, inside the budget.
pub fn truncate_at_sentence(text: &str, budget: usize) -> &str {
    let Some((cut, _)) = text.char_indices().nth(budget) else {
        return text;
    };
    let window = &text[..cut];
    let sentence_end = window
        .char_indices()
        .filter(|&(i, c)| {
            matches!(c, '.' | '!' | '?')
                && text[i + c.len_utf8()..]
                    .chars()
                    .next()
                    .map_or(true, char::is_whitespace)
        })
        .map(|(i, c)| i + c.len_utf8())
        .last();
    if let Some(end) = sentence_end {
        return &text[..end];
    }
    match window.rfind(char::is_whitespace) {
        Some(space) if space > 0 => window[..space].trim_end(),
        _ => window,
    }
}
