//! Sentence-wise and paragraph-wise segmentation of extracted body text.
//!
//! Body text arrives as blank-line-separated blocks. Lines that start with a
//! list marker (`- ` or `N. `) are list items; in paragraph mode a run of
//! items is folded into the paragraph directly above it, because list items
//! rarely make sense without their introductory sentence.

use crate::corpus::{PolicyDocument, Segment, SegmentKind};
use crate::error::{Error, Result};

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "approx.", "art.", "arts.", "cf.", "ch.", "co.", "corp.", "dept.", "dr.", "e.g.", "e.u.",
    "eg.", "est.", "etc.", "fig.", "i.e.", "ie.", "inc.", "jr.", "ltd.", "mr.", "mrs.", "ms.",
    "no.", "nos.", "p.", "para.", "pp.", "reg.", "sec.", "sr.", "st.", "u.k.", "u.s.", "viz.",
    "vol.", "vs.",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterConfig {
    pub mode: SegmentKind,
    abbreviations: Vec<String>,
    pub merge_lists: bool,
}

impl SegmenterConfig {
    pub fn new(mode: SegmentKind) -> Self {
        SegmenterConfig {
            mode,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            merge_lists: true,
        }
    }

    /// Replaces the abbreviation set. Entries must be lowercase and end with a period.
    pub fn with_abbreviations<I, S>(mut self, abbreviations: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let list: Vec<String> = abbreviations.into_iter().map(Into::into).collect();
        if let Some(bad) = list
            .iter()
            .find(|a| !a.ends_with('.') || a.len() < 2 || a.to_lowercase() != **a)
        {
            return Err(Error::Config(format!(
                "abbreviation `{bad}` must be lowercase and end with a period"
            )));
        }
        self.abbreviations = list;
        Ok(self)
    }

    pub fn with_merge_lists(mut self, merge: bool) -> Self {
        self.merge_lists = merge;
        self
    }

    pub fn abbreviations(&self) -> &[String] {
        &self.abbreviations
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Unit {
    Paragraph(String),
    ListItem(String),
}

/// Returns true if `line` starts with `- ` or `N. `.
pub fn is_list_line(line: &str) -> bool {
    if line.starts_with("- ") {
        return true;
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    digits > 0 && line[digits..].starts_with(". ")
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn blocks(body: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for line in body.lines() {
        let line = collapse_whitespace(line);
        if line.is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn units(body: &str) -> Vec<Unit> {
    let mut out = Vec::new();
    for block in blocks(body) {
        let mut paragraph: Vec<String> = Vec::new();
        for line in block {
            if is_list_line(&line) {
                if !paragraph.is_empty() {
                    out.push(Unit::Paragraph(paragraph.join("\n")));
                    paragraph.clear();
                }
                out.push(Unit::ListItem(line));
            } else {
                paragraph.push(line);
            }
        }
        if !paragraph.is_empty() {
            out.push(Unit::Paragraph(paragraph.join("\n")));
        }
    }
    out
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Abbreviations that often close a sentence; they split when the next word
/// is capitalized ("…, etc. Read on.").
const SENTENCE_FINAL: &[&str] = &["etc.", "inc.", "ltd.", "co.", "corp."];

fn suppressed(token: &str, at_unit_start: bool, config: &SegmenterConfig) -> bool {
    let token = token.trim_start_matches(['(', '[', '"', '\'', '\u{201c}', '\u{2018}']);
    let stem = &token[..token.len() - 1];
    if stem.is_empty() {
        return false;
    }
    // single-letter initial
    let mut chars = stem.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_alphabetic() {
            return true;
        }
    }
    // ordered list marker
    if at_unit_start && stem.bytes().all(|b| b.is_ascii_digit()) {
        return true;
    }
    let lower = token.to_lowercase();
    config.abbreviations.iter().any(|a| *a == lower)
}

/// Splits one whitespace-collapsed line of text into sentences.
fn sentences_in(text: &str, config: &SegmenterConfig) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && (matches!(chars[j + 1].1, '.' | '!' | '?') || CLOSERS.contains(&chars[j + 1].1)) {
            j += 1;
        }
        let end = chars.get(j + 1).map_or(text.len(), |&(pos, _)| pos);
        let at_boundary = chars.get(j + 1).map_or(true, |&(_, next)| next.is_whitespace());
        if at_boundary {
            let split = if c == '.' && j == i {
                let token_start = text[..chars[i].0].rfind(' ').map_or(0, |p| p + 1);
                let token = &text[token_start..end];
                let sentence_start = text.len() - text[start..].trim_start().len();
                let next_capital = text[end..].trim_start().chars().next().is_some_and(char::is_uppercase);
                let bare = token.trim_start_matches(['(', '[', '"', '\'', '\u{201c}', '\u{2018}']).to_lowercase();
                !suppressed(token, token_start == sentence_start, config)
                    || (next_capital && SENTENCE_FINAL.contains(&bare.as_str()))
            } else {
                true
            };
            if split {
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    out.push(sentence.to_string());
                }
                start = end;
            }
        }
        i = j + 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn numbered(policy_id: &str, kind: SegmentKind, texts: Vec<String>) -> Vec<Segment> {
    texts
        .into_iter()
        .enumerate()
        .map(|(index, text)| Segment::new(policy_id, index, kind, text))
        .collect()
}

/// Sentence segmentation with the default abbreviation set.
pub fn split_sentences(doc: &PolicyDocument) -> Vec<Segment> {
    split_sentences_with(doc, &SegmenterConfig::new(SegmentKind::Sentence))
}

pub fn split_sentences_with(doc: &PolicyDocument, config: &SegmenterConfig) -> Vec<Segment> {
    let mut texts = Vec::new();
    for unit in units(&doc.body_text) {
        let (Unit::Paragraph(text) | Unit::ListItem(text)) = unit;
        texts.extend(sentences_in(&collapse_whitespace(&text), config));
    }
    numbered(&doc.policy_id, SegmentKind::Sentence, texts)
}

pub fn split_paragraphs(doc: &PolicyDocument, config: &SegmenterConfig) -> Vec<Segment> {
    let mut texts: Vec<String> = Vec::new();
    // whether the last pushed text may absorb following list items
    let mut open = false;
    for unit in units(&doc.body_text) {
        match unit {
            Unit::Paragraph(text) => {
                texts.push(text);
                open = true;
            }
            Unit::ListItem(item) if config.merge_lists => {
                match texts.last_mut() {
                    Some(last) if open => {
                        last.push('\n');
                        last.push_str(&item);
                    }
                    _ => {
                        texts.push(item);
                        open = true;
                    }
                }
            }
            Unit::ListItem(item) => {
                texts.push(item);
                open = false;
            }
        }
    }
    numbered(&doc.policy_id, SegmentKind::Paragraph, texts)
}

/// Dispatches on `config.mode`.
pub fn segment(doc: &PolicyDocument, config: &SegmenterConfig) -> Vec<Segment> {
    match config.mode {
        SegmentKind::Sentence => split_sentences_with(doc, config),
        SegmentKind::Paragraph => split_paragraphs(doc, config),
    }
}
