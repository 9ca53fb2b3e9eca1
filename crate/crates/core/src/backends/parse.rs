//! Mapping free-text model answers onto taxonomy ids.

use crate::corpus::{PredictedLabel, Taxonomy};

/// Drops wrapping quotes/markdown and a leading ordinal such as `3.`,
/// `Category 3:`, `No. 3` or `#3`.
fn strip_prefixes(raw: &str) -> &str {
    let mut s = raw.trim().trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*')).trim();
    for word in ["category", "class", "label", "no.", "number", "#"] {
        if s.len() >= word.len() && s[..word.len()].eq_ignore_ascii_case(word) {
            let rest = s[word.len()..].trim_start();
            if rest.starts_with(|c: char| c.is_ascii_digit()) {
                s = rest;
            }
            break;
        }
    }
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        let rest = &s[digits..];
        let rest = rest.strip_prefix(['.', ':', ')']).unwrap_or(rest);
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            s = rest.trim_start();
        }
    }
    s
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Byte offset of the first whole-word occurrence of `needle` in `haystack`.
fn find_word(haystack: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before = haystack[..start].chars().next_back();
        let after = haystack[end..].chars().next();
        if !is_word_char(before) && !is_word_char(after) {
            return Some(start);
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Resolves a raw answer to a category id, or [`PredictedLabel::Unparsable`].
///
/// After trimming and dropping ordinal prefixes, an exact case-insensitive
/// match on a display name (then on an alias) wins outright. Otherwise every
/// display name and alias is searched for as a whole word; the category whose
/// match starts earliest wins, a longer match breaking ties.
pub fn parse_label(raw: &str, taxonomy: &Taxonomy) -> PredictedLabel {
    let answer = strip_prefixes(raw);
    let bare = answer.trim_end_matches(['.', '!']).trim();

    for c in &taxonomy.categories {
        if c.display_name.eq_ignore_ascii_case(bare) {
            return PredictedLabel::Category(c.id.clone());
        }
    }
    for c in &taxonomy.categories {
        if c.aliases.iter().any(|a| a.eq_ignore_ascii_case(bare)) {
            return PredictedLabel::Category(c.id.clone());
        }
    }

    let text = answer.to_lowercase();
    let mut best: Option<(usize, std::cmp::Reverse<usize>, &str)> = None;
    for c in &taxonomy.categories {
        for name in std::iter::once(&c.display_name).chain(&c.aliases) {
            let needle = name.to_lowercase();
            if let Some(start) = find_word(&text, &needle) {
                let candidate = (start, std::cmp::Reverse(needle.len()), c.id.as_str());
                if best.map_or(true, |b| (candidate.0, candidate.1) < (b.0, b.1)) {
                    best = Some(candidate);
                }
            }
        }
    }
    match best {
        Some((_, _, id)) => PredictedLabel::Category(id.to_string()),
        None => PredictedLabel::Unparsable,
    }
}
