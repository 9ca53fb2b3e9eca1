//! Saved policy HTML to plain body text.
//!
//! Page chrome (navigation, headers, footers, scripts, styles, forms and
//! anything whose class or id hits the deny-list) is dropped. Every remaining
//! block element becomes one paragraph, `<br>` becomes a newline inside its
//! paragraph and list items become marker-prefixed lines (`- ` or `N. `) so
//! the segmenter can find them again.

use ego_tree::NodeRef;
use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

use crate::corpus::PolicyDocument;
use crate::error::{Error, Result};

const REMOVED_TAGS: &[&str] = &[
    "nav", "header", "footer", "aside", "script", "style", "form", "head", "noscript",
    "template", "iframe", "svg", "button", "select",
];

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "blockquote", "body", "caption", "dd", "details", "div", "dl", "dt",
    "figcaption", "figure", "h1", "h2", "h3", "h4", "h5", "h6", "hr", "html", "main", "p",
    "pre", "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead", "tr",
];

/// Default class/id fragments that mark non-policy regions.
pub const DEFAULT_DENY_LIST: &[&str] = &["menu", "cookie-banner", "breadcrumb"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Removed subtrees (each removed element counts once, its descendants not at all).
    pub removed_element_count: usize,
    /// Blank-line-delimited blocks in the output; a run of list items is one block.
    pub paragraph_count: usize,
    /// Newlines kept inside paragraphs from `<br>` elements.
    pub retained_linebreaks: usize,
    pub list_item_count: usize,
}

#[derive(Debug, Clone)]
pub struct Extractor {
    deny_list: Vec<String>,
}

impl Default for Extractor {
    fn default() -> Self {
        Extractor::with_deny_list(DEFAULT_DENY_LIST.iter().copied())
    }
}

#[derive(Debug)]
enum Block {
    Paragraph(String),
    List(Vec<String>),
}

struct ListContext {
    ordered: bool,
    next: usize,
}

#[derive(Default)]
struct Builder {
    blocks: Vec<Block>,
    buffer: String,
    lists: Vec<ListContext>,
    item_markers: Vec<String>,
    removed: usize,
}

impl Builder {
    fn push_text(&mut self, text: &str) {
        for c in text.chars() {
            if c.is_whitespace() {
                self.soft_break();
            } else {
                self.buffer.push(c);
            }
        }
    }

    fn soft_break(&mut self) {
        if !self.buffer.is_empty() && !self.buffer.ends_with([' ', '\n']) {
            self.buffer.push(' ');
        }
    }

    fn line_break(&mut self) {
        if !self.item_markers.is_empty() {
            self.soft_break();
            return;
        }
        let trimmed = self.buffer.trim_end_matches(' ').len();
        self.buffer.truncate(trimmed);
        self.buffer.push('\n');
    }

    fn flush(&mut self) {
        let raw = std::mem::take(&mut self.buffer);
        let text = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("\n");
        if text.is_empty() {
            return;
        }
        match self.item_markers.last() {
            Some(marker) => {
                let line = format!("{marker}{}", text.replace('\n', " "));
                match self.blocks.last_mut() {
                    Some(Block::List(lines)) => lines.push(line),
                    _ => self.blocks.push(Block::List(vec![line])),
                }
            }
            None => self.blocks.push(Block::Paragraph(text)),
        }
    }
}

impl Extractor {
    pub fn with_deny_list<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Extractor {
            deny_list: terms
                .into_iter()
                .map(|t| t.as_ref().to_ascii_lowercase())
                .collect(),
        }
    }

    fn denied(&self, element: &scraper::node::Element) -> bool {
        let name = element.name();
        if REMOVED_TAGS.contains(&name) {
            return true;
        }
        if matches!(name, "html" | "body" | "main") {
            return false;
        }
        let hits = |value: &str| {
            let value = value.to_ascii_lowercase();
            self.deny_list.iter().any(|term| value.contains(term.as_str()))
        };
        element.classes().any(hits) || element.id().is_some_and(hits)
    }

    fn walk(&self, node: NodeRef<'_, Node>, out: &mut Builder) {
        match node.value() {
            Node::Text(text) => out.push_text(text),
            Node::Element(element) => {
                if self.denied(element) {
                    out.removed += 1;
                    return;
                }
                let name = element.name();
                match name {
                    "br" => out.line_break(),
                    "ul" | "ol" => {
                        out.flush();
                        let start = element
                            .attr("start")
                            .and_then(|s| s.trim().parse().ok())
                            .unwrap_or(1);
                        out.lists.push(ListContext {
                            ordered: name == "ol",
                            next: start,
                        });
                        self.walk_children(node, out);
                        out.flush();
                        out.lists.pop();
                    }
                    "li" => {
                        out.flush();
                        let marker = match out.lists.last_mut() {
                            Some(ctx) if ctx.ordered => {
                                ctx.next += 1;
                                format!("{}. ", ctx.next - 1)
                            }
                            _ => "- ".to_string(),
                        };
                        out.item_markers.push(marker);
                        self.walk_children(node, out);
                        out.flush();
                        out.item_markers.pop();
                    }
                    _ if BLOCK_TAGS.contains(&name) => {
                        if out.item_markers.is_empty() {
                            out.flush();
                            self.walk_children(node, out);
                            out.flush();
                        } else {
                            out.soft_break();
                            self.walk_children(node, out);
                            out.soft_break();
                        }
                    }
                    _ => self.walk_children(node, out),
                }
            }
            Node::Document | Node::Fragment => self.walk_children(node, out),
            _ => {}
        }
    }

    fn walk_children(&self, node: NodeRef<'_, Node>, out: &mut Builder) {
        for child in node.children() {
            self.walk(child, out);
        }
    }

    /// Extracts body text from `raw_html`.
    pub fn extract(&self, policy_id: &str, raw_html: &str) -> Result<(PolicyDocument, ExtractionReport)> {
        let html = Html::parse_document(raw_html);
        let mut builder = Builder::default();
        self.walk(html.tree.root(), &mut builder);
        builder.flush();

        let mut report = ExtractionReport {
            removed_element_count: builder.removed,
            paragraph_count: builder.blocks.len(),
            ..Default::default()
        };
        let rendered: Vec<String> = builder
            .blocks
            .into_iter()
            .map(|block| match block {
                Block::Paragraph(text) => {
                    report.retained_linebreaks += text.matches('\n').count();
                    text
                }
                Block::List(lines) => {
                    report.list_item_count += lines.len();
                    lines.join("\n")
                }
            })
            .collect();
        if rendered.is_empty() {
            return Err(Error::EmptyDocument);
        }

        let doc = PolicyDocument {
            policy_id: policy_id.to_string(),
            source: None,
            raw_html: Some(raw_html.to_string()),
            body_text: rendered.join("\n\n"),
        };
        Ok((doc, report))
    }
}

/// Extracts with the default deny-list.
pub fn extract_policy_text(policy_id: &str, raw_html: &str) -> Result<(PolicyDocument, ExtractionReport)> {
    Extractor::default().extract(policy_id, raw_html)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn body(html: &str) -> String {
        extract_policy_text("p", html).unwrap().0.body_text
    }

    #[test]
    fn minimal_document() {
        let (doc, report) =
            extract_policy_text("p", "<html><body><p>We collect data.</p></body></html>").unwrap();
        assert_eq!(doc.body_text, "We collect data.");
        assert_eq!(report.paragraph_count, 1);
        assert_eq!(report.removed_element_count, 1); // the implicit <head>
    }

    #[test]
    fn chrome_is_removed() {
        let html = r#"<html><head><style>p { color: red }</style></head><body>
            <nav><a href="/">Home</a> <a href="/about">About</a></nav>
            <style>.x{}</style>
            <p>We retain logs for 30 days.</p>
            <footer>Copyright 2023 Example Inc.</footer>
            </body></html>"#;
        assert_eq!(body(html), "We retain logs for 30 days.");
    }

    #[test]
    fn deny_list_matches_class_and_id() {
        let html = r#"<body><div class="site-menu">Products Pricing</div>
            <div id="cookie-banner-top">We use cookies <button>OK</button></div>
            <ol class="breadcrumbs"><li>Home</li><li>Legal</li></ol>
            <p>Policy text.</p></body>"#;
        let (doc, report) = extract_policy_text("p", html).unwrap();
        assert_eq!(doc.body_text, "Policy text.");
        assert!(report.removed_element_count >= 3);
    }

    #[test]
    fn list_becomes_marker_lines() {
        let html = "<body><p>We collect the following information:</p>\
            <ul><li>Your name</li><li>Your email address</li><li>Your device identifiers</li></ul></body>";
        let (doc, report) = extract_policy_text("p", html).unwrap();
        let expected = "We collect the following information:\n\n\
            - Your name\n- Your email address\n- Your device identifiers";
        assert_eq!(doc.body_text, expected);
        assert_eq!(report.list_item_count, 3);
        assert_eq!(report.paragraph_count, 2);
    }

    #[test]
    fn ordered_list_numbering_honours_start() {
        let html = r#"<body><ol start="3"><li>Third</li><li>Fourth</li></ol></body>"#;
        assert_eq!(body(html), "3. Third\n4. Fourth");
    }

    #[test]
    fn br_is_kept_inside_paragraph() {
        let (doc, report) =
            extract_policy_text("p", "<body><p>Example Inc.<br>1 Main St<br/> Springfield</p></body>")
                .unwrap();
        assert_eq!(doc.body_text, "Example Inc.\n1 Main St\nSpringfield");
        assert_eq!(report.retained_linebreaks, 2);
        assert_eq!(report.paragraph_count, 1);
    }

    #[test]
    fn headings_and_cells_are_paragraphs() {
        let html = "<body><h2>Data Security</h2><p>We use <b>TLS</b> everywhere.</p>\
            <table><tr><td>Cookies</td><td>1 year</td></tr></table></body>";
        assert_eq!(
            body(html),
            "Data Security\n\nWe use TLS everywhere.\n\nCookies\n\n1 year"
        );
    }

    #[test]
    fn nested_list_and_block_inside_item() {
        let html = "<body><ul><li><p>Account data</p><ul><li>name</li></ul></li><li>Usage</li></ul></body>";
        assert_eq!(body(html), "- Account data\n- name\n- Usage");
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            extract_policy_text("p", "<html><body><nav>Menu</nav>  </body></html>"),
            Err(Error::EmptyDocument)
        ));
        assert!(matches!(extract_policy_text("p", ""), Err(Error::EmptyDocument)));
    }

    #[test]
    fn entities_are_decoded_not_tags() {
        assert_eq!(body("<p>a &lt;b&gt; &amp; c</p>"), "a <b> & c");
        assert_eq!(body("<p>one <span>two</span> <em>three</em></p>"), "one two three");
    }

    proptest! {
        #[test]
        fn plain_text_is_a_fixed_point(words in proptest::collection::vec("[A-Za-z0-9,;:()']{1,12}", 1..40)) {
            let text = words.join(" ");
            let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
            let html = format!("<html><body>{escaped}</body></html>");
            prop_assert_eq!(body(&html), text);
        }

        #[test]
        fn paragraph_order_is_preserved_and_tag_free(n in 1usize..12) {
            let html: String = (0..n).map(|i| format!("<p>para <i>{i}</i></p>")).collect();
            let out = body(&html);
            let expected: Vec<String> = (0..n).map(|i| format!("para {i}")).collect();
            prop_assert_eq!(out.split("\n\n").collect::<Vec<_>>(), expected);
            prop_assert!(!out.contains('<') && !out.contains('>'));
        }
    }
}
