//! Deterministic synthetic inputs for the pipeline benchmarks.

use chrono::{TimeZone, Utc};
use policybench_core::{PredictedLabel, Prediction, Segment, SegmentKind, Taxonomy};

const SENTENCES: [&str; 8] = [
    "We collect your email address and device identifiers when you register.",
    "We share aggregated data with advertising partners, e.g. ad networks.",
    "Logs are kept for 2.5 years and then deleted.",
    "You may opt out of marketing emails at any time.",
    "We use encryption to protect your data in transit.",
    "We will notify you of changes to this policy by email.",
    "Our service is not directed at children under 13.",
    "Contact Dr. Smith at privacy@example.com with questions.",
];

/// A policy page with `paragraphs` body paragraphs, a list, and chrome.
pub fn policy_html(paragraphs: usize) -> String {
    let mut html = String::from(
        "<html><head><style>p{}</style><script>var x;</script></head><body>\
         <nav><a href=\"/\">Home</a></nav><div class=\"cookie-banner\">We use cookies.</div><main><h1>Privacy Policy</h1>",
    );
    for i in 0..paragraphs {
        let a = SENTENCES[i % SENTENCES.len()];
        let b = SENTENCES[(i * 3 + 1) % SENTENCES.len()];
        html.push_str(&format!("<p>{a} {b}</p>"));
        if i % 10 == 0 {
            html.push_str("<p>We collect the following:</p><ul><li>Name</li><li>Email</li><li>Location</li></ul>");
        }
    }
    html.push_str("</main><footer>Copyright</footer></body></html>");
    html
}

/// Single-label segments and predictions over `taxonomy`; roughly 80% of
/// the predictions agree with the gold label.
pub fn labeled_corpus(taxonomy: &Taxonomy, segments: usize) -> (Vec<Segment>, Vec<Prediction>) {
    let ids: Vec<&str> = taxonomy.categories.iter().map(|c| c.id.as_str()).collect();
    let stamp = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut gold = Vec::with_capacity(segments);
    let mut predictions = Vec::with_capacity(segments);
    for i in 0..segments {
        let mut s = Segment::new("bench", i, SegmentKind::Sentence, SENTENCES[i % SENTENCES.len()].into());
        let label = ids[(i * 7) % ids.len()];
        s.gold_labels.insert(label.to_string());
        let predicted = if i % 5 == 0 { ids[(i * 7 + 1) % ids.len()] } else { label };
        predictions.push(Prediction {
            segment_id: s.segment_id.clone(),
            predicted_label: PredictedLabel::Category(predicted.into()),
            raw_response: predicted.into(),
            backend_id: "bench".into(),
            model_id: "bench".into(),
            from_cache: false,
            timestamp: stamp,
        });
        gold.push(s);
    }
    (gold, predictions)
}
