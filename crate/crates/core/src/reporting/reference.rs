//! Published per-class results used as comparison baselines.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub category_id: &'static str,
    pub label: &'static str,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceResults {
    pub key: &'static str,
    pub model: &'static str,
    pub taxonomy: &'static str,
    pub rows: Vec<ReferenceRow>,
    pub accuracy: Option<f64>,
    /// (precision, recall, f1)
    pub macro_avg: (f64, f64, f64),
}

type Cells = [f64; 3];

struct Table {
    taxonomy: &'static str,
    labels: &'static [(&'static str, &'static str)],
    models: &'static [(&'static str, &'static str)],
    /// One row per label, one P/R/F triple per model.
    cells: &'static [&'static [Cells]],
    accuracy: Option<&'static [f64]>,
    macro_avg: &'static [Cells],
}

const OPP_115_LABELS: [(&str, &str); 10] = [
    ("first-party-collection", "1st Party Collection"),
    ("third-party-sharing", "3rd Party Sharing"),
    ("user-choice-control", "User Choice/Control"),
    ("user-access-edit-deletion", "Access, Edit, Deletion"),
    ("data-retention", "Data Retention"),
    ("data-security", "Data Security"),
    ("policy-change", "Policy Change"),
    ("do-not-track", "Do Not Track"),
    ("specific-audiences", "Specific Audiences"),
    ("other", "Other"),
];

const PPGDPR_LABELS: [(&str, &str); 10] = [
    ("collect-personal-information", "Collect Personal Information"),
    ("data-retention-period", "Data Retention Period"),
    ("data-processing-purposes", "Data Processing Purposes"),
    ("contact-details", "Contact Details"),
    ("right-to-access", "Right to Access"),
    ("right-to-rectify-or-erase", "Right to Rectify or Erase"),
    ("right-to-restrict-processing", "Right to Restrict of Processing"),
    ("right-to-object-processing", "Right to Object to Processing"),
    ("right-to-data-portability", "Right to Data Portability"),
    ("right-to-lodge-complaint", "Right to Lodge a Complaint"),
];

const OPP_115_LLM: Table = Table {
    taxonomy: "opp-115",
    labels: &OPP_115_LABELS,
    models: &[("chatgpt-opp115", "ChatGPT"), ("gpt4-opp115", "GPT-4"), ("claude2-opp115", "Claude 2")],
    cells: &[
        &[[0.94, 0.90, 0.92], [0.98, 0.97, 0.97], [0.99, 0.65, 0.78]],
        &[[0.92, 0.90, 0.91], [0.97, 0.95, 0.96], [0.69, 0.98, 0.81]],
        &[[0.92, 0.90, 0.91], [0.92, 0.98, 0.95], [0.77, 0.63, 0.69]],
        &[[0.89, 0.99, 0.94], [0.92, 0.99, 0.96], [0.87, 0.84, 0.85]],
        &[[0.93, 0.96, 0.95], [1.00, 0.81, 0.89], [1.00, 0.96, 0.98]],
        &[[0.79, 0.96, 0.86], [0.98, 0.97, 0.97], [0.84, 0.85, 0.85]],
        &[[0.96, 0.99, 0.98], [1.00, 0.99, 1.00], [0.94, 0.68, 0.79]],
        &[[0.91, 1.00, 0.95], [1.00, 1.00, 1.00], [1.00, 0.35, 0.52]],
        &[[1.00, 0.92, 0.96], [1.00, 0.95, 0.97], [0.93, 0.79, 0.86]],
        &[[0.92, 1.00, 0.96], [0.99, 1.00, 0.99], [0.96, 1.00, 0.98]],
    ],
    accuracy: Some(&[0.92, 0.97, 0.81]),
    macro_avg: &[[0.92, 0.95, 0.93], [0.98, 0.96, 0.97], [0.90, 0.77, 0.81]],
};

const PPGDPR_LLM: Table = Table {
    taxonomy: "ppgdpr",
    labels: &PPGDPR_LABELS,
    models: &[("chatgpt-ppgdpr", "ChatGPT"), ("gpt4-ppgdpr", "GPT-4"), ("claude2-ppgdpr", "Claude 2")],
    cells: &[
        &[[0.82, 0.89, 0.85], [0.83, 0.94, 0.88], [0.77, 0.35, 0.48]],
        &[[0.75, 0.96, 0.84], [0.92, 0.93, 0.92], [0.90, 0.15, 0.26]],
        &[[0.92, 0.79, 0.85], [0.94, 0.85, 0.89], [0.90, 0.23, 0.36]],
        &[[0.86, 0.90, 0.88], [0.95, 0.91, 0.93], [0.96, 0.54, 0.69]],
        &[[0.39, 0.85, 0.54], [0.40, 0.92, 0.55], [0.11, 0.54, 0.19]],
        &[[0.86, 0.72, 0.78], [0.89, 0.75, 0.81], [0.83, 0.41, 0.55]],
        &[[0.88, 0.77, 0.82], [0.81, 0.88, 0.84], [0.48, 0.62, 0.54]],
        &[[0.85, 0.84, 0.84], [0.85, 0.83, 0.84], [0.09, 0.89, 0.16]],
        &[[0.96, 0.65, 0.77], [0.96, 0.62, 0.76], [0.30, 0.57, 0.40]],
        &[[0.96, 0.94, 0.95], [0.96, 0.95, 0.95], [0.34, 0.97, 0.51]],
    ],
    accuracy: Some(&[0.84, 0.87, 0.38]),
    macro_avg: &[[0.82, 0.83, 0.81], [0.85, 0.86, 0.84], [0.57, 0.53, 0.41]],
};

const OPP_115_BASELINES: Table = Table {
    taxonomy: "opp-115",
    labels: OPP_115_LABELS.split_at(9).0,
    models: &[
        ("polisis-opp115", "Polisis"),
        ("lr-opp115", "LR"),
        ("svm-opp115", "SVM"),
        ("hmm-opp115", "HMM"),
    ],
    cells: &[
        &[[0.79, 0.79, 0.79], [0.73, 0.67, 0.70], [0.76, 0.73, 0.75], [0.69, 0.76, 0.72]],
        &[[0.79, 0.80, 0.79], [0.64, 0.63, 0.63], [0.67, 0.73, 0.70], [0.63, 0.61, 0.62]],
        &[[0.74, 0.74, 0.74], [0.45, 0.62, 0.52], [0.65, 0.58, 0.61], [0.47, 0.33, 0.39]],
        &[[0.89, 0.75, 0.80], [0.47, 0.71, 0.57], [0.67, 0.56, 0.61], [0.48, 0.42, 0.45]],
        &[[0.83, 0.66, 0.71], [0.10, 0.35, 0.16], [0.12, 0.12, 0.12], [0.08, 0.12, 0.09]],
        &[[0.88, 0.83, 0.85], [0.48, 0.75, 0.59], [0.66, 0.67, 0.67], [0.67, 0.53, 0.59]],
        &[[0.95, 0.84, 0.88], [0.59, 0.83, 0.69], [0.66, 0.88, 0.75], [0.52, 0.68, 0.59]],
        &[[0.94, 0.97, 0.95], [0.45, 1.00, 0.62], [1.00, 1.00, 1.00], [0.45, 0.40, 0.41]],
        &[[0.96, 0.94, 0.95], [0.49, 0.69, 0.57], [0.70, 0.70, 0.70], [0.67, 0.66, 0.66]],
    ],
    accuracy: None,
    macro_avg: &[[0.85, 0.79, 0.81], [0.49, 0.69, 0.56], [0.65, 0.66, 0.66], [0.52, 0.50, 0.50]],
};

const PPGDPR_BASELINES: Table = Table {
    taxonomy: "ppgdpr",
    labels: &PPGDPR_LABELS,
    models: &[("svm-ppgdpr", "SVM"), ("lstm-ppgdpr", "LSTM"), ("bert-ppgdpr", "BERT")],
    cells: &[
        &[[0.76, 0.05, 0.10], [0.49, 0.49, 0.49], [0.56, 0.56, 0.57]],
        &[[0.84, 0.33, 0.47], [0.62, 0.49, 0.55], [0.69, 0.73, 0.71]],
        &[[0.82, 0.03, 0.06], [0.61, 0.46, 0.52], [0.65, 0.57, 0.60]],
        &[[0.86, 0.47, 0.60], [0.76, 0.69, 0.72], [0.85, 0.73, 0.79]],
        &[[0.71, 0.36, 0.47], [0.66, 0.50, 0.57], [0.65, 0.61, 0.63]],
        &[[0.82, 0.40, 0.54], [0.72, 0.67, 0.69], [0.70, 0.70, 0.70]],
        &[[0.84, 0.50, 0.63], [0.78, 0.60, 0.68], [0.84, 0.76, 0.80]],
        &[[0.89, 0.46, 0.61], [0.76, 0.64, 0.69], [0.78, 0.64, 0.71]],
        &[[0.84, 0.69, 0.76], [0.75, 0.71, 0.73], [0.82, 0.83, 0.82]],
        &[[0.91, 0.72, 0.81], [0.81, 0.75, 0.78], [0.83, 0.86, 0.84]],
    ],
    accuracy: None,
    macro_avg: &[[0.83, 0.40, 0.50], [0.70, 0.60, 0.64], [0.73, 0.70, 0.72]],
};

const TABLES: [&Table; 4] = [&OPP_115_LLM, &PPGDPR_LLM, &OPP_115_BASELINES, &PPGDPR_BASELINES];

/// Published macro-F1 summary: (reference key, macro F1).
pub const MACRO_F1_SUMMARY: [(&str, f64); 13] = [
    ("chatgpt-opp115", 0.93),
    ("gpt4-opp115", 0.97),
    ("claude2-opp115", 0.81),
    ("polisis-opp115", 0.81),
    ("lr-opp115", 0.56),
    ("svm-opp115", 0.66),
    ("hmm-opp115", 0.50),
    ("chatgpt-ppgdpr", 0.81),
    ("gpt4-ppgdpr", 0.84),
    ("claude2-ppgdpr", 0.41),
    ("svm-ppgdpr", 0.50),
    ("lstm-ppgdpr", 0.64),
    ("bert-ppgdpr", 0.72),
];

/// Keys accepted by [`reference`], in publication order.
pub fn reference_keys() -> Vec<&'static str> {
    TABLES
        .iter()
        .flat_map(|t| t.models.iter().map(|(key, _)| *key))
        .collect()
}

pub fn reference(key: &str) -> Result<ReferenceResults> {
    for table in TABLES {
        let Some(col) = table.models.iter().position(|(k, _)| *k == key) else {
            continue;
        };
        let rows = table
            .labels
            .iter()
            .zip(table.cells)
            .map(|(&(category_id, label), cells)| {
                let [precision, recall, f1] = cells[col];
                ReferenceRow {
                    category_id,
                    label,
                    precision,
                    recall,
                    f1,
                }
            })
            .collect();
        let [p, r, f] = table.macro_avg[col];
        return Ok(ReferenceResults {
            key: table.models[col].0,
            model: table.models[col].1,
            taxonomy: table.taxonomy,
            rows,
            accuracy: table.accuracy.map(|a| a[col]),
            macro_avg: (p, r, f),
        });
    }
    Err(Error::UnknownReference {
        key: key.to_string(),
        known: reference_keys().join(", "),
    })
}

pub fn all_references() -> Vec<ReferenceResults> {
    reference_keys()
        .into_iter()
        .map(|k| reference(k).expect("listed key"))
        .collect()
}
