//! Text-similarity metrics: corpus BLEU with brevity penalty and length
//! ratio, ROUGE-N and ROUGE-L, and METEOR.
//!
//! All metrics operate on token slices produced by
//! [`tokenize`](crate::features::tokenize) and report raw values in `[0, 1]`.
//! [`MetricReport::render_percent`] gives the two-decimal table rendering.

mod bleu;
mod meteor;
mod rouge;
mod stem;

pub use bleu::{bleu, sentence_bleu, BleuReport, Smoothing, EPSILON};
pub use meteor::{meteor, meteor_with_synonyms, Matcher, MeteorReport, SynonymTable};
pub use rouge::{lcs_length, rouge_l, rouge_n, RougeReport, RougeVariant};
pub use stem::stem;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("candidate corpus is empty")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} reference groups")]
    LengthMismatch {
        candidates: usize,
        references: usize,
    },
    #[error("reference group {0} is empty")]
    EmptyReferenceGroup(usize),
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("references contain no tokens")]
    EmptyReferences,
}

/// Headline numbers of one comparison, as raw values in `[0, 1]` (BP and LR
/// are ratios). ROUGE is the ROUGE-L F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub rouge: f64,
    pub meteor: f64,
    pub bp: f64,
    pub lr: f64,
}

/// Two-decimal rendering: scores as percentages, BP and LR as plain ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercentRow {
    pub bleu: String,
    pub rouge: String,
    pub meteor: String,
    pub bp: String,
    pub lr: String,
}

impl MetricReport {
    pub fn render_percent(&self) -> PercentRow {
        PercentRow {
            bleu: format!("{:.2}", self.bleu * 100.0),
            rouge: format!("{:.2}", self.rouge * 100.0),
            meteor: format!("{:.2}", self.meteor * 100.0),
            bp: format!("{:.2}", self.bp),
            lr: format!("{:.2}", self.lr),
        }
    }
}

/// `2PR / (P + R)`, or 0 when both are 0.
pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
