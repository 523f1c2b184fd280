use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ratio, MetricError};

/// Value substituted for zero n-gram precisions under [`Smoothing::Epsilon`].
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    None,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub bleu: f64,
    pub ngram_precisions: Vec<f64>,
    /// Clipped n-gram matches per order.
    pub matches: Vec<usize>,
    /// Candidate n-gram totals per order.
    pub totals: Vec<usize>,
    pub bp: f64,
    pub lr: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub smoothing: Smoothing,
    /// Set when the candidate corpus has no tokens; `bp` and `bleu` are then
    /// reported at their limit of 0.
    pub zero_length_candidate: bool,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to `candidate_len`; ties go to the shorter one.
fn effective_reference_len<R: AsRef<[String]>>(candidate_len: usize, group: &[R]) -> usize {
    group
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&len| (len.abs_diff(candidate_len), len))
        .expect("reference group is non-empty")
}

/// Corpus-level BLEU with per-group clipping (max count over the group's
/// references), brevity penalty and length ratio.
pub fn bleu<C, R>(
    candidates: &[C],
    references: &[Vec<R>],
    max_n: usize,
    smoothing: Smoothing,
) -> Result<BleuReport, MetricError>
where
    C: AsRef<[String]>,
    R: AsRef<[String]>,
{
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if max_n == 0 {
        return Err(MetricError::InvalidOrder);
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(MetricError::EmptyReferenceGroup(i));
    }

    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut c = 0usize;
    let mut r = 0usize;
    for (cand, group) in candidates.iter().zip(references) {
        let cand = cand.as_ref();
        c += cand.len();
        r += effective_reference_len(cand.len(), group);
        for n in 1..=max_n {
            let cand_counts = ngram_counts(cand, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for reference in group {
                for (gram, count) in ngram_counts(reference.as_ref(), n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &cand_counts {
                matches[n - 1] += (*count).min(max_ref.get(gram).copied().unwrap_or(0));
            }
            totals[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    if r == 0 {
        return Err(MetricError::EmptyReferences);
    }

    let ngram_precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| {
            let p = ratio(m, t);
            if p == 0.0 && smoothing == Smoothing::Epsilon {
                EPSILON
            } else {
                p
            }
        })
        .collect();

    let zero_length_candidate = c == 0;
    let bp = if zero_length_candidate {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let lr = c as f64 / r as f64;
    let bleu = if zero_length_candidate || ngram_precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = ngram_precisions.iter().map(|p| p.ln()).sum::<f64>() / max_n as f64;
        bp * log_mean.exp()
    };

    Ok(BleuReport {
        bleu,
        ngram_precisions,
        matches,
        totals,
        bp,
        lr,
        candidate_len: c,
        reference_len: r,
        smoothing,
        zero_length_candidate,
    })
}

/// Single-segment BLEU-4 against several references, epsilon-smoothed.
pub fn sentence_bleu<C, R>(candidate: &C, references: &[R]) -> Result<BleuReport, MetricError>
where
    C: AsRef<[String]>,
    R: AsRef<[String]>,
{
    let group: Vec<&[String]> = references.iter().map(AsRef::as_ref).collect();
    bleu(&[candidate.as_ref()], &[group], 4, Smoothing::Epsilon)
}
