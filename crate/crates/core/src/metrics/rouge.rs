use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{harmonic_mean, ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rouge2")]
    Rouge2,
    #[serde(rename = "rougeN")]
    RougeN(usize),
    #[serde(rename = "rougeL")]
    RougeL,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub variant: RougeVariant,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl RougeReport {
    fn new(variant: RougeVariant, precision: f64, recall: f64) -> Self {
        RougeReport {
            variant,
            precision,
            recall,
            f: harmonic_mean(precision, recall),
        }
    }
}

/// Clipped n-gram overlap. Panics if `n == 0`.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> RougeReport {
    assert!(n >= 1, "ROUGE-N needs n >= 1");
    let count = |tokens: &[String]| -> HashMap<Vec<String>, usize> {
        let mut m = HashMap::new();
        if tokens.len() >= n {
            for gram in tokens.windows(n) {
                *m.entry(gram.to_vec()).or_insert(0) += 1;
            }
        }
        m
    };
    let cand = count(candidate);
    let refs = count(reference);
    let overlap: usize = cand
        .iter()
        .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    let variant = match n {
        1 => RougeVariant::Rouge1,
        2 => RougeVariant::Rouge2,
        _ => RougeVariant::RougeN(n),
    };
    RougeReport::new(
        variant,
        ratio(overlap, cand_total),
        ratio(overlap, ref_total),
    )
}

/// Longest common subsequence length, two-row dynamic programming.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeReport {
    let l = lcs_length(candidate, reference);
    RougeReport::new(
        RougeVariant::RougeL,
        ratio(l, candidate.len()),
        ratio(l, reference.len()),
    )
}
