use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ratio, stem::stem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matcher {
    Exact,
    #[default]
    ExactStem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorReport {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Synonym sets, one per line, words separated by tabs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    sets: HashMap<String, Vec<usize>>,
}

impl SynonymTable {
    pub fn parse(input: &str) -> Self {
        let mut sets: HashMap<String, Vec<usize>> = HashMap::new();
        for (id, line) in input.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            for word in line.split('\t').map(str::trim).filter(|w| !w.is_empty()) {
                sets.entry(word.to_lowercase()).or_default().push(id);
            }
        }
        SynonymTable { sets }
    }

    pub fn load_path(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.sets.get(a), self.sets.get(b)) {
            (Some(x), Some(y)) => x.iter().any(|s| y.contains(s)),
            _ => false,
        }
    }
}

pub fn meteor(candidate: &[String], reference: &[String], matcher: Matcher) -> MeteorReport {
    meteor_with_synonyms(candidate, reference, matcher, None)
}

/// METEOR with staged greedy alignment: exact matches first, then stems,
/// then synonyms. In each stage candidate tokens are visited left to right
/// and take the leftmost unused reference token that matches.
pub fn meteor_with_synonyms(
    candidate: &[String],
    reference: &[String],
    matcher: Matcher,
    synonyms: Option<&SynonymTable>,
) -> MeteorReport {
    let mut alignment: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut used = vec![false; reference.len()];

    align_stage(&mut alignment, &mut used, |i, j| {
        candidate[i] == reference[j]
    });
    if matcher == Matcher::ExactStem {
        let cs: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
        let rs: Vec<String> = reference.iter().map(|t| stem(t)).collect();
        align_stage(&mut alignment, &mut used, |i, j| cs[i] == rs[j]);
    }
    if let Some(table) = synonyms {
        align_stage(&mut alignment, &mut used, |i, j| {
            table.are_synonyms(&candidate[i], &reference[j])
        });
    }

    let pairs: Vec<(usize, usize)> = alignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let m = pairs.len();
    if m == 0 {
        return MeteorReport {
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();

    let precision = ratio(m, candidate.len());
    let recall = ratio(m, reference.len());
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    MeteorReport {
        matches: m,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
        score: fmean * (1.0 - penalty),
    }
}

fn align_stage(
    alignment: &mut [Option<usize>],
    used: &mut [bool],
    matches: impl Fn(usize, usize) -> bool,
) {
    for (i, slot) in alignment.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        if let Some(j) = (0..used.len()).find(|&j| !used[j] && matches(i, j)) {
            *slot = Some(j);
            used[j] = true;
        }
    }
}
