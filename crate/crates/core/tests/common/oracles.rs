//! Brute-force reference implementations of the text metrics, written for
//! clarity rather than speed: n-grams are counted by linear scans, LCS by
//! enumerating subsequences and METEOR alignments by enumerating every
//! partial injection.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use recover_core::metrics::stem;

pub const VOCAB: &[&str] = &[
    "the", "a", "system", "must", "export", "exporting", "exported", "report", "reports", "run",
    "running", "runs", "cat", "cats", "data",
];

pub fn random_tokens<R: Rng>(rng: &mut R, min: usize, max: usize) -> Vec<String> {
    let len = rng.gen_range(min..=max);
    (0..len)
        .map(|_| VOCAB.choose(rng).unwrap().to_string())
        .collect()
}

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences(haystack: &[Vec<String>], gram: &[String]) -> usize {
    haystack.iter().filter(|g| g.as_slice() == gram).count()
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `Err(())` where the metric is undefined (no reference tokens).
pub fn bleu(
    candidates: &[Vec<String>],
    references: &[Vec<Vec<String>>],
    max_n: usize,
    epsilon: bool,
) -> Result<(f64, f64, f64), ()> {
    let mut c = 0;
    let mut r = 0;
    let mut matched = vec![0; max_n];
    let mut total = vec![0; max_n];
    for (cand, refs) in candidates.iter().zip(references) {
        c += cand.len();
        let mut best = refs[0].len();
        for reference in refs {
            let (d, bd) = (reference.len().abs_diff(cand.len()), best.abs_diff(cand.len()));
            if d < bd || (d == bd && reference.len() < best) {
                best = reference.len();
            }
        }
        r += best;
        for n in 1..=max_n {
            let grams = ngrams(cand, n);
            total[n - 1] += grams.len();
            let mut done: Vec<Vec<String>> = Vec::new();
            for g in &grams {
                if done.contains(g) {
                    continue;
                }
                done.push(g.clone());
                let in_cand = occurrences(&grams, g);
                let in_refs = refs
                    .iter()
                    .map(|rf| occurrences(&ngrams(rf, n), g))
                    .max()
                    .unwrap();
                matched[n - 1] += in_cand.min(in_refs);
            }
        }
    }
    if r == 0 {
        return Err(());
    }
    let lr = c as f64 / r as f64;
    if c == 0 {
        return Ok((0.0, 0.0, lr));
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let mut log_sum = 0.0;
    for n in 0..max_n {
        let mut p = frac(matched[n], total[n]);
        if p == 0.0 {
            if !epsilon {
                return Ok((0.0, bp, lr));
            }
            p = 1e-9;
        }
        log_sum += p.ln();
    }
    Ok((bp * (log_sum / max_n as f64).exp(), bp, lr))
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// (precision, recall, f)
pub fn rouge_n(cand: &[String], reference: &[String], n: usize) -> (f64, f64, f64) {
    let cg = ngrams(cand, n);
    let rg = ngrams(reference, n);
    let mut done: Vec<Vec<String>> = Vec::new();
    let mut overlap = 0;
    for g in &cg {
        if !done.contains(g) {
            done.push(g.clone());
            overlap += occurrences(&cg, g).min(occurrences(&rg, g));
        }
    }
    let (p, r) = (frac(overlap, cg.len()), frac(overlap, rg.len()));
    (p, r, f_measure(p, r))
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// Longest common subsequence by trying every subsequence of the shorter input.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "exhaustive LCS is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let picked: Vec<&String> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &short[i])
            .collect();
        if picked.len() > best && is_subsequence(&picked, long) {
            best = picked.len();
        }
    }
    best
}

pub fn rouge_l(cand: &[String], reference: &[String]) -> (f64, f64, f64) {
    let l = lcs(cand, reference);
    let (p, r) = (frac(l, cand.len()), frac(l, reference.len()));
    (p, r, f_measure(p, r))
}

/// Every way to extend `fixed` with pairs accepted by `ok`; returns the one
/// with the most pairs, ties broken by the lexicographically smallest
/// per-candidate reference position (unmatched sorts last).
fn best_extension(
    fixed: &[Option<usize>],
    ref_len: usize,
    ok: &dyn Fn(usize, usize) -> bool,
) -> Vec<Option<usize>> {
    let mut used = vec![false; ref_len];
    for j in fixed.iter().flatten() {
        used[*j] = true;
    }
    let mut best: Option<Vec<Option<usize>>> = None;
    let mut current = fixed.to_vec();
    fn key(a: &[Option<usize>]) -> (usize, Vec<usize>) {
        let count = a.iter().filter(|x| x.is_some()).count();
        (usize::MAX - count, a.iter().map(|x| x.unwrap_or(usize::MAX)).collect())
    }
    fn walk(
        i: usize,
        fixed: &[Option<usize>],
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        ok: &dyn Fn(usize, usize) -> bool,
        best: &mut Option<Vec<Option<usize>>>,
    ) {
        if i == current.len() {
            if best.as_ref().is_none_or(|b| key(current) < key(b)) {
                *best = Some(current.clone());
            }
            return;
        }
        if fixed[i].is_some() {
            walk(i + 1, fixed, current, used, ok, best);
            return;
        }
        walk(i + 1, fixed, current, used, ok, best);
        for j in 0..used.len() {
            if !used[j] && ok(i, j) {
                used[j] = true;
                current[i] = Some(j);
                walk(i + 1, fixed, current, used, ok, best);
                current[i] = None;
                used[j] = false;
            }
        }
    }
    walk(0, fixed, &mut current, &mut used, ok, &mut best);
    best.unwrap()
}

/// (matches, chunks, score) with exact then stem stages.
pub fn meteor(cand: &[String], reference: &[String], with_stem: bool) -> (usize, usize, f64) {
    let none = vec![None; cand.len()];
    let mut align = best_extension(&none, reference.len(), &|i, j| cand[i] == reference[j]);
    if with_stem {
        align = best_extension(&align, reference.len(), &|i, j| {
            stem(&cand[i]) == stem(&reference[j])
        });
    }
    let pairs: Vec<(usize, usize)> = align
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let m = pairs.len();
    if m == 0 {
        return (0, 0, 0.0);
    }
    let mut chunks = 1;
    for w in pairs.windows(2) {
        if !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1) {
            chunks += 1;
        }
    }
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    (m, chunks, fmean * (1.0 - penalty))
}
