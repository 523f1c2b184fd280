//! Evaluation harness: classification confusion against an oracle,
//! per-turn similarity against several expert references, and corpus-level
//! comparison of two requirement lists.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Label;
use crate::features::tokenize;
use crate::generator::RequirementSet;
use crate::metrics::{
    self, bleu, meteor, rouge_l, rouge_n, sentence_bleu, BleuReport, Matcher, MeteorReport,
    MetricReport, RougeReport, Smoothing,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("turn {0} appears more than once in the {1}")]
    DuplicateIndex(usize, &'static str),
    #[error("turn {0} is in the predictions but not in the oracle")]
    MissingFromOracle(usize),
    #[error("turn {0} is in the oracle but not in the predictions")]
    MissingFromPredictions(usize),
    #[error("turn {0} has no reference texts")]
    NoReferences(usize),
    #[error("no generated turns to evaluate")]
    NothingToEvaluate,
    #[error("requirement set `{0}` is empty")]
    EmptySet(String),
    #[error(transparent)]
    Metric(#[from] metrics::MetricError),
    #[error("{file} row {row}: {message}")]
    Row {
        file: String,
        row: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Req, Label::Req) => self.tp += 1,
            (Label::Req, Label::NonReq) => self.fp += 1,
            (Label::NonReq, Label::NonReq) => self.tn += 1,
            (Label::NonReq, Label::Req) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_req(&self) -> usize {
        self.tp + self.fp
    }

    pub fn predicted_non_req(&self) -> usize {
        self.tn + self.fn_
    }

    /// `tp / (tp + fp)`; `None` when nothing was predicted Req.
    pub fn precision(&self) -> Option<f64> {
        frac(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`; `None` when the oracle has no Req items.
    pub fn recall(&self) -> Option<f64> {
        frac(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        frac(self.tp + self.tn, self.total())
    }
}

fn frac(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Compare predicted labels with oracle labels over the same index set.
pub fn confusion(
    predictions: &[(usize, Label)],
    oracle: &[(usize, Label)],
) -> Result<ConfusionCounts, EvalError> {
    let mut truth: HashMap<usize, Label> = HashMap::with_capacity(oracle.len());
    for &(i, l) in oracle {
        if truth.insert(i, l).is_some() {
            return Err(EvalError::DuplicateIndex(i, "oracle"));
        }
    }
    let mut counts = ConfusionCounts::default();
    let mut seen = std::collections::HashSet::with_capacity(predictions.len());
    for &(i, predicted) in predictions {
        if !seen.insert(i) {
            return Err(EvalError::DuplicateIndex(i, "predictions"));
        }
        let actual = *truth.get(&i).ok_or(EvalError::MissingFromOracle(i))?;
        counts.record(predicted, actual);
    }
    if let Some(&(i, _)) = oracle.iter().find(|(i, _)| !seen.contains(i)) {
        return Err(EvalError::MissingFromPredictions(i));
    }
    Ok(counts)
}

/// Table-style rendering of a confusion analysis, ratios to 10 decimals.
pub fn render_confusion(counts: &ConfusionCounts) -> String {
    let rate = |v: Option<f64>| v.map_or("undefined (0/0)".to_string(), |x| format!("{x:.10}"));
    let mut out = String::new();
    let _ = writeln!(out, "Count");
    let _ = writeln!(out, "  {:<24}{:>12}", "Total Turns", counts.total());
    let _ = writeln!(
        out,
        "  {:<24}{:>12}",
        "Predicted as Req",
        counts.predicted_req()
    );
    let _ = writeln!(
        out,
        "  {:<24}{:>12}",
        "Predicted as NonReq",
        counts.predicted_non_req()
    );
    let _ = writeln!(out, "Evaluation");
    let cell = |name: &str, v: usize| format!("{name} = {v}");
    let _ = writeln!(
        out,
        "  {:<24}{}",
        cell("True Positive", counts.tp),
        cell("True Negative", counts.tn)
    );
    let _ = writeln!(
        out,
        "  {:<24}{}",
        cell("False Positive", counts.fp),
        cell("False Negative", counts.fn_)
    );
    let _ = writeln!(out, "  {:<24}{}", "Precision", rate(counts.precision()));
    let _ = writeln!(out, "  {:<24}{}", "Recall", rate(counts.recall()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // the mean can drift past min/max by an ulp when all values are equal
        Spread {
            min,
            mean: mean.clamp(min, max),
            max,
        }
    }

    fn average(items: &[Spread]) -> Self {
        let n = items.len() as f64;
        Spread {
            min: items.iter().map(|s| s.min).sum::<f64>() / n,
            mean: items.iter().map(|s| s.mean).sum::<f64>() / n,
            max: items.iter().map(|s| s.max).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnScores {
    pub turn: usize,
    pub reference_count: usize,
    pub bleu: Spread,
    pub rouge: Spread,
    pub meteor: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    /// `None` for the overall row.
    pub reference_count: Option<usize>,
    pub turns: usize,
    pub bleu: Spread,
    pub rouge: Spread,
    pub meteor: Spread,
}

impl GroupRow {
    fn from_turns(reference_count: Option<usize>, turns: &[&TurnScores]) -> Self {
        let pick = |f: fn(&TurnScores) -> Spread| {
            Spread::average(&turns.iter().map(|t| f(t)).collect::<Vec<_>>())
        };
        GroupRow {
            reference_count,
            turns: turns.len(),
            bleu: pick(|t| t.bleu),
            rouge: pick(|t| t.rouge),
            meteor: pick(|t| t.meteor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLevelReport {
    pub bleu_smoothing: Smoothing,
    pub turns: Vec<TurnScores>,
    /// One row per distinct reference count, ascending.
    pub groups: Vec<GroupRow>,
    /// Mean over all evaluated turns (equivalently, groups weighted by size).
    pub overall: GroupRow,
}

/// Score each generated turn against every one of its references
/// independently: sentence BLEU (epsilon-smoothed), ROUGE-L F and METEOR.
/// Turns are grouped by reference count; every row averages per-turn
/// min/mean/max values.
pub fn turn_level_eval(
    generated: &BTreeMap<usize, String>,
    references: &BTreeMap<usize, Vec<String>>,
) -> Result<TurnLevelReport, EvalError> {
    turn_level_eval_with(generated, references, Matcher::ExactStem)
}

/// [`turn_level_eval`] with a chosen METEOR matcher.
pub fn turn_level_eval_with(
    generated: &BTreeMap<usize, String>,
    references: &BTreeMap<usize, Vec<String>>,
    matcher: Matcher,
) -> Result<TurnLevelReport, EvalError> {
    if generated.is_empty() {
        return Err(EvalError::NothingToEvaluate);
    }
    let mut turns = Vec::with_capacity(generated.len());
    for (&turn, text) in generated {
        let refs = references
            .get(&turn)
            .filter(|r| !r.is_empty())
            .ok_or(EvalError::NoReferences(turn))?;
        let cand = tokenize(text);
        let mut b = Vec::with_capacity(refs.len());
        let mut r = Vec::with_capacity(refs.len());
        let mut m = Vec::with_capacity(refs.len());
        for reference in refs {
            let rt = tokenize(reference);
            b.push(sentence_bleu(&cand, &[&rt])?.bleu);
            r.push(rouge_l(cand.tokens(), rt.tokens()).f);
            m.push(meteor(cand.tokens(), rt.tokens(), matcher).score);
        }
        turns.push(TurnScores {
            turn,
            reference_count: refs.len(),
            bleu: Spread::of(&b),
            rouge: Spread::of(&r),
            meteor: Spread::of(&m),
        });
    }

    let mut by_count: BTreeMap<usize, Vec<&TurnScores>> = BTreeMap::new();
    for t in &turns {
        by_count.entry(t.reference_count).or_default().push(t);
    }
    let groups = by_count
        .iter()
        .map(|(&count, members)| GroupRow::from_turns(Some(count), members))
        .collect();
    let all: Vec<&TurnScores> = turns.iter().collect();
    let overall = GroupRow::from_turns(None, &all);
    Ok(TurnLevelReport {
        bleu_smoothing: Smoothing::Epsilon,
        turns,
        groups,
        overall,
    })
}

pub fn render_turn_level(report: &TurnLevelReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12}|{:^23}|{:^23}|{:^23}",
        "", "BLEU", "ROUGE", "METEOR"
    );
    let _ = writeln!(
        out,
        "{:<12}|{:>7}{:>8}{:>8}|{:>7}{:>8}{:>8}|{:>7}{:>8}{:>8}",
        "Group with", "Min", "Mean", "Max", "Min", "Mean", "Max", "Min", "Mean", "Max"
    );
    let row = |out: &mut String, name: String, g: &GroupRow| {
        let p = |x: f64| format!("{:.2}", x * 100.0);
        let _ = writeln!(
            out,
            "{:<12}|{:>7}{:>8}{:>8}|{:>7}{:>8}{:>8}|{:>7}{:>8}{:>8}",
            name,
            p(g.bleu.min),
            p(g.bleu.mean),
            p(g.bleu.max),
            p(g.rouge.min),
            p(g.rouge.mean),
            p(g.rouge.max),
            p(g.meteor.min),
            p(g.meteor.mean),
            p(g.meteor.max)
        );
    };
    for g in &report.groups {
        let n = g.reference_count.unwrap_or(0);
        row(
            &mut out,
            format!("{n} answer{}", if n == 1 { "" } else { "s" }),
            g,
        );
    }
    row(&mut out, "Average".to_string(), &report.overall);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusComparison {
    pub name_a: String,
    pub name_b: String,
    pub report: MetricReport,
    pub bleu: BleuReport,
    pub rouge1: RougeReport,
    pub rouge2: RougeReport,
    pub rouge_l: RougeReport,
    pub meteor: MeteorReport,
}

/// Corpus-level comparison: `set_a` is the candidate, `set_b` the reference.
pub fn corpus_compare(
    set_a: &RequirementSet,
    set_b: &RequirementSet,
) -> Result<CorpusComparison, EvalError> {
    let texts = |s: &RequirementSet| {
        s.requirements
            .iter()
            .map(|r| r.text.clone())
            .collect::<Vec<_>>()
    };
    corpus_compare_texts(
        &set_a.conversation_id,
        &texts(set_a),
        &set_b.conversation_id,
        &texts(set_b),
    )
}

/// Each list is newline-joined and tokenized into one segment; BLEU is
/// unsmoothed BLEU-4 over that single segment pair.
pub fn corpus_compare_texts(
    name_a: &str,
    texts_a: &[String],
    name_b: &str,
    texts_b: &[String],
) -> Result<CorpusComparison, EvalError> {
    corpus_compare_texts_with(name_a, texts_a, name_b, texts_b, Matcher::ExactStem)
}

/// [`corpus_compare_texts`] with a chosen METEOR matcher.
pub fn corpus_compare_texts_with(
    name_a: &str,
    texts_a: &[String],
    name_b: &str,
    texts_b: &[String],
    matcher: Matcher,
) -> Result<CorpusComparison, EvalError> {
    if texts_a.is_empty() {
        return Err(EvalError::EmptySet(name_a.to_string()));
    }
    if texts_b.is_empty() {
        return Err(EvalError::EmptySet(name_b.to_string()));
    }
    let a = tokenize(&texts_a.join("\n"));
    let b = tokenize(&texts_b.join("\n"));
    let bleu = bleu(&[&a], &[vec![&b]], 4, Smoothing::None)?;
    let rouge1 = rouge_n(a.tokens(), b.tokens(), 1);
    let rouge2 = rouge_n(a.tokens(), b.tokens(), 2);
    let rouge_l = rouge_l(a.tokens(), b.tokens());
    let meteor = meteor(a.tokens(), b.tokens(), matcher);
    Ok(CorpusComparison {
        name_a: name_a.to_string(),
        name_b: name_b.to_string(),
        report: MetricReport {
            bleu: bleu.bleu,
            rouge: rouge_l.f,
            meteor: meteor.score,
            bp: bleu.bp,
            lr: bleu.lr,
        },
        bleu,
        rouge1,
        rouge2,
        rouge_l,
        meteor,
    })
}

pub fn render_corpus(rows: &[CorpusComparison]) -> String {
    let names: Vec<String> = rows
        .iter()
        .map(|c| format!("{} vs {}", c.name_a, c.name_b))
        .collect();
    let width = names.iter().map(|n| n.chars().count() + 2).fold(28, usize::max);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}{:>8}{:>8}{:>8}{:>6}{:>6}",
        "", "BLEU", "ROUGE", "METEOR", "BP", "LR"
    );
    for (c, name) in rows.iter().zip(&names) {
        let p = c.report.render_percent();
        let _ = writeln!(
            out,
            "{:<width$}{:>8}{:>8}{:>8}{:>6}{:>6}",
            name, p.bleu, p.rouge, p.meteor, p.bp, p.lr
        );
    }
    out
}

/// `index<TAB>label` rows.
pub fn parse_label_tsv(input: &str, file: &str) -> Result<Vec<(usize, Label)>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| EvalError::Row {
            file: file.to_string(),
            row: n + 1,
            message,
        };
        let (idx, label) = line
            .split_once('\t')
            .ok_or_else(|| row_err("expected `index<TAB>label`".into()))?;
        let idx = idx.trim();
        if n == 0 && idx.eq_ignore_ascii_case("index") {
            continue;
        }
        let idx: usize = idx
            .parse()
            .map_err(|_| row_err(format!("bad turn index `{idx}`")))?;
        let label: Label = label.parse().map_err(|e| row_err(format!("{e}")))?;
        out.push((idx, label));
    }
    Ok(out)
}

/// `turn_index<TAB>text` rows; repeated indices collect multiple texts.
pub fn parse_text_tsv(input: &str, file: &str) -> Result<BTreeMap<usize, Vec<String>>, EvalError> {
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| EvalError::Row {
            file: file.to_string(),
            row: n + 1,
            message,
        };
        let (idx, text) = line
            .split_once('\t')
            .ok_or_else(|| row_err("expected `turn_index<TAB>text`".into()))?;
        let idx = idx.trim();
        if n == 0 && idx.eq_ignore_ascii_case("turn_index") {
            continue;
        }
        let idx: usize = idx
            .parse()
            .map_err(|_| row_err(format!("bad turn index `{idx}`")))?;
        let entry = out.entry(idx).or_default();
        if !text.trim().is_empty() {
            entry.push(text.trim().to_string());
        }
    }
    Ok(out)
}
