use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use recover_core::eval::{
    confusion, corpus_compare_texts_with, parse_label_tsv, parse_text_tsv, render_confusion,
    render_corpus, render_turn_level, turn_level_eval_with,
};
use recover_core::features::tokenize;
use recover_core::metrics::{bleu, meteor, rouge_l, rouge_n, Matcher, MetricReport, Smoothing};
use recover_core::{ConfusionCounts, Label, RequirementSet, TokenList};
use serde::Serialize;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{input_error, read_text, write_text, CmdResult, OrExit};
use crate::pipeline::parse_predictions_jsonl;

#[derive(Clone, Copy, ValueEnum)]
pub enum MatcherArg {
    Exact,
    ExactStem,
}

impl From<MatcherArg> for Matcher {
    fn from(m: MatcherArg) -> Self {
        match m {
            MatcherArg::Exact => Matcher::Exact,
            MatcherArg::ExactStem => Matcher::ExactStem,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SmoothingArg {
    None,
    Epsilon,
}

/// METEOR matcher from the flag, else the config, else exact+stem.
#[derive(Args)]
pub struct MetricFlags {
    #[arg(long, value_enum)]
    pub matcher: Option<MatcherArg>,
    /// Pipeline config json supplying metric options.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

impl MetricFlags {
    fn matcher(&self) -> CmdResult<Matcher> {
        match self.matcher {
            Some(m) => Ok(m.into()),
            None => Ok(PipelineConfig::load_or_default(self.config.as_deref())?
                .metrics
                .meteor_matcher),
        }
    }
}

#[derive(Args)]
pub struct EvalClassifyArgs {
    /// Predicted labels: jsonl from `classify`, or `index<TAB>label` tsv.
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,
    /// Oracle labels, `index<TAB>label` tsv.
    #[arg(long, value_name = "PATH")]
    pub oracle: PathBuf,
    /// Also write the report as json.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalTurnsArgs {
    /// Generated text per turn: `turn_index<TAB>text` tsv or a requirement set json.
    #[arg(long, value_name = "PATH")]
    pub generated: PathBuf,
    /// Reference texts, `turn_index<TAB>text` tsv, one row per reference.
    #[arg(long, value_name = "PATH")]
    pub references: PathBuf,
    #[command(flatten)]
    pub metric: MetricFlags,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalCorpusArgs {
    /// Candidate set: requirement set json, or one requirement per line.
    #[arg(long, value_name = "PATH")]
    pub a: PathBuf,
    /// Reference set, same formats as `--a`.
    #[arg(long, value_name = "PATH")]
    pub b: PathBuf,
    #[arg(long)]
    pub name_a: Option<String>,
    #[arg(long)]
    pub name_b: Option<String>,
    #[command(flatten)]
    pub metric: MetricFlags,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Candidate segments, one per line.
    #[arg(long, value_name = "PATH")]
    pub candidate: PathBuf,
    /// Reference segments, line-aligned with the candidate; repeat for more references.
    #[arg(long = "reference", value_name = "PATH", required = true)]
    pub references: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    #[arg(long, value_enum, default_value = "none")]
    pub smoothing: SmoothingArg,
    #[command(flatten)]
    pub metric: MetricFlags,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CmdResult {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(value).or_internal("serializing report")?;
        write_text(path, &(text + "\n"))?;
    }
    Ok(())
}

fn load_labels(path: &Path) -> CmdResult<Vec<(usize, Label)>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    if is_tsv(path) {
        parse_label_tsv(&text, &name).or_input("invalid label file")
    } else {
        Ok(parse_predictions_jsonl(&text, &name)?
            .into_iter()
            .map(|r| (r.index, r.label))
            .collect())
    }
}

pub fn classify(args: EvalClassifyArgs) -> CmdResult {
    let predictions = load_labels(&args.predictions)?;
    let oracle = load_labels(&args.oracle)?;
    let counts: ConfusionCounts =
        confusion(&predictions, &oracle).or_input("comparing predictions with the oracle")?;
    print!("{}", render_confusion(&counts));
    write_json(
        args.json.as_deref(),
        &json!({
            "counts": counts,
            "precision": counts.precision(),
            "recall": counts.recall(),
            "accuracy": counts.accuracy(),
        }),
    )
}

fn load_set(path: &Path) -> CmdResult<RequirementSet> {
    let text = read_text(path)?;
    RequirementSet::from_json(&text).or_input(format!("parsing {}", path.display()))
}

/// Requirement texts and a display name.
fn load_texts(path: &Path) -> CmdResult<(String, Vec<String>)> {
    if is_json(path) {
        let set = load_set(path)?;
        let texts = set.requirements.iter().map(|r| r.text.clone()).collect();
        Ok((set.conversation_id, texts))
    } else {
        let texts = read_text(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        let name = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        Ok((name, texts))
    }
}

pub fn turns(args: EvalTurnsArgs) -> CmdResult {
    let generated: BTreeMap<usize, String> = if is_json(&args.generated) {
        let set = load_set(&args.generated)?;
        let mut by_turn: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for r in set.requirements {
            if let Some(&first) = r.source_indices.first() {
                by_turn.entry(first).or_default().push(r.text);
            }
        }
        by_turn.into_iter().map(|(k, v)| (k, v.join("\n"))).collect()
    } else {
        let name = args.generated.display().to_string();
        parse_text_tsv(&read_text(&args.generated)?, &name)
            .or_input("invalid generated file")?
            .into_iter()
            .map(|(k, v)| (k, v.join("\n")))
            .collect()
    };
    let name = args.references.display().to_string();
    let references =
        parse_text_tsv(&read_text(&args.references)?, &name).or_input("invalid reference file")?;
    let report = turn_level_eval_with(&generated, &references, args.metric.matcher()?)
        .or_input("turn-level evaluation")?;
    print!("{}", render_turn_level(&report));
    write_json(args.json.as_deref(), &report)
}

pub fn corpus(args: EvalCorpusArgs) -> CmdResult {
    let (name_a, texts_a) = load_texts(&args.a)?;
    let (name_b, texts_b) = load_texts(&args.b)?;
    let name_a = args.name_a.clone().unwrap_or(name_a);
    let name_b = args.name_b.clone().unwrap_or(name_b);
    let comparison =
        corpus_compare_texts_with(&name_a, &texts_a, &name_b, &texts_b, args.metric.matcher()?)
            .or_input("corpus comparison")?;
    print!("{}", render_corpus(std::slice::from_ref(&comparison)));
    write_json(args.json.as_deref(), &comparison)
}

fn read_segments(path: &Path) -> CmdResult<Vec<TokenList>> {
    Ok(read_text(path)?.lines().map(tokenize).collect())
}

#[derive(Serialize)]
struct MetricsOutput {
    segments: usize,
    references: usize,
    report: MetricReport,
    bleu: recover_core::metrics::BleuReport,
    rouge1_f: f64,
    rouge2_f: f64,
    rouge_l_f: f64,
    meteor: f64,
}

/// Mean over segments of the best score against any reference.
fn mean_best(
    cands: &[TokenList],
    refs: &[Vec<TokenList>],
    score: impl Fn(&[String], &[String]) -> f64,
) -> f64 {
    let total: f64 = cands
        .iter()
        .enumerate()
        .map(|(i, c)| {
            refs.iter()
                .map(|r| score(c.tokens(), r[i].tokens()))
                .fold(0.0, f64::max)
        })
        .sum();
    total / cands.len() as f64
}

pub fn metrics(args: MetricsArgs) -> CmdResult {
    let cands = read_segments(&args.candidate)?;
    if cands.is_empty() {
        return Err(input_error(format!("{} has no lines", args.candidate.display())));
    }
    let mut refs = Vec::with_capacity(args.references.len());
    for path in &args.references {
        let segs = read_segments(path)?;
        if segs.len() != cands.len() {
            return Err(input_error(format!(
                "{} has {} lines but {} has {}",
                path.display(),
                segs.len(),
                args.candidate.display(),
                cands.len()
            )));
        }
        refs.push(segs);
    }
    let groups: Vec<Vec<&TokenList>> = (0..cands.len())
        .map(|i| refs.iter().map(|r| &r[i]).collect())
        .collect();
    let smoothing = match args.smoothing {
        SmoothingArg::None => Smoothing::None,
        SmoothingArg::Epsilon => Smoothing::Epsilon,
    };
    let b = bleu(&cands, &groups, args.max_n, smoothing).or_input("computing BLEU")?;
    let matcher = args.metric.matcher()?;
    let rouge_l_f = mean_best(&cands, &refs, |c, r| rouge_l(c, r).f);
    let meteor_score = mean_best(&cands, &refs, |c, r| meteor(c, r, matcher).score);
    let out = MetricsOutput {
        segments: cands.len(),
        references: refs.len(),
        report: MetricReport {
            bleu: b.bleu,
            rouge: rouge_l_f,
            meteor: meteor_score,
            bp: b.bp,
            lr: b.lr,
        },
        bleu: b,
        rouge1_f: mean_best(&cands, &refs, |c, r| rouge_n(c, r, 1).f),
        rouge2_f: mean_best(&cands, &refs, |c, r| rouge_n(c, r, 2).f),
        rouge_l_f,
        meteor: meteor_score,
    };

    let mut text = String::new();
    let p = out.report.render_percent();
    let _ = writeln!(text, "segments   {}", out.segments);
    let _ = writeln!(text, "references {}", out.references);
    let _ = writeln!(text, "BLEU       {}", p.bleu);
    let precisions: Vec<String> = out
        .bleu
        .ngram_precisions
        .iter()
        .map(|x| format!("{:.2}", x * 100.0))
        .collect();
    let _ = writeln!(text, "  p_n      {}", precisions.join(" / "));
    let _ = writeln!(text, "BP         {}", p.bp);
    let _ = writeln!(text, "LR         {}", p.lr);
    let _ = writeln!(text, "ROUGE-1 F  {:.2}", out.rouge1_f * 100.0);
    let _ = writeln!(text, "ROUGE-2 F  {:.2}", out.rouge2_f * 100.0);
    let _ = writeln!(text, "ROUGE-L F  {}", p.rouge);
    let _ = writeln!(text, "METEOR     {}", p.meteor);
    print!("{text}");
    write_json(args.json.as_deref(), &out)
}
