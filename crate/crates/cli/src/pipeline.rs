use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use recover_core::dialogue::{self, process_turns};
use recover_core::generator::{
    aggregate, generate_all, GenerationError, HttpBackend, LlmBackend, MockBackend, UnitOutcome,
};
use recover_core::transcript::{parse_transcript, word_count};
use recover_core::{
    sha256_hex, Conversation, GenerationConfig, Label, ProcessedTurn, RequirementSet,
    TrainedModel, TranscriptFormat, WordVectorTable,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{emit, fail, input_error, read_text, write_text, CmdResult, ExitKind, OrExit};
use crate::{BackendArgs, FormatArg};

#[derive(Args)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub transcript: PathBuf,
    /// Transcript format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Word vector table overriding the one recorded in the model.
    #[arg(long, value_name = "PATH")]
    pub vectors: Option<PathBuf>,
    /// Decision threshold overriding the one stored in the model.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output jsonl; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProcessArgs {
    #[arg(long, value_name = "PATH")]
    pub transcript: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Predictions jsonl from `classify`; its Req turns are processed.
    #[arg(long, value_name = "PATH", required_unless_present = "relevant", conflicts_with = "relevant")]
    pub predictions: Option<PathBuf>,
    /// Comma-separated relevant turn indices.
    #[arg(long, value_delimiter = ',')]
    pub relevant: Option<Vec<usize>>,
    #[arg(long)]
    pub min_words: Option<usize>,
    /// Output jsonl; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Processed units jsonl from `process`.
    #[arg(long, value_name = "PATH")]
    pub units: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Defaults to the units file name without extension.
    #[arg(long)]
    pub conversation_id: Option<String>,
    /// Requirement set json; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write the numbered plain-text list.
    #[arg(long, value_name = "PATH")]
    pub text: Option<PathBuf>,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub transcript: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Pipeline config json.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Classifier model, overriding the config.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_words: Option<usize>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Directory receiving requirements.json, requirements.txt and trace.jsonl.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

/// One line of `classify` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

pub fn parse_predictions_jsonl(input: &str, file: &str) -> CmdResult<Vec<PredictionRecord>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).or_input(format!("{file} row {}", n + 1)))
        .collect()
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "conversation".into())
}

pub fn load_conversation(path: &Path, format: Option<FormatArg>) -> CmdResult<Conversation> {
    let text = read_text(path)?;
    let format = format.map_or_else(|| TranscriptFormat::from_path(path), Into::into);
    let conversation =
        parse_transcript(&text, format).or_input(format!("parsing {}", path.display()))?;
    Ok(conversation.with_id(stem_of(path)))
}

pub fn load_model(path: &Path, vectors: Option<&Path>) -> CmdResult<TrainedModel> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).or_input(format!("parsing model {}", path.display()))?;
    let table = vectors
        .map(|v| {
            WordVectorTable::load_path(v)
                .map(Arc::new)
                .or_input(format!("loading word vectors {}", v.display()))
        })
        .transpose()?;
    let base = path.parent().unwrap_or(Path::new(""));
    TrainedModel::from_json(value, base, table).or_input(format!("loading model {}", path.display()))
}

fn classify_turns(
    model: &TrainedModel,
    conversation: &Conversation,
    threshold: Option<f64>,
) -> Vec<PredictionRecord> {
    let threshold = threshold.unwrap_or(model.threshold());
    conversation
        .turns()
        .iter()
        .map(|t| {
            let p = model.predict_with_threshold(&t.text, threshold);
            PredictionRecord {
                index: t.index,
                speaker: Some(t.speaker.clone()),
                label: p.label,
                score: Some(p.score),
            }
        })
        .collect()
}

fn jsonl<T: Serialize>(items: &[T]) -> CmdResult<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).or_internal("serializing output")?);
        out.push('\n');
    }
    Ok(out)
}

pub fn classify(args: ClassifyArgs) -> CmdResult {
    let model = load_model(&args.model, args.vectors.as_deref())?;
    let conversation = load_conversation(&args.transcript, args.format)?;
    let records = classify_turns(&model, &conversation, args.threshold);
    emit(args.out.as_deref(), &jsonl(&records)?)
}

pub fn process(args: ProcessArgs) -> CmdResult {
    let conversation = load_conversation(&args.transcript, args.format)?;
    let relevant = match (&args.relevant, &args.predictions) {
        (Some(r), _) => r.clone(),
        (None, Some(p)) => {
            let records = parse_predictions_jsonl(&read_text(p)?, &p.display().to_string())?;
            records
                .iter()
                .filter(|r| r.label == Label::Req)
                .map(|r| r.index)
                .collect()
        }
        (None, None) => return Err(input_error("pass --predictions or --relevant")),
    };
    let mut config = recover_core::ProcessingConfig::default();
    if let Some(m) = args.min_words {
        config.min_words = m;
    }
    let units = process_turns(&relevant, &conversation, &config).or_input("processing turns")?;
    emit(args.out.as_deref(), &dialogue::to_jsonl(&units))
}

fn apply_backend_flags(generation: &mut GenerationConfig, flags: &BackendArgs) {
    if let Some(v) = &flags.endpoint {
        generation.endpoint_url = v.clone();
    }
    if let Some(v) = &flags.model_name {
        generation.model_name = v.clone();
    }
    if let Some(v) = flags.temperature {
        generation.temperature = v;
    }
    if let Some(v) = flags.max_tokens {
        generation.max_tokens = v;
    }
    if let Some(v) = flags.retries {
        generation.retries = v;
    }
    if let Some(v) = flags.timeout {
        generation.timeout_secs = v;
    }
    if let Some(v) = flags.jobs {
        generation.jobs = v;
    }
}

/// The backend and a descriptor of it for the config digest.
fn build_backend(
    mock: Option<&Path>,
    generation: &GenerationConfig,
) -> CmdResult<(Box<dyn LlmBackend>, String)> {
    match mock {
        Some(path) => {
            let text = read_text(path)?;
            let backend =
                MockBackend::from_json(&text).or_input(format!("loading mock {}", path.display()))?;
            Ok((Box::new(backend), format!("mock:{}", sha256_hex(&text))))
        }
        None => {
            let backend = HttpBackend::from_env(generation).or_backend("creating http client")?;
            Ok((Box::new(backend), "http".to_string()))
        }
    }
}

fn generation_failure(err: &GenerationError) -> crate::error::Failure {
    fail(ExitKind::Backend, anyhow::anyhow!("{err}"))
}

pub fn generate(args: GenerateArgs) -> CmdResult {
    let mut config = PipelineConfig::load_or_default(args.config.as_deref())?;
    apply_backend_flags(&mut config.generation, &args.backend);
    config.dedup |= args.backend.dedup;
    config.validate()?;

    let text = read_text(&args.units)?;
    let units = dialogue::parse_jsonl(&text).map_err(|(line, e)| {
        fail(
            ExitKind::Input,
            anyhow::anyhow!("{} row {line}: {e}", args.units.display()),
        )
    })?;
    let (backend, descriptor) = build_backend(args.backend.mock.as_deref(), &config.generation)?;
    let digest = config.digest(&descriptor)?;

    let outcomes = generate_all(backend.as_ref(), &units, &config.generation);
    let mut per_unit = Vec::with_capacity(units.len());
    for (unit, outcome) in units.into_iter().zip(outcomes) {
        let outcome = outcome.map_err(|e| generation_failure(&e))?;
        per_unit.push((unit, outcome.requirements));
    }
    let id = args
        .conversation_id
        .clone()
        .unwrap_or_else(|| stem_of(&args.units));
    let set = aggregate(&per_unit, config.dedup, id, digest);
    if let Some(path) = &args.text {
        write_text(path, &set.render_text())?;
    }
    emit(args.out.as_deref(), &set.to_json_pretty())
}

fn trace_generation(unit: usize, processed: &ProcessedTurn, outcome: &Result<UnitOutcome, GenerationError>) -> serde_json::Value {
    match outcome {
        Ok(o) => json!({
            "stage": "generate",
            "unit": unit,
            "source_indices": processed.source_indices,
            "attempts": o.attempts,
            "response_sha256": sha256_hex(&o.raw_response),
            "requirement_ids": o.requirements.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        }),
        Err(e) => json!({
            "stage": "generate",
            "unit": unit,
            "source_indices": processed.source_indices,
            "attempts": e.attempts,
            "response_sha256": e.last_raw.as_ref().map(sha256_hex),
            "error": e.cause.to_string(),
        }),
    }
}

/// Every source index must name a turn of the conversation.
fn check_traceable(set: &RequirementSet, conversation: &Conversation) -> CmdResult {
    for r in &set.requirements {
        if r.source_indices.is_empty()
            || r.source_indices.iter().any(|&i| conversation.turn(i).is_none())
        {
            return Err(fail(
                ExitKind::Internal,
                anyhow::anyhow!(
                    "requirement {} refers to turns {:?} outside the conversation",
                    r.id,
                    r.source_indices
                ),
            ));
        }
    }
    Ok(())
}

pub fn run(args: RunArgs) -> CmdResult {
    let mut config = PipelineConfig::load_or_default(args.config.as_deref())?;
    if let Some(m) = &args.model {
        config.model = Some(m.clone());
    }
    if let Some(v) = &args.vectors {
        config.vectors = Some(v.clone());
    }
    if args.threshold.is_some() {
        config.threshold = args.threshold;
    }
    if let Some(m) = args.min_words {
        config.processing.min_words = m;
    }
    apply_backend_flags(&mut config.generation, &args.backend);
    config.dedup |= args.backend.dedup;
    config.validate()?;

    let model_path = config
        .model
        .clone()
        .ok_or_else(|| input_error("no classifier model: set `model` in the config or pass --model"))?;
    let model = load_model(&model_path, config.vectors.as_deref())?;
    let conversation = load_conversation(&args.transcript, args.format)?;
    let (backend, descriptor) = build_backend(args.backend.mock.as_deref(), &config.generation)?;
    let digest = config.digest(&descriptor)?;

    let mut trace = vec![json!({
        "stage": "config",
        "conversation_id": conversation.id(),
        "config_digest": digest,
        "turns": conversation.len(),
    })];

    let predictions = classify_turns(&model, &conversation, config.threshold);
    for p in &predictions {
        trace.push(json!({
            "stage": "classify",
            "index": p.index,
            "label": p.label,
            "score": p.score,
        }));
    }
    let relevant: Vec<usize> = predictions
        .iter()
        .filter(|p| p.label == Label::Req)
        .map(|p| p.index)
        .collect();
    for &i in &relevant {
        let words = conversation.turn(i).map_or(0, |t| word_count(&t.text));
        trace.push(json!({
            "stage": "filter",
            "index": i,
            "words": words,
            "kept": words >= config.processing.min_words,
        }));
    }
    let units = process_turns(&relevant, &conversation, &config.processing)
        .or_internal("processing classified turns")?;
    for (k, u) in units.iter().enumerate() {
        trace.push(json!({
            "stage": "process",
            "unit": k,
            "source_indices": u.source_indices,
            "merged": u.merged,
            "text_sha256": sha256_hex(&u.text),
        }));
    }

    let outcomes = generate_all(backend.as_ref(), &units, &config.generation);
    let mut per_unit = Vec::with_capacity(units.len());
    let mut first_error = None;
    for (k, (unit, outcome)) in units.iter().zip(outcomes).enumerate() {
        trace.push(trace_generation(k, unit, &outcome));
        match outcome {
            Ok(o) => per_unit.push((unit.clone(), o.requirements)),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let trace_path = args.out_dir.join("trace.jsonl");
    write_text(&trace_path, &jsonl(&trace)?)?;
    if let Some(e) = first_error {
        return Err(generation_failure(&e));
    }

    let set = aggregate(&per_unit, config.dedup, conversation.id(), digest);
    check_traceable(&set, &conversation)?;
    write_text(&args.out_dir.join("requirements.json"), &set.to_json_pretty())?;
    write_text(&args.out_dir.join("requirements.txt"), &set.render_text())?;
    println!(
        "{} turns, {} relevant, {} units, {} requirements -> {}",
        conversation.len(),
        relevant.len(),
        units.len(),
        set.len(),
        args.out_dir.display()
    );
    Ok(())
}
