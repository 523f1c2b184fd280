//! Turn relevance classification.
//!
//! A [`TrainedModel`] pairs a fitted featurizer (TF-IDF vocabulary or a word
//! vector table) with a binary SVM. Models persist as one json document; an
//! embedding model records the path of its vector table rather than copying it.

mod cv;
mod data;
pub mod svm;

pub use cv::{cross_validate, stratified_folds, CrossValidation, FoldResult};
pub use data::{load_labeled_path, parse_labeled, DataError};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ConfusionCounts;
use crate::features::{
    self, embed_average, fit_tfidf, tokenize, transform_tfidf, FeatureError, FeatureVector,
    TokenList, Vocabulary, WordVectorTable,
};
use svm::{fit_linear, fit_rbf, LinearParams, RbfParams, SparseVector, SvmModel};

const MODEL_FORMAT: &str = "recover-model/1";

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data is empty")]
    EmptyData,
    #[error("training data contains only {0} samples; both Req and NonReq are required")]
    SingleClass(Label),
    #[error("the embedding featurizer needs a word vector table")]
    MissingVectors,
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error("cross-validation needs 2 <= k <= {max} (smallest class size), got k = {k}")]
    InvalidFolds { k: usize, max: usize },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("model document: {0}")]
    ModelFormat(String),
    #[error("model feature dimension {model} does not match featurizer dimension {featurizer}")]
    DimensionMismatch { model: usize, featurizer: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Req,
    NonReq,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Req => 1.0,
            Label::NonReq => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Req => "Req",
            Label::NonReq => "NonReq",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label `{0}` (expected Req, NonReq, 1 or 0)")]
pub struct LabelParseError(pub String);

impl FromStr for Label {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "req" | "1" => Ok(Label::Req),
            "nonreq" | "0" => Ok(Label::NonReq),
            _ => Err(LabelParseError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    text: String,
    label: Label,
}

impl LabeledSentence {
    /// Returns `None` for blank text.
    pub fn new(text: impl Into<String>, label: Label) -> Option<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            None
        } else {
            Some(LabeledSentence { text, label })
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn label(&self) -> Label {
        self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturizerKind {
    Tfidf,
    EmbeddingAverage,
}

impl FromStr for FeaturizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tfidf" => Ok(FeaturizerKind::Tfidf),
            "embedding" | "embedding-average" => Ok(FeaturizerKind::EmbeddingAverage),
            _ => Err(format!(
                "unknown featurizer `{s}` (expected tfidf or embedding-average)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(format!("unknown kernel `{s}` (expected linear or rbf)")),
        }
    }
}

/// Training configuration. The defaults are FastText-style averaged
/// embeddings with an RBF SVC at `C = 1`, `gamma = 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub featurizer: FeaturizerKind,
    pub kernel: KernelKind,
    pub c: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Weight the Req class by `count(NonReq) / count(Req)`.
    pub balanced: bool,
    /// Tokens averaged per sentence by the embedding featurizer.
    pub token_cap: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            featurizer: FeaturizerKind::EmbeddingAverage,
            kernel: KernelKind::Rbf,
            c: 1.0,
            gamma: 100.0,
            epochs: 100,
            learning_rate: 0.1,
            seed: 42,
            balanced: true,
            token_cap: features::DEFAULT_TOKEN_CAP,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |msg: &str| Err(ClassifierError::InvalidConfig(msg.to_string()));
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("C must be a positive finite number");
        }
        if self.kernel == KernelKind::Rbf && !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be a positive finite number");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be a positive finite number");
        }
        if self.token_cap == 0 {
            return bad("token_cap must be positive");
        }
        Ok(())
    }
}

/// Precision, recall, accuracy and F1 of a binary classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

impl ClassificationMetrics {
    /// Undefined ratios (0/0) are reported as 0.
    pub fn from_counts(counts: &ConfusionCounts) -> Self {
        let precision = counts.precision().unwrap_or(0.0);
        let recall = counts.recall().unwrap_or(0.0);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassificationMetrics {
            precision,
            recall,
            accuracy: counts.accuracy().unwrap_or(0.0),
            f1,
        }
    }

    pub fn mean(items: &[ClassificationMetrics]) -> Self {
        let n = items.len().max(1) as f64;
        let sum = |f: fn(&ClassificationMetrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        ClassificationMetrics {
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            accuracy: sum(|m| m.accuracy),
            f1: sum(|m| m.f1),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Featurizer {
    Tfidf(Vocabulary),
    Embedding {
        table: Arc<WordVectorTable>,
        source: Option<PathBuf>,
        token_cap: usize,
    },
}

impl Featurizer {
    pub fn dimension(&self) -> usize {
        match self {
            Featurizer::Tfidf(v) => v.len(),
            Featurizer::Embedding { table, .. } => table.dimension(),
        }
    }

    pub fn featurize_tokens(&self, tokens: &TokenList) -> FeatureVector {
        match self {
            Featurizer::Tfidf(v) => transform_tfidf(v, tokens),
            Featurizer::Embedding {
                table, token_cap, ..
            } => embed_average(table, tokens, *token_cap),
        }
    }

    pub fn featurize(&self, text: &str) -> FeatureVector {
        self.featurize_tokens(&tokenize(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    config: ClassifierConfig,
    featurizer: Featurizer,
    svm: SvmModel,
    threshold: f64,
    objective_trace: Vec<f64>,
}

impl TrainedModel {
    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn svm(&self) -> &SvmModel {
        &self.svm
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Decision threshold; lowering it trades precision for recall.
    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
    }

    /// Linear-kernel training objective per epoch; empty for rbf models and
    /// for models loaded from disk.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn score(&self, text: &str) -> f64 {
        let x = self.featurizer.featurize(text);
        self.svm.decision(&SparseVector::from(&x))
    }

    pub fn predict(&self, text: &str) -> Prediction {
        self.predict_with_threshold(text, self.threshold)
    }

    pub fn predict_with_threshold(&self, text: &str, threshold: f64) -> Prediction {
        let score = self.score(text);
        Prediction {
            label: if score >= threshold {
                Label::Req
            } else {
                Label::NonReq
            },
            score,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let featurizer = match &self.featurizer {
            Featurizer::Tfidf(vocab) => FeaturizerDocument::Tfidf {
                vocabulary: vocab.clone(),
            },
            Featurizer::Embedding {
                table,
                source,
                token_cap,
            } => FeaturizerDocument::EmbeddingAverage {
                vectors_path: source.as_ref().map(|p| p.display().to_string()),
                dimension: table.dimension(),
                token_cap: *token_cap,
            },
        };
        serde_json::to_value(ModelDocument {
            format: MODEL_FORMAT.to_string(),
            config: self.config.clone(),
            threshold: self.threshold,
            featurizer,
            svm: self.svm.clone(),
        })
        .expect("model serializes")
    }

    /// Load a model document. Embedding models resolve their vector table
    /// path relative to `base_dir` unless `vectors` is supplied.
    pub fn from_json(
        value: serde_json::Value,
        base_dir: &Path,
        vectors: Option<Arc<WordVectorTable>>,
    ) -> Result<Self, ClassifierError> {
        let doc: ModelDocument = serde_json::from_value(value)
            .map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(ClassifierError::ModelFormat(format!(
                "unsupported format `{}`",
                doc.format
            )));
        }
        let featurizer = match doc.featurizer {
            FeaturizerDocument::Tfidf { vocabulary } => Featurizer::Tfidf(vocabulary),
            FeaturizerDocument::EmbeddingAverage {
                vectors_path,
                dimension,
                token_cap,
            } => {
                let source = vectors_path.map(|p| base_dir.join(p));
                let table = match (vectors, &source) {
                    (Some(t), _) => t,
                    (None, Some(path)) => Arc::new(WordVectorTable::load_path(path)?),
                    (None, None) => return Err(ClassifierError::MissingVectors),
                };
                if table.dimension() != dimension {
                    return Err(ClassifierError::DimensionMismatch {
                        model: dimension,
                        featurizer: table.dimension(),
                    });
                }
                Featurizer::Embedding {
                    table,
                    source,
                    token_cap,
                }
            }
        };
        check_dimensions(&doc.svm, &featurizer)?;
        Ok(TrainedModel {
            config: doc.config,
            featurizer,
            svm: doc.svm,
            threshold: doc.threshold,
            objective_trace: Vec::new(),
        })
    }
}

fn check_dimensions(svm: &SvmModel, featurizer: &Featurizer) -> Result<(), ClassifierError> {
    let dim = featurizer.dimension();
    let ok = match svm {
        SvmModel::Linear { weights, .. } => weights.len() == dim,
        SvmModel::Rbf { .. } => svm.input_dimension() <= dim,
    };
    if ok {
        Ok(())
    } else {
        Err(ClassifierError::DimensionMismatch {
            model: svm.input_dimension(),
            featurizer: dim,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    config: ClassifierConfig,
    threshold: f64,
    featurizer: FeaturizerDocument,
    svm: SvmModel,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FeaturizerDocument {
    Tfidf {
        vocabulary: Vocabulary,
    },
    EmbeddingAverage {
        vectors_path: Option<String>,
        dimension: usize,
        token_cap: usize,
    },
}

/// Where the embedding featurizer's table comes from.
#[derive(Debug, Clone)]
pub struct WordVectors {
    pub table: Arc<WordVectorTable>,
    pub source: Option<PathBuf>,
}

impl WordVectors {
    pub fn in_memory(table: WordVectorTable) -> Self {
        WordVectors {
            table: Arc::new(table),
            source: None,
        }
    }
}

/// Per-sample hinge costs: Req gets `count(NonReq) / count(Req)` when balanced.
fn sample_costs(labels: &[Label], balanced: bool) -> Vec<f64> {
    let req = labels.iter().filter(|&&l| l == Label::Req).count();
    let non_req = labels.len() - req;
    let req_weight = if balanced && req > 0 {
        non_req as f64 / req as f64
    } else {
        1.0
    };
    labels
        .iter()
        .map(|&l| if l == Label::Req { req_weight } else { 1.0 })
        .collect()
}

pub fn train(
    data: &[LabeledSentence],
    config: &ClassifierConfig,
    vectors: Option<&WordVectors>,
) -> Result<TrainedModel, ClassifierError> {
    config.validate()?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    let first = data[0].label;
    if data.iter().all(|s| s.label == first) {
        return Err(ClassifierError::SingleClass(first));
    }

    let tokens: Vec<TokenList> = data.iter().map(|s| tokenize(&s.text)).collect();
    let featurizer = match config.featurizer {
        FeaturizerKind::Tfidf => Featurizer::Tfidf(fit_tfidf(&tokens)?),
        FeaturizerKind::EmbeddingAverage => {
            let v = vectors.ok_or(ClassifierError::MissingVectors)?;
            Featurizer::Embedding {
                table: Arc::clone(&v.table),
                source: v.source.clone(),
                token_cap: config.token_cap,
            }
        }
    };
    let xs: Vec<SparseVector> = tokens
        .iter()
        .map(|t| SparseVector::from(&featurizer.featurize_tokens(t)))
        .collect();
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();

    let (svm, objective_trace) = train_vectors(&xs, &labels, featurizer.dimension(), config)?;
    Ok(TrainedModel {
        config: config.clone(),
        featurizer,
        svm,
        threshold: 0.0,
        objective_trace,
    })
}

/// Fit the SVM directly on feature rows. Returns the model and, for the
/// linear kernel, the per-epoch objective.
pub fn train_vectors(
    xs: &[SparseVector],
    labels: &[Label],
    dimension: usize,
    config: &ClassifierConfig,
) -> Result<(SvmModel, Vec<f64>), ClassifierError> {
    config.validate()?;
    if xs.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(ClassifierError::SingleClass(labels[0]));
    }
    let ys: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let costs = sample_costs(labels, config.balanced);
    Ok(match config.kernel {
        KernelKind::Linear => {
            let fit = fit_linear(
                xs,
                &ys,
                &costs,
                dimension,
                &LinearParams {
                    c: config.c,
                    epochs: config.epochs,
                    learning_rate: config.learning_rate,
                    seed: config.seed,
                },
            );
            (fit.model, fit.objective_trace)
        }
        KernelKind::Rbf => {
            let bounds: Vec<f64> = costs.iter().map(|w| w * config.c).collect();
            let model = fit_rbf(xs, &ys, &bounds, &RbfParams::new(config.gamma, xs.len()));
            (model, Vec::new())
        }
    })
}

pub fn predict(model: &TrainedModel, text: &str) -> Prediction {
    model.predict(text)
}
