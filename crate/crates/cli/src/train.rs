use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use recover_core::classifier::{
    self, cross_validate, load_labeled_path, ClassifierError, CrossValidation,
    FeaturizerKind, KernelKind, WordVectors,
};
use recover_core::{ClassifierConfig, Label, WordVectorTable};

use crate::error::{fail, write_text, CmdResult, ExitKind, OrExit};

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled sentences, `text,label` csv or tsv.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Where to write the model json.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// `tfidf` or `embedding`.
    #[arg(long, value_parser = parse_featurizer)]
    pub featurizer: Option<FeaturizerKind>,
    /// `linear` or `rbf`.
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelKind>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight both classes equally instead of balancing by frequency.
    #[arg(long)]
    pub no_balance: bool,
    #[arg(long)]
    pub token_cap: Option<usize>,
    /// Word vector table (`.vec` text format) for the embedding featurizer.
    #[arg(long, value_name = "PATH")]
    pub vectors: Option<PathBuf>,
    /// Also run stratified k-fold cross-validation and print the fold table.
    #[arg(long, value_name = "K")]
    pub cv: Option<usize>,
    /// Write the cross-validation results as json.
    #[arg(long, value_name = "PATH", requires = "cv")]
    pub cv_report: Option<PathBuf>,
}

fn parse_featurizer(s: &str) -> Result<FeaturizerKind, String> {
    s.parse()
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse()
}

fn classifier_failure(e: ClassifierError) -> crate::error::Failure {
    fail(ExitKind::Input, e)
}

/// `path` relative to `base` when it lies below it, otherwise absolute.
fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let abs = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    base.canonicalize()
        .ok()
        .and_then(|b| abs.strip_prefix(b).ok().map(Path::to_path_buf))
        .unwrap_or(abs)
}

pub fn render_cv(cv: &CrossValidation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>6} {:>5} {:>10} {:>10} {:>10} {:>10}",
        "fold", "train", "test", "precision", "recall", "accuracy", "f1"
    );
    for f in &cv.folds {
        let m = &f.metrics;
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            f.fold + 1,
            f.train_size,
            f.test_size,
            m.precision,
            m.recall,
            m.accuracy,
            m.f1
        );
    }
    let m = &cv.mean;
    let _ = writeln!(
        out,
        "{:>4} {:>6} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
        "mean", "", "", m.precision, m.recall, m.accuracy, m.f1
    );
    out
}

pub fn run(args: TrainArgs) -> CmdResult {
    let data = load_labeled_path(&args.data).or_input(format!("loading {}", args.data.display()))?;
    let defaults = ClassifierConfig::default();
    let config = ClassifierConfig {
        featurizer: args.featurizer.unwrap_or(defaults.featurizer),
        kernel: args.kernel.unwrap_or(defaults.kernel),
        c: args.c.unwrap_or(defaults.c),
        gamma: args.gamma.unwrap_or(defaults.gamma),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        seed: args.seed.unwrap_or(defaults.seed),
        balanced: !args.no_balance,
        token_cap: args.token_cap.unwrap_or(defaults.token_cap),
    };
    config.validate().map_err(classifier_failure)?;

    let model_dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let vectors = match (&config.featurizer, &args.vectors) {
        (FeaturizerKind::EmbeddingAverage, None) => {
            return Err(crate::error::input_error(
                "the embedding featurizer needs --vectors <PATH>",
            ))
        }
        (FeaturizerKind::EmbeddingAverage, Some(path)) => {
            let table = WordVectorTable::load_path(path)
                .or_input(format!("loading word vectors {}", path.display()))?;
            std::fs::create_dir_all(model_dir)
                .or_input(format!("creating {}", model_dir.display()))?;
            Some(WordVectors {
                table: Arc::new(table),
                source: Some(relative_to(path, model_dir)),
            })
        }
        (FeaturizerKind::Tfidf, _) => None,
    };

    let req = data.iter().filter(|s| s.label() == Label::Req).count();
    println!(
        "training {:?}/{:?} on {} sentences ({} Req, {} NonReq)",
        config.featurizer,
        config.kernel,
        data.len(),
        req,
        data.len() - req
    );

    if let Some(k) = args.cv {
        let cv = cross_validate(&data, k, &config, vectors.as_ref()).map_err(classifier_failure)?;
        print!("{}", render_cv(&cv));
        if let Some(path) = &args.cv_report {
            let json = serde_json::to_string_pretty(&cv).or_internal("serializing cv report")?;
            write_text(path, &(json + "\n"))?;
        }
    }

    let model = classifier::train(&data, &config, vectors.as_ref()).map_err(classifier_failure)?;
    let json = serde_json::to_string_pretty(&model.to_json()).or_internal("serializing model")?;
    write_text(&args.out, &(json + "\n"))?;
    println!("model written to {}", args.out.display());
    Ok(())
}
