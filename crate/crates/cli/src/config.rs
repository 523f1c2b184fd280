//! Pipeline configuration file and its provenance digest.
//!
//! Relative paths inside a config file are resolved against the file's
//! directory. The digest covers every setting that can change output,
//! with file references replaced by the SHA-256 of their contents, so it
//! does not depend on where the files live.

use std::path::{Path, PathBuf};

use recover_core::generator::GenerationConfig;
use recover_core::metrics::Matcher;
use recover_core::{sha256_hex, ProcessingConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{read_text, CmdResult, OrExit};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    pub meteor_matcher: Matcher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    /// Overrides the decision threshold stored in the model.
    pub threshold: Option<f64>,
    pub processing: ProcessingConfig,
    pub generation: GenerationConfig,
    pub dedup: bool,
    pub metrics: MetricOptions,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: None,
            vectors: None,
            threshold: None,
            processing: ProcessingConfig::default(),
            generation: GenerationConfig::default(),
            dedup: false,
            metrics: MetricOptions::default(),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = read_text(path)?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).or_input(format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.model = config.model.map(|p| base.join(p));
        config.vectors = config.vectors.map(|p| base.join(p));
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> CmdResult<Self> {
        path.map_or_else(|| Ok(PipelineConfig::default()), Self::load)
    }

    pub fn validate(&self) -> CmdResult {
        self.generation
            .validate()
            .map_err(anyhow::Error::msg)
            .or_input("invalid generation settings")?;
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(crate::error::input_error("threshold must be finite"));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical json of the output-relevant settings.
    /// `generation.jobs` is excluded because it never changes output.
    pub fn digest(&self, backend: &str) -> CmdResult<String> {
        let file_digest = |p: &Option<PathBuf>| -> CmdResult<Option<String>> {
            p.as_ref()
                .map(|p| {
                    std::fs::read(p)
                        .map(sha256_hex)
                        .or_input(format!("reading {}", p.display()))
                })
                .transpose()
        };
        let mut generation = serde_json::to_value(&self.generation).or_internal("config")?;
        if let Some(obj) = generation.as_object_mut() {
            obj.remove("jobs");
        }
        let canonical = json!({
            "backend": backend,
            "dedup": self.dedup,
            "generation": generation,
            "metrics": self.metrics,
            "model_sha256": file_digest(&self.model)?,
            "processing": self.processing,
            "seed": self.seed,
            "threshold": self.threshold,
            "vectors_sha256": file_digest(&self.vectors)?,
        });
        Ok(sha256_hex(canonical.to_string()))
    }
}
