//! Requirement generation: prompt a language model once per processed unit,
//! parse the numbered list it returns and compile the results.

mod backend;
mod prompt;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::ProcessedTurn;
use crate::features::tokenize;
use crate::sha256_hex;

pub use backend::{
    chat_request_body, excerpt_digest, parse_chat_response, BackendError, CompletionRequest,
    HttpBackend, LlmBackend, MockBackend, MockEntry, MockFixture, MockStep, API_KEY_ENV, MOCK_HASH,
};
pub use prompt::{build_prompt, parse_llm_output, render_numbered, ParseFailure, PROMPT_TEMPLATE};

/// Upper bound on [`GenerationConfig::retries`].
pub const MAX_RETRIES: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: u32,
    pub timeout_secs: f64,
    /// Maximum number of units generated concurrently.
    pub jobs: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            endpoint_url: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model_name: "llama-2-7b-chat".into(),
            temperature: 0.0,
            max_tokens: 512,
            retries: 2,
            timeout_secs: 120.0,
            jobs: 1,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            ));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        if self.retries > MAX_RETRIES {
            return Err(format!(
                "retries must be at most {MAX_RETRIES}, got {}",
                self.retries
            ));
        }
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(format!(
                "timeout_secs must be positive, got {}",
                self.timeout_secs
            ));
        }
        if self.jobs == 0 {
            return Err("jobs must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub text: String,
    pub source_indices: Vec<usize>,
}

impl Requirement {
    pub fn new(text: impl Into<String>, source_indices: Vec<usize>) -> Self {
        let text = text.into();
        Requirement {
            id: requirement_id(&text, &source_indices),
            text,
            source_indices,
        }
    }
}

/// `R-` and the first 12 hex digits of SHA-256 over the text, a unit
/// separator and the comma-joined source indices.
pub fn requirement_id(text: &str, source_indices: &[usize]) -> String {
    let joined = source_indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let digest = sha256_hex(format!("{text}\u{1f}{joined}"));
    format!("R-{}", &digest[..12])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementSet {
    pub conversation_id: String,
    pub config_digest: String,
    pub requirements: Vec<Requirement>,
}

impl RequirementSet {
    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("requirement set serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Numbered list, each line prefixed with the turns it came from.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "# conversation: {}\n# config: {}\n",
            self.conversation_id, self.config_digest
        );
        for (i, r) in self.requirements.iter().enumerate() {
            let refs = r
                .source_indices
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("{}. [turns {refs}] {}\n", i + 1, r.text));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationCause {
    #[error(transparent)]
    Parse(#[from] ParseFailure),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("generation failed for turns {source_indices:?} after {attempts} attempt(s): {cause}")]
pub struct GenerationError {
    pub source_indices: Vec<usize>,
    pub last_raw: Option<String>,
    pub attempts: u32,
    pub cause: GenerationCause,
}

/// Result of one unit's generation, kept for tracing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitOutcome {
    pub requirements: Vec<Requirement>,
    pub raw_response: String,
    pub attempts: u32,
}

/// Generate requirements for one unit, retrying on parse or transport
/// failure up to `config.retries` times.
pub fn generate_unit(
    backend: &dyn LlmBackend,
    unit: &ProcessedTurn,
    config: &GenerationConfig,
) -> Result<UnitOutcome, GenerationError> {
    let prompt = build_prompt(&unit.text);
    let request = CompletionRequest {
        prompt: &prompt,
        excerpt: &unit.text,
    };
    let mut last_raw = None;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let cause = match backend.complete(&request, config) {
            Ok(raw) => match parse_llm_output(&raw) {
                Ok(texts) => {
                    let requirements = texts
                        .into_iter()
                        .map(|t| Requirement::new(t, unit.source_indices.clone()))
                        .collect();
                    return Ok(UnitOutcome {
                        requirements,
                        raw_response: raw,
                        attempts,
                    });
                }
                Err(e) => {
                    last_raw = Some(raw);
                    GenerationCause::Parse(e)
                }
            },
            Err(e) => GenerationCause::Backend(e),
        };
        log::warn!(
            "turns {:?}: attempt {attempts} failed: {cause}",
            unit.source_indices
        );
        if attempts > config.retries {
            return Err(GenerationError {
                source_indices: unit.source_indices.clone(),
                last_raw,
                attempts,
                cause,
            });
        }
    }
}

pub fn generate(
    backend: &dyn LlmBackend,
    unit: &ProcessedTurn,
    config: &GenerationConfig,
) -> Result<Vec<Requirement>, GenerationError> {
    generate_unit(backend, unit, config).map(|o| o.requirements)
}

/// Generate every unit with at most `config.jobs` concurrent calls. Results
/// are in unit order regardless of completion order.
pub fn generate_all(
    backend: &dyn LlmBackend,
    units: &[ProcessedTurn],
    config: &GenerationConfig,
) -> Vec<Result<UnitOutcome, GenerationError>> {
    let jobs = config.jobs.max(1).min(units.len().max(1));
    if jobs == 1 {
        return units
            .iter()
            .map(|u| generate_unit(backend, u, config))
            .collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<UnitOutcome, GenerationError>>> =
        (0..units.len()).map(|_| None).collect();
    let finished = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= units.len() {
                            break done;
                        }
                        done.push((i, generate_unit(backend, &units[i], config)));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("generation worker panicked"))
            .collect::<Vec<_>>()
    });
    for (i, r) in finished {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every unit generated"))
        .collect()
}

fn normalized(text: &str) -> String {
    tokenize(text).tokens().join(" ")
}

/// Concatenate per-unit requirements in unit order. With `dedup`, a
/// requirement whose normalized text equals an earlier one is dropped and its
/// source indices merged into the earlier one. Ids are made unique with a
/// `-k` suffix.
pub fn aggregate(
    per_unit: &[(ProcessedTurn, Vec<Requirement>)],
    dedup: bool,
    conversation_id: impl Into<String>,
    config_digest: impl Into<String>,
) -> RequirementSet {
    let mut requirements: Vec<Requirement> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (_, reqs) in per_unit {
        for r in reqs {
            if dedup {
                let key = normalized(&r.text);
                if let Some(&at) = seen.get(&key) {
                    let survivor: &mut Requirement = &mut requirements[at];
                    survivor.source_indices.extend(&r.source_indices);
                    survivor.source_indices.sort_unstable();
                    survivor.source_indices.dedup();
                    continue;
                }
                seen.insert(key, requirements.len());
            }
            requirements.push(r.clone());
        }
    }
    if dedup {
        for r in &mut requirements {
            r.id = requirement_id(&r.text, &r.source_indices);
        }
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in &mut requirements {
        let k = counts.entry(r.id.clone()).or_insert(0);
        *k += 1;
        if *k > 1 {
            r.id = format!("{}-{k}", r.id);
        }
    }
    RequirementSet {
        conversation_id: conversation_id.into(),
        config_digest: config_digest.into(),
        requirements,
    }
}

impl fmt::Display for RequirementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}
