//! Language model backends.
//!
//! [`HttpBackend`] speaks the chat-completions json protocol. [`MockBackend`]
//! answers from a fixture keyed by the SHA-256 of the excerpt, for tests and
//! reproducible runs.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GenerationConfig;
use crate::sha256_hex;

/// Environment variable holding the bearer token for [`HttpBackend`].
pub const API_KEY_ENV: &str = "RECOVER_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected backend response: {0}")]
    Protocol(String),
    #[error("mock fixture: {0}")]
    Fixture(String),
}

pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    /// The excerpt the prompt was built from.
    pub excerpt: &'a str,
}

/// A text completion service. Implementations must tolerate concurrent calls.
pub trait LlmBackend: Send + Sync {
    fn complete(
        &self,
        request: &CompletionRequest<'_>,
        config: &GenerationConfig,
    ) -> Result<String, BackendError>;
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

/// Encode the request body sent by [`HttpBackend`].
pub fn chat_request_body(prompt: &str, config: &GenerationConfig) -> serde_json::Value {
    serde_json::to_value(ChatRequest {
        model: &config.model_name,
        messages: [ChatMessage {
            role: "user",
            content: prompt,
        }],
        temperature: config.temperature,
        max_tokens: config.max_tokens,
    })
    .expect("request serializes")
}

/// Read the first choice's message content from a chat-completions response.
pub fn parse_chat_response(body: &str) -> Result<String, BackendError> {
    let parsed: ChatResponse =
        serde_json::from_str(body).map_err(|e| BackendError::Protocol(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| BackendError::Protocol("no choices[0].message.content".into()))
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(timeout: Duration, api_key: Option<String>) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend { client, api_key })
    }

    /// Reads the token from [`API_KEY_ENV`] when set.
    pub fn from_env(config: &GenerationConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(Duration::from_secs_f64(config.timeout_secs), key)
    }
}

impl LlmBackend for HttpBackend {
    fn complete(
        &self,
        request: &CompletionRequest<'_>,
        config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let mut req = self
            .client
            .post(&config.endpoint_url)
            .json(&chat_request_body(request.prompt, config));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        parse_chat_response(&body)
    }
}

/// One scripted reply: text, or a simulated transport failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockStep {
    Text(String),
    Error { error: String },
}

/// A fixed reply, or replies consumed in order (the last one repeats).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockEntry {
    Fixed(String),
    Sequence(Vec<MockStep>),
}

/// Mock fixture file.
///
/// ```json
/// {
///   "hash": "sha256",
///   "responses": { "<hex digest of excerpt>": "1. The system must ..." },
///   "default": "None"
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockFixture {
    pub hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub responses: HashMap<String, MockEntry>,
    #[serde(default)]
    pub default: Option<String>,
}

pub const MOCK_HASH: &str = "sha256";

/// Key used by the mock fixture for an excerpt.
pub fn excerpt_digest(excerpt: &str) -> String {
    sha256_hex(excerpt.as_bytes())
}

#[derive(Debug)]
pub struct MockBackend {
    fixture: MockFixture,
    cursors: Mutex<HashMap<String, usize>>,
}

impl MockBackend {
    pub fn new(fixture: MockFixture) -> Result<Self, BackendError> {
        if !fixture.hash.eq_ignore_ascii_case(MOCK_HASH) {
            return Err(BackendError::Fixture(format!(
                "unsupported hash `{}` (expected {MOCK_HASH})",
                fixture.hash
            )));
        }
        Ok(MockBackend {
            fixture,
            cursors: Mutex::new(HashMap::new()),
        })
    }

    /// A mock that always replies `response`.
    pub fn fixed(response: impl Into<String>) -> Self {
        MockBackend::new(MockFixture {
            hash: MOCK_HASH.into(),
            note: None,
            responses: HashMap::new(),
            default: Some(response.into()),
        })
        .expect("sha256 fixture")
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let fixture: MockFixture =
            serde_json::from_str(text).map_err(|e| BackendError::Fixture(e.to_string()))?;
        Self::new(fixture)
    }

    pub fn load_path(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl LlmBackend for MockBackend {
    fn complete(
        &self,
        request: &CompletionRequest<'_>,
        _config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let digest = excerpt_digest(request.excerpt);
        match self.fixture.responses.get(&digest) {
            Some(MockEntry::Fixed(text)) => Ok(text.clone()),
            Some(MockEntry::Sequence(steps)) if !steps.is_empty() => {
                let mut cursors = self.cursors.lock().expect("mock cursor lock");
                let cursor = cursors.entry(digest).or_insert(0);
                let step = &steps[(*cursor).min(steps.len() - 1)];
                *cursor += 1;
                match step {
                    MockStep::Text(text) => Ok(text.clone()),
                    MockStep::Error { error } => Err(BackendError::Transport(error.clone())),
                }
            }
            _ => self.fixture.default.clone().ok_or_else(|| {
                BackendError::Fixture(format!("no response for excerpt digest {digest}"))
            }),
        }
    }
}
