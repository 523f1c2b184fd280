//! Requirements extraction from stakeholder conversations.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`classifier`] decides which conversation turns are requirements-relevant,
//!    using sentence features from [`features`].
//! 2. [`dialogue`] drops short turns and merges questions with the answer that
//!    immediately follows them.
//! 3. [`generator`] prompts a language model per processed unit, parses the
//!    numbered list it returns and aggregates the results.
//!
//! [`metrics`] and [`eval`] provide the scoring used to compare generated
//! requirements against expert-written ones.

pub mod classifier;
pub mod dialogue;
pub mod eval;
pub mod features;
pub mod generator;
pub mod metrics;
pub mod transcript;

pub use classifier::{ClassifierConfig, Label, LabeledSentence, TrainedModel};
pub use dialogue::{DialogueAct, ProcessedTurn, ProcessingConfig};
pub use eval::ConfusionCounts;
pub use features::{FeatureVector, TokenList, Vocabulary, WordVectorTable};
pub use generator::{GenerationConfig, Requirement, RequirementSet};
pub use transcript::{Conversation, ConversationTurn, TranscriptFormat};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}
