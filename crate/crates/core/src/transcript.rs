//! Conversation transcripts as ordered speaker turns.
//!
//! Two input formats are accepted:
//!
//! * `jsonl`: one object per line with string fields `speaker` and `text`.
//!   An `index` field is tolerated and ignored; indices are always reassigned
//!   from line order.
//! * `plain`: lines of the form `Speaker: utterance`. The speaker is everything
//!   before the first `": "`. A line without that delimiter continues the
//!   previous turn and is appended with a single space.
//!
//! Blank lines are skipped in both formats.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: text appears before any `Speaker: ` line")]
    OrphanLine { line: usize },
    #[error("line {line}: empty speaker label")]
    EmptySpeaker { line: usize },
    #[error("transcript contains no turns")]
    Empty,
    #[error("unknown transcript format `{0}` (expected jsonl or plain)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptFormat {
    Jsonl,
    Plain,
}

impl TranscriptFormat {
    /// Guess the format from a file name: `.jsonl`/`.json` is jsonl, anything else plain.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TranscriptFormat::Jsonl,
            _ => TranscriptFormat::Plain,
        }
    }
}

impl FromStr for TranscriptFormat {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(TranscriptFormat::Jsonl),
            "plain" | "txt" => Ok(TranscriptFormat::Plain),
            other => Err(TranscriptError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for TranscriptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranscriptFormat::Jsonl => f.write_str("jsonl"),
            TranscriptFormat::Plain => f.write_str("plain"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub index: usize,
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    id: String,
    turns: Vec<ConversationTurn>,
}

impl Conversation {
    /// Build a conversation from `(speaker, text)` pairs, assigning indices in order.
    pub fn from_pairs<S, T>(
        id: impl Into<String>,
        pairs: impl IntoIterator<Item = (S, T)>,
    ) -> Result<Self, TranscriptError>
    where
        S: Into<String>,
        T: Into<String>,
    {
        let turns: Vec<ConversationTurn> = pairs
            .into_iter()
            .enumerate()
            .map(|(index, (speaker, text))| ConversationTurn {
                index,
                speaker: speaker.into(),
                text: text.into(),
            })
            .collect();
        if turns.is_empty() {
            return Err(TranscriptError::Empty);
        }
        if let Some(t) = turns.iter().find(|t| t.speaker.trim().is_empty()) {
            return Err(TranscriptError::EmptySpeaker { line: t.index + 1 });
        }
        Ok(Conversation {
            id: id.into(),
            turns,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn turns(&self) -> &[ConversationTurn] {
        &self.turns
    }

    pub fn turn(&self, index: usize) -> Option<&ConversationTurn> {
        self.turns.get(index)
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Serialize as jsonl, one `{"index","speaker","text"}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            out.push_str(&serde_json::to_string(turn).expect("turn serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Deserialize)]
struct JsonTurn {
    speaker: String,
    text: String,
}

/// Parse a transcript. The conversation id defaults to `"conversation"`; see
/// [`Conversation::with_id`].
pub fn parse_transcript(
    input: &str,
    format: TranscriptFormat,
) -> Result<Conversation, TranscriptError> {
    let pairs = match format {
        TranscriptFormat::Jsonl => parse_jsonl(input)?,
        TranscriptFormat::Plain => parse_plain(input)?,
    };
    Conversation::from_pairs("conversation", pairs)
}

fn parse_jsonl(input: &str) -> Result<Vec<(String, String)>, TranscriptError> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let turn: JsonTurn =
            serde_json::from_str(line).map_err(|source| TranscriptError::Json {
                line: n + 1,
                source,
            })?;
        if turn.speaker.trim().is_empty() {
            return Err(TranscriptError::EmptySpeaker { line: n + 1 });
        }
        pairs.push((turn.speaker, turn.text));
    }
    Ok(pairs)
}

fn parse_plain(input: &str) -> Result<Vec<(String, String)>, TranscriptError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (n, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once(": ") {
            Some((speaker, text)) => {
                let speaker = speaker.trim();
                if speaker.is_empty() {
                    return Err(TranscriptError::EmptySpeaker { line: n + 1 });
                }
                pairs.push((speaker.to_string(), text.trim().to_string()));
            }
            None => {
                let (_, text) = pairs
                    .last_mut()
                    .ok_or(TranscriptError::OrphanLine { line: n + 1 })?;
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(line);
            }
        }
    }
    Ok(pairs)
}

/// Number of maximal whitespace-delimited spans in `text`.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_single_line() {
        let c = parse_transcript("P1: Hello there", TranscriptFormat::Plain).unwrap();
        assert_eq!(
            c.turns(),
            &[ConversationTurn {
                index: 0,
                speaker: "P1".into(),
                text: "Hello there".into()
            }]
        );
    }

    #[test]
    fn jsonl_preserves_order() {
        let input = "{\"speaker\":\"A\",\"text\":\"Q?\"}\n{\"speaker\":\"B\",\"text\":\"Yes\"}\n";
        let c = parse_transcript(input, TranscriptFormat::Jsonl).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.turns()[0].index, 0);
        assert_eq!(c.turns()[1].index, 1);
        assert_eq!(c.turns()[0].text, "Q?");
        assert_eq!(c.turns()[1].speaker, "B");
    }

    #[test]
    fn plain_continuation_joins_with_single_space() {
        let c = parse_transcript("P1: first line\nsecond line", TranscriptFormat::Plain).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.turns()[0].text, "first line second line");
    }

    #[test]
    fn speaker_may_contain_spaces_and_text_colons() {
        let c = parse_transcript(
            "Project Manager: the ratio is 3:1: fine",
            TranscriptFormat::Plain,
        )
        .unwrap();
        assert_eq!(c.turns()[0].speaker, "Project Manager");
        assert_eq!(c.turns()[0].text, "the ratio is 3:1: fine");
    }

    #[test]
    fn jsonl_index_field_is_ignored() {
        let input = "{\"index\":7,\"speaker\":\"A\",\"text\":\"x\"}";
        let c = parse_transcript(input, TranscriptFormat::Jsonl).unwrap();
        assert_eq!(c.turns()[0].index, 0);
    }

    #[test]
    fn malformed_json_reports_line() {
        let input = "{\"speaker\":\"A\",\"text\":\"x\"}\n\n{\"speaker\":";
        match parse_transcript(input, TranscriptFormat::Jsonl) {
            Err(TranscriptError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orphan_plain_line_is_an_error() {
        let err = parse_transcript("no speaker here\nA: hi", TranscriptFormat::Plain).unwrap_err();
        assert!(matches!(err, TranscriptError::OrphanLine { line: 1 }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            parse_transcript("", TranscriptFormat::Plain),
            Err(TranscriptError::Empty)
        ));
        assert!(matches!(
            parse_transcript("\n  \n", TranscriptFormat::Jsonl),
            Err(TranscriptError::Empty)
        ));
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("one two  three"), 3);
        assert_eq!(word_count("Is that all, then?"), 4);
    }

    #[test]
    fn jsonl_round_trip_emits_index() {
        let c = parse_transcript("A: hi\nB: \"quoted\" text", TranscriptFormat::Plain).unwrap();
        let out = c.to_jsonl();
        assert!(out.starts_with("{\"index\":0,"));
        let back = parse_transcript(&out, TranscriptFormat::Jsonl).unwrap();
        assert_eq!(back, c);
    }
}
