//! Turn post-processing: length filtering and question/answer merging.
//!
//! Relevant turns shorter than [`ProcessingConfig::min_words`] are dropped.
//! Each surviving question is merged with the turn that immediately follows
//! it in the full conversation, whether or not that turn was itself relevant.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Label;
use crate::features::tokenize;
use crate::transcript::{word_count, Conversation, ConversationTurn};

pub const DEFAULT_MIN_WORDS: usize = 7;

const WH_WORDS: &[&str] = &["who", "what", "when", "where", "why", "which", "how"];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will", "would", "should",
    "shall", "may", "might", "must", "have", "has", "had",
];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("relevant turn index {index} is outside the conversation (0..{len})")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessingConfig {
    pub min_words: usize,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        ProcessingConfig {
            min_words: DEFAULT_MIN_WORDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DialogueAct {
    Question,
    OrClause,
    Other,
}

impl DialogueAct {
    pub fn is_question_like(self) -> bool {
        matches!(self, DialogueAct::Question | DialogueAct::OrClause)
    }
}

/// Labels a turn with a dialogue act.
pub trait DialogueActTagger {
    fn tag(&self, text: &str) -> DialogueAct;
}

/// Surface-cue tagger.
///
/// * `Question`: some sentence ends in `?` (optionally followed by closing
///   quotes or brackets), or the first token is a wh-word or an inverting
///   auxiliary.
/// * `OrClause`: otherwise, a token `or` is followed later in the same
///   sentence by a `?` that does not end the sentence (for example
///   `weekly or monthly?, not sure`).
/// * `Other`: everything else.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedTagger;

impl DialogueActTagger for RuleBasedTagger {
    fn tag(&self, text: &str) -> DialogueAct {
        tag_dialogue_act(text)
    }
}

pub fn tag_dialogue_act(text: &str) -> DialogueAct {
    if has_terminal_question_mark(text) || starts_interrogative(text) {
        DialogueAct::Question
    } else if has_or_clause(text) {
        DialogueAct::OrClause
    } else {
        DialogueAct::Other
    }
}

fn starts_interrogative(text: &str) -> bool {
    tokenize(text)
        .tokens()
        .first()
        .is_some_and(|t| WH_WORDS.contains(&t.as_str()) || AUXILIARIES.contains(&t.as_str()))
}

/// Whether the `?` at byte offset `at` ends a sentence: only closers may sit
/// between it and whitespace or the end of the text.
fn ends_sentence(text: &str, at: usize) -> bool {
    text[at + 1..]
        .chars()
        .find(|c| !CLOSERS.contains(c))
        .is_none_or(char::is_whitespace)
}

fn has_terminal_question_mark(text: &str) -> bool {
    text.match_indices('?')
        .any(|(at, _)| ends_sentence(text, at))
}

fn has_or_clause(text: &str) -> bool {
    let mut seen_or = false;
    let mut word = String::new();
    for (at, c) in text.char_indices() {
        if c.is_alphanumeric() {
            word.push(c.to_ascii_lowercase());
            continue;
        }
        if word == "or" {
            seen_or = true;
        }
        word.clear();
        match c {
            '?' if seen_or => return true,
            '.' | '!' | '?' if ends_sentence_after(text, at) => seen_or = false,
            _ => {}
        }
    }
    false
}

fn ends_sentence_after(text: &str, at: usize) -> bool {
    text[at + 1..]
        .chars()
        .next()
        .is_none_or(char::is_whitespace)
}

/// A unit handed to generation: one turn, or a question merged with its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedTurn {
    pub source_indices: Vec<usize>,
    pub text: String,
    pub merged: bool,
}

impl ProcessedTurn {
    pub fn single(turn: &ConversationTurn) -> Self {
        ProcessedTurn {
            source_indices: vec![turn.index],
            text: turn.text.clone(),
            merged: false,
        }
    }

    pub fn merged(question: &ConversationTurn, answer: &ConversationTurn) -> Self {
        debug_assert_eq!(question.index + 1, answer.index);
        ProcessedTurn {
            source_indices: vec![question.index, answer.index],
            text: format!("Q: {}\nA: {}", question.text, answer.text),
            merged: true,
        }
    }

    pub fn first_index(&self) -> usize {
        self.source_indices[0]
    }
}

/// Keep exactly the turns with at least `min_words` whitespace-separated words.
pub fn filter_short<'a>(
    turns: &[(&'a ConversationTurn, Label)],
    config: &ProcessingConfig,
) -> Vec<(&'a ConversationTurn, Label)> {
    turns
        .iter()
        .filter(|(t, _)| word_count(&t.text) >= config.min_words)
        .copied()
        .collect()
}

pub fn process_turns(
    relevant: &[usize],
    conversation: &Conversation,
    config: &ProcessingConfig,
) -> Result<Vec<ProcessedTurn>, DialogueError> {
    process_turns_with(&RuleBasedTagger, relevant, conversation, config)
}

pub fn process_turns_with(
    tagger: &dyn DialogueActTagger,
    relevant: &[usize],
    conversation: &Conversation,
    config: &ProcessingConfig,
) -> Result<Vec<ProcessedTurn>, DialogueError> {
    let indices: BTreeSet<usize> = relevant.iter().copied().collect();
    let mut candidates = Vec::with_capacity(indices.len());
    for &index in &indices {
        let turn = conversation
            .turn(index)
            .ok_or(DialogueError::IndexOutOfRange {
                index,
                len: conversation.len(),
            })?;
        candidates.push((turn, Label::Req));
    }

    Ok(filter_short(&candidates, config)
        .into_iter()
        .map(|(turn, _)| {
            let next = conversation.turn(turn.index + 1);
            match next {
                Some(answer) if tagger.tag(&turn.text).is_question_like() => {
                    ProcessedTurn::merged(turn, answer)
                }
                _ => ProcessedTurn::single(turn),
            }
        })
        .collect())
}

/// One json object per line.
pub fn to_jsonl(units: &[ProcessedTurn]) -> String {
    units
        .iter()
        .map(|u| serde_json::to_string(u).expect("processed turn serializes") + "\n")
        .collect()
}

pub fn parse_jsonl(input: &str) -> Result<Vec<ProcessedTurn>, (usize, serde_json::Error)> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| (n + 1, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::Conversation;

    #[test]
    fn tagger_examples() {
        assert_eq!(
            tag_dialogue_act("Do you want to export data?"),
            DialogueAct::Question
        );
        assert_eq!(
            tag_dialogue_act("We need the scheduling portal."),
            DialogueAct::Other
        );
        assert_eq!(
            tag_dialogue_act("Weekly or monthly reports?"),
            DialogueAct::Question
        );
    }

    #[test]
    fn tagger_question_mark_rules() {
        assert_eq!(
            tag_dialogue_act("Right? We continue."),
            DialogueAct::Question
        );
        assert_eq!(
            tag_dialogue_act("He said \"really?\""),
            DialogueAct::Question
        );
        assert_eq!(
            tag_dialogue_act("see example.com/page?id=3 for it"),
            DialogueAct::Other
        );
        assert_eq!(
            tag_dialogue_act("How it works is simple."),
            DialogueAct::Question
        );
        assert_eq!(tag_dialogue_act(""), DialogueAct::Other);
    }

    #[test]
    fn tagger_or_clause() {
        assert_eq!(
            tag_dialogue_act("The reports weekly or monthly?, we have not decided."),
            DialogueAct::OrClause
        );
        assert_eq!(
            tag_dialogue_act("We export weekly or monthly. Then id?=3 applies."),
            DialogueAct::Other
        );
    }

    fn turn(index: usize, text: &str) -> ConversationTurn {
        ConversationTurn {
            index,
            speaker: "S".into(),
            text: text.into(),
        }
    }

    #[test]
    fn filter_short_boundary() {
        let six = turn(0, "one two three four five six");
        let seven = turn(1, "one two three four five six seven");
        let empty = turn(2, "");
        let kept = filter_short(
            &[
                (&six, Label::Req),
                (&seven, Label::Req),
                (&empty, Label::Req),
            ],
            &ProcessingConfig::default(),
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].0.index, 1);
    }

    fn conversation(texts: &[&str]) -> Conversation {
        Conversation::from_pairs("c", texts.iter().map(|t| ("S", *t))).unwrap()
    }

    #[test]
    fn question_merges_with_next_turn() {
        let mut texts = vec!["filler"; 6];
        texts[4] = "Do you need the system to export the monthly data?";
        texts[5] = "Yes";
        let c = conversation(&texts);
        let out = process_turns(&[4], &c, &ProcessingConfig::default()).unwrap();
        assert_eq!(
            out,
            [ProcessedTurn {
                source_indices: vec![4, 5],
                text: "Q: Do you need the system to export the monthly data?\nA: Yes".into(),
                merged: true
            }]
        );
    }

    #[test]
    fn final_question_stays_unmerged() {
        let mut texts = vec!["filler"; 10];
        texts[9] = "Should the portal also send reminders to every patient?";
        let c = conversation(&texts);
        let out = process_turns(&[9], &c, &ProcessingConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].source_indices, [9]);
        assert!(!out[0].merged);
    }

    #[test]
    fn short_statement_is_filtered() {
        let c = conversation(&["a", "b", "We need a portal now.", "d"]);
        assert!(process_turns(&[2], &c, &ProcessingConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn answer_also_kept_as_own_unit() {
        let c = conversation(&[
            "What kind of reports do you need from the system?",
            "We need weekly reports with all the patient appointment data.",
        ]);
        let out = process_turns(&[1, 0], &c, &ProcessingConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].source_indices, [0, 1]);
        assert_eq!(out[1].source_indices, [1]);
    }

    #[test]
    fn out_of_range_index_errors() {
        let c = conversation(&["only turn"]);
        assert!(matches!(
            process_turns(&[3], &c, &ProcessingConfig::default()),
            Err(DialogueError::IndexOutOfRange { index: 3, len: 1 })
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let units = vec![
            ProcessedTurn::single(&turn(0, "a b c")),
            ProcessedTurn::merged(&turn(1, "q?"), &turn(2, "a")),
        ];
        let text = to_jsonl(&units);
        assert!(text.starts_with("{\"source_indices\":[0],"));
        assert_eq!(parse_jsonl(&text).unwrap(), units);
    }
}
