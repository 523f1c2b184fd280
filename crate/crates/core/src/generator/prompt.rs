use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

/// Two-shot instruction block placed before every excerpt. One directive or
/// example line per line, no trailing spaces, `\n` line endings.
pub const PROMPT_TEMPLATE: &str = "\
Given the following excerpt of a conversation, derive the system requirements, if any.
Please answer only with the list of derived requirements as output, as shown in the following examples.
Please do not consider the example excerpts provided in the examples in your final answer.
---- Example 1: ----
Example excerpt: Excerpt of conversation containing system requirements
Example output:
1. The system must have example feature X;
2. The system must have example feature Y;
---- Example 2: ----
Example excerpt: Excerpt of conversation that does not contain system requirements
Example output:
None
";

/// Template, then `Excerpt: ` and the excerpt text.
pub fn build_prompt(excerpt: &str) -> String {
    let mut prompt = String::with_capacity(PROMPT_TEMPLATE.len() + excerpt.len() + 16);
    prompt.push_str(PROMPT_TEMPLATE);
    prompt.push_str("---- Excerpt: ----\n");
    prompt.push_str(excerpt);
    prompt.push('\n');
    prompt
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("response has neither a numbered requirement list nor `None`")]
pub struct ParseFailure;

fn numbered_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*\d+[.)]\s+(.*\S)\s*$").expect("valid regex"))
}

fn boilerplate() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bexample feature [xy]\b").expect("valid regex"))
}

/// Extract requirement texts from a model response.
///
/// Numbered lines (`1. text` or `1) text`) are returned in order with the
/// numbering removed; lines echoing the prompt's example features are
/// dropped. A response that is just `None` yields an empty list.
pub fn parse_llm_output(raw: &str) -> Result<Vec<String>, ParseFailure> {
    let mut numbered = false;
    let mut out = Vec::new();
    for line in raw.lines() {
        if let Some(caps) = numbered_line().captures(line) {
            numbered = true;
            let text = caps[1].trim();
            if !boilerplate().is_match(text) {
                out.push(text.to_string());
            }
        }
    }
    if numbered {
        return Ok(out);
    }
    let salient = raw.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    if salient.eq_ignore_ascii_case("none") {
        Ok(Vec::new())
    } else {
        Err(ParseFailure)
    }
}

/// `1. text` lines, the inverse of [`parse_llm_output`] for well-formed items.
pub fn render_numbered<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {}\n", i + 1, t.as_ref()))
        .collect()
}
