//! Extracting scores, feedback and subquery lists from free-form model text.
//!
//! Models are asked for fenced JSON, but plain-text fallbacks are accepted:
//! the first standalone integer for scores, and `SOLVED:` / `UNSOLVED:` /
//! `NEW:` / `DONE` lines for feedback.

use std::collections::BTreeSet;

use hgmcts_core::checklist::strip_list_marker;
use hgmcts_core::{BackendError, ProgressFeedback};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    BinaryScore,
    TriScore,
    Feedback,
    SubqueryList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    /// Raw score; range enforcement is the engine's job.
    Score(i64),
    Feedback(ProgressFeedback),
    Subqueries(Vec<String>),
}

pub fn parse_structured_reply(raw: &str, expected: Expected) -> Result<Parsed, BackendError> {
    match expected {
        Expected::BinaryScore | Expected::TriScore => parse_score(raw).map(Parsed::Score),
        Expected::Feedback => parse_feedback(raw).map(Parsed::Feedback),
        Expected::SubqueryList => parse_subqueries(raw).map(Parsed::Subqueries),
    }
}

fn failed(what: &str, raw: &str) -> BackendError {
    let excerpt: String = raw.trim().chars().take(120).collect();
    BackendError::ParseFailed(format!("no {what} in reply {excerpt:?}"))
}

/// First integer not glued to letters or a decimal point. Values beyond
/// `i64` saturate so they still register as out of range.
pub fn first_standalone_integer(text: &str) -> Option<i64> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let negative = start > 0 && chars[start - 1] == '-';
        let sign_at = if negative { start - 1 } else { start };
        let before_ok = sign_at == 0 || {
            let c = chars[sign_at - 1];
            !(c.is_alphanumeric() || c == '.' || c == '_')
        };
        let after_ok = match chars.get(i) {
            None => true,
            Some(c) if c.is_alphanumeric() || *c == '_' => false,
            Some('.') => !chars.get(i + 1).is_some_and(char::is_ascii_digit),
            Some(_) => true,
        };
        if before_ok && after_ok {
            let digits: String = chars[start..i].iter().collect();
            let magnitude = digits.parse::<i64>().unwrap_or(i64::MAX);
            return Some(if negative { -magnitude } else { magnitude });
        }
    }
    None
}

pub fn parse_score(raw: &str) -> Result<i64, BackendError> {
    first_standalone_integer(raw).ok_or_else(|| failed("integer score", raw))
}

/// Contents of fenced code blocks, in order.
fn fenced_blocks(raw: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip an info string such as "json"
        let body_start = after.find('\n').map_or(after.len(), |n| n + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    blocks
}

/// JSON value candidates: fenced blocks, then the whole reply, then the
/// outermost `{...}` or `[...]` span.
fn json_candidates(raw: &str) -> Vec<Value> {
    let mut texts: Vec<&str> = fenced_blocks(raw);
    texts.push(raw);
    for (open, close) in [('{', '}'), ('[', ']')] {
        if let (Some(a), Some(b)) = (raw.find(open), raw.rfind(close)) {
            if a < b {
                texts.push(&raw[a..=b]);
            }
        }
    }
    texts
        .into_iter()
        .filter_map(|t| serde_json::from_str(t.trim()).ok())
        .collect()
}

#[derive(Deserialize)]
struct FeedbackJson {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    solved_goal_ids: Vec<Value>,
    #[serde(default)]
    unsolved_goal_ids: Vec<Value>,
    #[serde(default)]
    new_goals: Vec<String>,
    #[serde(default)]
    terminate: bool,
}

fn ids(values: &[Value]) -> BTreeSet<u32> {
    values
        .iter()
        .filter_map(|v| match v {
            Value::Number(n) => n.as_u64().and_then(|n| u32::try_from(n).ok()),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        })
        .collect()
}

fn id_list(text: &str) -> BTreeSet<u32> {
    text.split(|c: char| !c.is_ascii_digit())
        .filter_map(|t| t.parse().ok())
        .collect()
}

/// Reply text with fenced blocks removed.
fn prose(raw: &str) -> String {
    let mut out = raw.to_string();
    for block in fenced_blocks(raw) {
        out = out.replacen(block, "", 1);
    }
    out.replace("```json", "").replace("```", "").trim().to_string()
}

pub fn parse_feedback(raw: &str) -> Result<ProgressFeedback, BackendError> {
    for value in json_candidates(raw) {
        if !value.is_object() {
            continue;
        }
        if let Ok(fb) = serde_json::from_value::<FeedbackJson>(value) {
            return Ok(ProgressFeedback {
                text: fb.text.unwrap_or_else(|| prose(raw)),
                solved_goal_ids: ids(&fb.solved_goal_ids),
                unsolved_goal_ids: ids(&fb.unsolved_goal_ids),
                new_goals: fb.new_goals.into_iter().filter(|g| !g.trim().is_empty()).collect(),
                terminate: fb.terminate,
            });
        }
    }

    let mut fb = ProgressFeedback::default();
    let mut matched = false;
    let mut text = Vec::new();
    for line in raw.lines() {
        let trimmed = line.trim().trim_start_matches(['-', '*']).trim();
        let upper = trimmed.to_ascii_uppercase();
        if let Some(rest) = upper.strip_prefix("SOLVED:") {
            fb.solved_goal_ids.extend(id_list(rest));
            matched = true;
        } else if let Some(rest) = upper.strip_prefix("UNSOLVED:") {
            fb.unsolved_goal_ids.extend(id_list(rest));
            matched = true;
        } else if upper.starts_with("NEW:") {
            let goal = trimmed[4..].trim();
            if !goal.is_empty() {
                fb.new_goals.push(goal.to_string());
            }
            matched = true;
        } else if upper.trim_end_matches(['.', '!']) == "DONE" {
            fb.terminate = true;
            matched = true;
        } else if !trimmed.is_empty() {
            text.push(line.trim());
        }
    }
    if !matched {
        return Err(failed("feedback", raw));
    }
    fb.text = text.join("\n");
    Ok(fb)
}

pub fn parse_subqueries(raw: &str) -> Result<Vec<String>, BackendError> {
    for value in json_candidates(raw) {
        let list = match &value {
            Value::Array(items) => items,
            Value::Object(map) => match map.get("subqueries") {
                Some(Value::Array(items)) => items,
                _ => continue,
            },
            _ => continue,
        };
        let out: Vec<String> = list
            .iter()
            .filter_map(Value::as_str)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if !out.is_empty() {
            return Ok(out);
        }
    }
    let items: Vec<String> = raw
        .lines()
        .filter_map(strip_list_marker)
        .map(|s| s.trim_matches(['"', '\'', '`']).trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        Err(failed("subquery list", raw))
    } else {
        Ok(items)
    }
}
