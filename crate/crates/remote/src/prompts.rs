//! Prompt templates with `{placeholder}` substitution.
//!
//! Defaults are compiled in; any `<name>.txt` file in an override directory
//! replaces the template of the same name.

use std::path::Path;

use hgmcts_core::BackendError;

pub const TEMPLATE_NAMES: [&str; 8] = [
    "system",
    "checklist",
    "subqueries",
    "summarize",
    "answer",
    "exploration",
    "retrieval",
    "feedback",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub system: String,
    pub checklist: String,
    pub subqueries: String,
    pub summarize: String,
    pub answer: String,
    pub exploration: String,
    pub retrieval: String,
    pub feedback: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            system: include_str!("../prompts/system.txt").into(),
            checklist: include_str!("../prompts/checklist.txt").into(),
            subqueries: include_str!("../prompts/subqueries.txt").into(),
            summarize: include_str!("../prompts/summarize.txt").into(),
            answer: include_str!("../prompts/answer.txt").into(),
            exploration: include_str!("../prompts/exploration.txt").into(),
            retrieval: include_str!("../prompts/retrieval.txt").into(),
            feedback: include_str!("../prompts/feedback.txt").into(),
        }
    }
}

impl PromptSet {
    /// Defaults overridden by whichever templates exist in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, BackendError> {
        if !dir.is_dir() {
            return Err(BackendError::Configuration(format!(
                "prompt directory {} does not exist",
                dir.display()
            )));
        }
        let mut set = Self::default();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| {
                BackendError::Configuration(format!("cannot read {}: {e}", path.display()))
            })?;
            *set.slot(name) = text;
        }
        Ok(set)
    }

    fn slot(&mut self, name: &str) -> &mut String {
        match name {
            "system" => &mut self.system,
            "checklist" => &mut self.checklist,
            "subqueries" => &mut self.subqueries,
            "summarize" => &mut self.summarize,
            "answer" => &mut self.answer,
            "exploration" => &mut self.exploration,
            "retrieval" => &mut self.retrieval,
            "feedback" => &mut self.feedback,
            other => unreachable!("unknown template {other}"),
        }
    }
}

/// Replace `{key}` for every listed key in one left-to-right pass. Other
/// braces, such as JSON examples, are left alone, and substituted values are
/// never rescanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        for (key, value) in values {
            if let Some(after) = tail.strip_prefix(key).and_then(|t| t.strip_prefix('}')) {
                out.push_str(value);
                rest = after;
                continue 'scan;
            }
        }
        out.push('{');
        rest = tail;
    }
    out.push_str(rest);
    out
}
