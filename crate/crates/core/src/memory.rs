//! Append-only knowledge memory with provenance.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::search_tree::NodeId;
use crate::text::normalize_key;

/// Snippets scoring below this retrieval reward are not admitted.
pub const ADMISSION_THRESHOLD: u8 = 1;

/// Default character budget for [`KnowledgeMemory::render_context`].
pub const DEFAULT_CONTEXT_BUDGET: usize = 24_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub id: usize,
    pub text: String,
    pub source_doc_id: String,
    pub source_locator: String,
    pub subquery: String,
    pub node_id: NodeId,
    pub retrieval_reward: u8,
    pub step: u32,
}

/// A summarized snippet waiting for admission; the memory assigns the id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnippetCandidate {
    pub text: String,
    pub source_doc_id: String,
    pub source_locator: String,
    pub subquery: String,
    pub node_id: NodeId,
    pub retrieval_reward: u8,
    pub step: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    LowReward,
    DuplicateSource,
    EmptyText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted(usize),
    Rejected(RejectReason),
}

impl Admission {
    pub fn is_admitted(self) -> bool {
        matches!(self, Admission::Admitted(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeMemory {
    pub snippets: Vec<KnowledgeSnippet>,
    pub seen_doc_ids: BTreeSet<String>,
}

impl KnowledgeMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    /// Admit `candidate` if it is useful (retrieval reward at or above the
    /// threshold) and its document has not already contributed a snippet for
    /// the same normalized subquery. The document is recorded as seen either
    /// way.
    pub fn admit(&mut self, candidate: SnippetCandidate) -> Admission {
        self.seen_doc_ids.insert(candidate.source_doc_id.clone());
        if candidate.text.trim().is_empty() {
            return Admission::Rejected(RejectReason::EmptyText);
        }
        if candidate.retrieval_reward < ADMISSION_THRESHOLD {
            return Admission::Rejected(RejectReason::LowReward);
        }
        let key = normalize_key(&candidate.subquery);
        if self
            .snippets
            .iter()
            .any(|s| s.source_doc_id == candidate.source_doc_id && normalize_key(&s.subquery) == key)
        {
            return Admission::Rejected(RejectReason::DuplicateSource);
        }
        let id = self.snippets.len();
        self.snippets.push(KnowledgeSnippet {
            id,
            text: candidate.text,
            source_doc_id: candidate.source_doc_id,
            source_locator: candidate.source_locator,
            subquery: candidate.subquery,
            node_id: candidate.node_id,
            retrieval_reward: candidate.retrieval_reward,
            step: candidate.step,
        });
        Admission::Admitted(id)
    }

    pub fn source_locators(&self) -> BTreeSet<String> {
        self.snippets.iter().map(|s| s.source_locator.clone()).collect()
    }

    pub fn source_doc_ids(&self) -> BTreeSet<String> {
        self.snippets.iter().map(|s| s.source_doc_id.clone()).collect()
    }

    /// Prompt-ready enumeration of the memory in admission order. When the
    /// full listing exceeds `budget` characters the oldest snippets are
    /// dropped and a marker line with the number of hidden snippets is
    /// prepended (the marker itself is not counted against the budget).
    pub fn render_context(&self, budget: usize) -> String {
        let lines: Vec<String> = self
            .snippets
            .iter()
            .map(|s| format!("[k{}] (via: {}) {}", s.id, s.subquery, s.text))
            .collect();
        let mut used = 0usize;
        let mut kept = 0usize;
        for line in lines.iter().rev() {
            let cost = line.chars().count() + usize::from(kept > 0);
            if used + cost > budget {
                break;
            }
            used += cost;
            kept += 1;
        }
        let hidden = lines.len() - kept;
        let body = lines[hidden..].join("\n");
        if hidden == 0 {
            body
        } else if body.is_empty() {
            format!("…{hidden} earlier snippets elided")
        } else {
            format!("…{hidden} earlier snippets elided\n{body}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(doc: &str, subquery: &str, reward: u8) -> SnippetCandidate {
        SnippetCandidate {
            text: format!("about {doc}"),
            source_doc_id: doc.into(),
            source_locator: format!("corpus/{doc}"),
            subquery: subquery.into(),
            node_id: 1,
            retrieval_reward: reward,
            step: 0,
        }
    }

    #[test]
    fn admits_useful_snippet() {
        let mut m = KnowledgeMemory::new();
        assert_eq!(m.admit(candidate("d1", "q", 2)), Admission::Admitted(0));
        assert_eq!(m.admit(candidate("d2", "q", 1)), Admission::Admitted(1));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn rejects_irrelevant_snippet_but_records_doc() {
        let mut m = KnowledgeMemory::new();
        assert_eq!(
            m.admit(candidate("d1", "q", 0)),
            Admission::Rejected(RejectReason::LowReward)
        );
        assert!(m.is_empty());
        assert!(m.seen_doc_ids.contains("d1"));
    }

    #[test]
    fn rejects_same_doc_same_subquery() {
        let mut m = KnowledgeMemory::new();
        assert!(m.admit(candidate("d1", "Who founded X", 2)).is_admitted());
        assert_eq!(
            m.admit(candidate("d1", "who  founded x", 2)),
            Admission::Rejected(RejectReason::DuplicateSource)
        );
        // same doc, different subquery is fine
        assert!(m.admit(candidate("d1", "when was X founded", 1)).is_admitted());
    }

    #[test]
    fn render_empty_and_small() {
        let mut m = KnowledgeMemory::new();
        assert_eq!(m.render_context(100), "");
        m.admit(candidate("d1", "q1", 2));
        m.admit(candidate("d2", "q2", 2));
        assert_eq!(
            m.render_context(1000),
            "[k0] (via: q1) about d1\n[k1] (via: q2) about d2"
        );
    }

    #[test]
    fn render_elides_oldest() {
        let mut m = KnowledgeMemory::new();
        for i in 0..10 {
            // "[k{i}] (via: q{i}) " is 15 chars for one-digit i; pad text to 100 chars per line
            let mut c = candidate(&format!("d{i}"), &format!("q{i}"), 2);
            c.text = "x".repeat(100 - 15);
            m.admit(c);
        }
        let full = m.render_context(usize::MAX);
        assert!(full.lines().all(|l| l.chars().count() == 100));
        // four lines plus three separators
        let out = m.render_context(403);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines[0], "…6 earlier snippets elided");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("[k6]"));
        assert!(lines[4].starts_with("[k9]"));
        // one char short drops another
        assert!(m.render_context(402).starts_with("…7 earlier"));
    }
}
