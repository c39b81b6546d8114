//! Backend contracts for the policy model, the reward model and the search
//! engine, plus the deterministic implementations used for offline runs.
//!
//! Backends return raw values; the orchestrator is responsible for range
//! enforcement (see [`clamp_exploration`] and [`clamp_retrieval`]) so that a
//! misbehaving model degrades a search instead of aborting it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checklist::Checklist;
use crate::memory::KnowledgeMemory;
use crate::orchestrator::HistoryContext;

pub mod corpus;
pub mod scripted;

pub use corpus::LocalCorpus;
pub use scripted::{ScriptedBackend, ScriptedScenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Transport failure or exhausted retries. Aborts the search.
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    /// Rejected request (bad credentials, bad endpoint). Aborts the search.
    #[error("backend configuration error: {0}")]
    Configuration(String),
    /// The backend answered but the reply could not be interpreted.
    #[error("could not parse backend reply: {0}")]
    ParseFailed(String),
    #[error("no candidate documents to summarize")]
    NoDocuments,
}

impl BackendError {
    /// Whether the search has to stop because of this error.
    pub fn is_fatal(&self) -> bool {
        matches!(self, BackendError::Unavailable(_) | BackendError::Configuration(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub locator: String,
    pub content: String,
}

/// Structured progress feedback from the reward model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressFeedback {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub solved_goal_ids: BTreeSet<u32>,
    /// Goals the model reports as still open. Only used to detect attempts
    /// to reopen solved goals.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub unsolved_goal_ids: BTreeSet<u32>,
    #[serde(default)]
    pub new_goals: Vec<String>,
    #[serde(default)]
    pub terminate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBundle {
    /// r_q in {0, 1}
    pub exploration: u8,
    /// r_k in {0, 1, 2}
    pub retrieval: u8,
    pub combined: f64,
    pub feedback: ProgressFeedback,
}

/// The document the policy picked from a candidate list and its summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub doc_id: String,
    pub text: String,
}

pub trait PolicyBackend: Send + Sync {
    /// Identifier written into trace headers.
    fn name(&self) -> String;

    fn generate_checklist(&self, query: &str) -> Result<String, BackendError>;

    /// Between 1 and `m_q` subqueries for expanding the node described by
    /// `history`. The engine trims and deduplicates the result.
    fn propose_subqueries(
        &self,
        history: &HistoryContext,
        checklist: &Checklist,
        memory: &KnowledgeMemory,
        m_q: usize,
    ) -> Result<Vec<String>, BackendError>;

    /// Pick the most relevant candidate and summarize it.
    fn summarize(&self, subquery: &str, candidates: &[Document]) -> Result<Summary, BackendError>;

    fn generate_answer(&self, query: &str, memory: &KnowledgeMemory) -> Result<String, BackendError>;

    /// Optional checklist refinement hook, only called when enabled in the
    /// search config. Returns extra goal descriptions to append.
    fn rewrite_checklist(
        &self,
        _query: &str,
        _checklist: &Checklist,
        _feedback: &ProgressFeedback,
    ) -> Result<Vec<String>, BackendError> {
        Ok(Vec::new())
    }
}

pub trait RewardBackend: Send + Sync {
    fn name(&self) -> String;

    /// Raw exploration score; expected to be 0 or 1.
    fn exploration_reward(
        &self,
        subquery: &str,
        checklist: &Checklist,
        history: &HistoryContext,
    ) -> Result<i64, BackendError>;

    /// Raw retrieval score; expected to be 0, 1 or 2.
    fn retrieval_reward(&self, subquery: &str, snippet: &str) -> Result<i64, BackendError>;

    /// `snippet` is the freshly summarized knowledge for `subquery`, if
    /// retrieval produced any. It is passed whether or not the memory
    /// admitted it.
    fn progress_feedback(
        &self,
        subquery: &str,
        snippet: Option<&str>,
        checklist: &Checklist,
        history: &HistoryContext,
        memory: &KnowledgeMemory,
    ) -> Result<ProgressFeedback, BackendError>;
}

pub trait SearchBackend: Send + Sync {
    fn name(&self) -> String;

    /// At most `top_k` documents, best first.
    fn search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError>;
}

/// Force an exploration score into {0, 1}. Anything else becomes 0 and
/// yields a warning.
pub fn clamp_exploration(raw: i64) -> (u8, Option<String>) {
    match raw {
        0 | 1 => (raw as u8, None),
        other => (0, Some(format!("exploration reward {other} out of range, using 0"))),
    }
}

/// Force a retrieval score into {0, 1, 2} by clamping to the nearest bound.
pub fn clamp_retrieval(raw: i64) -> (u8, Option<String>) {
    match raw {
        0..=2 => (raw as u8, None),
        other => {
            let clamped = if other < 0 { 0 } else { 2 };
            (
                clamped,
                Some(format!("retrieval reward {other} out of range, clamped to {clamped}")),
            )
        }
    }
}
