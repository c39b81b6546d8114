//! Deterministic stand-ins for the policy model, the reward model and the
//! search engine, all driven by one JSON scenario file.
//!
//! Every method is a pure function of its arguments and the scenario, so two
//! runs over the same scenario produce identical traces.
//!
//! Subquery proposals are looked up by context fingerprint, first match wins:
//!
//! 1. `todo:<ids>` with the comma-separated ids of the unsolved goals (only
//!    when the checklist passed in has goals),
//! 2. `depth:<n>` with the number of subqueries on the path being expanded,
//! 3. `default`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::{CorpusError, LocalCorpus};
use super::{BackendError, Document, PolicyBackend, ProgressFeedback, RewardBackend, SearchBackend, Summary};
use crate::checklist::Checklist;
use crate::memory::KnowledgeMemory;
use crate::orchestrator::HistoryContext;
use crate::text::normalize_key;

/// One scripted reward-model verdict for a (subquery, snippet) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardEntry {
    pub subquery: String,
    pub snippet: String,
    /// Raw value, deliberately not range-checked here.
    pub exploration: i64,
    pub retrieval: i64,
    #[serde(default)]
    pub feedback: ProgressFeedback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedScenario {
    #[serde(default)]
    pub name: String,
    pub query: String,
    pub checklist_text: String,
    pub corpus: Vec<Document>,
    pub subquery_script: BTreeMap<String, Vec<String>>,
    pub summary_script: BTreeMap<String, String>,
    pub reward_script: Vec<RewardEntry>,
    pub answer_script: String,
    pub gold_doc_ids: BTreeSet<String>,
    /// Reference answers for metric computation; defaults to the scripted
    /// answer when absent.
    #[serde(default)]
    pub gold_answers: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid scenario corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScriptedScenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let scenario: Self = serde_json::from_str(&raw).map_err(|source| ScenarioError::Json {
            path: path.display().to_string(),
            source,
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.query.trim().is_empty() {
            return Err(ScenarioError::Invalid("query is empty".into()));
        }
        if let Some(d) = self.corpus.iter().find(|d| d.content.trim().is_empty()) {
            return Err(ScenarioError::Invalid(format!("document {} has no content", d.doc_id)));
        }
        let ids: BTreeSet<&str> = self.corpus.iter().map(|d| d.doc_id.as_str()).collect();
        if ids.len() != self.corpus.len() {
            return Err(ScenarioError::Invalid("duplicate doc_id in corpus".into()));
        }
        if let Some(g) = self.gold_doc_ids.iter().find(|g| !ids.contains(g.as_str())) {
            return Err(ScenarioError::Invalid(format!("gold document {g} is not in the corpus")));
        }
        Ok(())
    }

    /// Locators of the gold documents.
    pub fn gold_pages(&self) -> BTreeSet<String> {
        self.corpus
            .iter()
            .filter(|d| self.gold_doc_ids.contains(&d.doc_id))
            .map(|d| d.locator.clone())
            .collect()
    }

    pub fn reference_answers(&self) -> Vec<String> {
        if self.gold_answers.is_empty() {
            vec![self.answer_script.clone()]
        } else {
            self.gold_answers.clone()
        }
    }
}

/// Scripted policy, reward and search backends over one scenario.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    scenario: ScriptedScenario,
    corpus: LocalCorpus,
    by_pair: HashMap<(String, String), usize>,
    by_subquery: HashMap<String, usize>,
}

impl ScriptedBackend {
    pub fn new(scenario: ScriptedScenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let corpus = LocalCorpus::new(scenario.corpus.clone())?;
        let mut by_pair = HashMap::new();
        let mut by_subquery = HashMap::new();
        for (i, entry) in scenario.reward_script.iter().enumerate() {
            let sq = normalize_key(&entry.subquery);
            by_pair.entry((sq.clone(), normalize_key(&entry.snippet))).or_insert(i);
            by_subquery.entry(sq).or_insert(i);
        }
        Ok(Self {
            scenario,
            corpus,
            by_pair,
            by_subquery,
        })
    }

    pub fn scenario(&self) -> &ScriptedScenario {
        &self.scenario
    }

    fn entry(&self, subquery: &str, snippet: &str) -> Option<&RewardEntry> {
        self.by_pair
            .get(&(normalize_key(subquery), normalize_key(snippet)))
            .map(|&i| &self.scenario.reward_script[i])
    }

    fn script_for(&self, history: &HistoryContext, checklist: &Checklist) -> Option<&Vec<String>> {
        let script = &self.scenario.subquery_script;
        if !checklist.is_empty() {
            let todo = checklist
                .unsolved_ids()
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",");
            if let Some(list) = script.get(&format!("todo:{todo}")) {
                return Some(list);
            }
        }
        script
            .get(&format!("depth:{}", history.path_subqueries.len()))
            .or_else(|| script.get("default"))
    }
}

impl PolicyBackend for ScriptedBackend {
    fn name(&self) -> String {
        format!("scripted-policy:{}", self.scenario.name)
    }

    fn generate_checklist(&self, _query: &str) -> Result<String, BackendError> {
        Ok(self.scenario.checklist_text.clone())
    }

    fn propose_subqueries(
        &self,
        history: &HistoryContext,
        checklist: &Checklist,
        _memory: &KnowledgeMemory,
        m_q: usize,
    ) -> Result<Vec<String>, BackendError> {
        Ok(self
            .script_for(history, checklist)
            .map(|list| list.iter().take(m_q).cloned().collect())
            .unwrap_or_default())
    }

    fn summarize(&self, _subquery: &str, candidates: &[Document]) -> Result<Summary, BackendError> {
        let first = candidates.first().ok_or(BackendError::NoDocuments)?;
        let summary = candidates
            .iter()
            .find_map(|d| {
                self.scenario.summary_script.get(&d.doc_id).map(|text| Summary {
                    doc_id: d.doc_id.clone(),
                    text: text.clone(),
                })
            })
            .unwrap_or_else(|| Summary {
                doc_id: first.doc_id.clone(),
                text: first.content.clone(),
            });
        Ok(summary)
    }

    fn generate_answer(&self, _query: &str, _memory: &KnowledgeMemory) -> Result<String, BackendError> {
        Ok(self.scenario.answer_script.clone())
    }
}

impl RewardBackend for ScriptedBackend {
    fn name(&self) -> String {
        format!("scripted-reward:{}", self.scenario.name)
    }

    fn exploration_reward(
        &self,
        subquery: &str,
        _checklist: &Checklist,
        _history: &HistoryContext,
    ) -> Result<i64, BackendError> {
        Ok(self
            .by_subquery
            .get(&normalize_key(subquery))
            .map_or(0, |&i| self.scenario.reward_script[i].exploration))
    }

    fn retrieval_reward(&self, subquery: &str, snippet: &str) -> Result<i64, BackendError> {
        Ok(self.entry(subquery, snippet).map_or(0, |e| e.retrieval))
    }

    /// Reports as solved every goal credited to a snippet already in memory
    /// or to the current snippet, and terminates once that covers the whole
    /// checklist.
    fn progress_feedback(
        &self,
        subquery: &str,
        snippet: Option<&str>,
        checklist: &Checklist,
        _history: &HistoryContext,
        memory: &KnowledgeMemory,
    ) -> Result<ProgressFeedback, BackendError> {
        let current = snippet.and_then(|s| self.entry(subquery, s));
        let mut solved: BTreeSet<u32> = memory
            .snippets
            .iter()
            .filter_map(|s| self.entry(&s.subquery, &s.text))
            .flat_map(|e| e.feedback.solved_goal_ids.iter().copied())
            .collect();
        if let Some(e) = current {
            solved.extend(e.feedback.solved_goal_ids.iter().copied());
        }
        let (text, new_goals) = current
            .map(|e| (e.feedback.text.clone(), e.feedback.new_goals.clone()))
            .unwrap_or_default();
        let existing: BTreeSet<String> =
            checklist.goals.iter().map(|g| normalize_key(&g.description)).collect();
        let grows = new_goals.iter().any(|g| !existing.contains(&normalize_key(g)));
        let terminate = !checklist.is_empty()
            && !grows
            && checklist
                .goals
                .iter()
                .all(|g| solved.contains(&g.id) || checklist.solved_ids().contains(&g.id));
        Ok(ProgressFeedback {
            text,
            solved_goal_ids: solved,
            unsolved_goal_ids: BTreeSet::new(),
            new_goals,
            terminate,
        })
    }
}

impl SearchBackend for ScriptedBackend {
    fn name(&self) -> String {
        format!("scripted-search:{}", self.scenario.name)
    }

    fn search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError> {
        self.corpus.search(subquery, top_k)
    }
}
