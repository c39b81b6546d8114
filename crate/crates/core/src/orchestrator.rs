//! The search loop: checklist generation, UCT selection, expansion with
//! retrieval and summarization, reward evaluation, checklist update,
//! backpropagation, termination and answer generation.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::backends::{
    clamp_exploration, clamp_retrieval, BackendError, PolicyBackend, ProgressFeedback,
    RewardBackend, RewardBundle, SearchBackend,
};
use crate::checklist::Checklist;
use crate::memory::{Admission, KnowledgeMemory, SnippetCandidate, DEFAULT_CONTEXT_BUDGET};
use crate::search_tree::{EvaluationRecord, NodeId, SearchTree, TreeError};
use crate::text::normalize_key;
use crate::trace::{Phase, TraceError, TraceEvent, Tracer, ARTIFACT_VERSION};

/// How exploration and retrieval rewards are folded into one node reward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardCombination {
    /// r = r_q * r_k
    #[default]
    Product,
    /// r = r_q + r_k
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_simulations: u32,
    pub max_depth: u32,
    pub uct_weight: f64,
    /// Subqueries requested per expansion.
    pub m_q: usize,
    /// Search results per subquery.
    pub top_k: usize,
    /// Character budget when the memory is rendered into prompts.
    pub memory_budget: usize,
    pub seed: u64,
    /// When false, the checklist is neither generated nor shown to the
    /// backends (the unguided ablation).
    pub use_checklist: bool,
    pub reward_combination: RewardCombination,
    /// Call [`PolicyBackend::rewrite_checklist`] after every feedback.
    pub checklist_rewrite: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_simulations: 40,
            max_depth: 6,
            uct_weight: 0.2,
            m_q: 3,
            top_k: 3,
            memory_budget: DEFAULT_CONTEXT_BUDGET,
            seed: 0,
            use_checklist: true,
            reward_combination: RewardCombination::Product,
            checklist_rewrite: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: &str| Err(SearchError::InvalidConfig(msg.to_string()));
        if self.max_simulations == 0 {
            return bad("max_simulations must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.uct_weight >= 0.0 && self.uct_weight.is_finite()) {
            return bad("uct_weight must be finite and non-negative");
        }
        if self.m_q == 0 {
            return bad("m_q must be positive");
        }
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        if self.memory_budget == 0 {
            return bad("memory_budget must be positive");
        }
        Ok(())
    }
}

/// Context handed to the policy and reward models when a node is expanded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryContext {
    pub input_query: String,
    pub last_feedback: Option<ProgressFeedback>,
    /// Subqueries from the root down to the node being expanded.
    pub path_subqueries: Vec<String>,
}

impl HistoryContext {
    /// Prompt-ready rendering.
    pub fn render(&self) -> String {
        let mut out = format!("Question: {}\n", self.input_query);
        if let Some(fb) = &self.last_feedback {
            if !fb.text.trim().is_empty() {
                out.push_str(&format!("Last progress feedback: {}\n", fb.text.trim()));
            }
        }
        if self.path_subqueries.is_empty() {
            out.push_str("Previous subqueries: none\n");
        } else {
            out.push_str("Previous subqueries:\n");
            for (i, q) in self.path_subqueries.iter().enumerate() {
                out.push_str(&format!("{}. {}\n", i + 1, q));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    AllGoalsSolved,
    BudgetExhausted,
    SearchExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub answer: String,
    pub termination_reason: TerminationReason,
    pub simulations_used: u32,
    pub checklist: Checklist,
    pub memory: KnowledgeMemory,
    pub tree: SearchTree,
    /// Where the trace was written, if anywhere.
    pub trace: Option<String>,
    #[serde(skip)]
    pub events: Vec<TraceEvent>,
}

impl SearchOutcome {
    /// JSON report of the outcome; byte-stable for identical searches.
    pub fn to_report_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("search aborted after {simulations_used} simulations: {cause}")]
    Aborted {
        cause: BackendError,
        simulations_used: u32,
        trace: Vec<TraceEvent>,
    },
    #[error("search aborted, trace could not be written: {source}")]
    TraceIo {
        source: TraceError,
        trace: Vec<TraceEvent>,
    },
    #[error("search tree error: {0}")]
    Tree(#[from] TreeError),
}

impl SearchError {
    /// Events recorded before the search stopped, when available.
    pub fn partial_trace(&self) -> &[TraceEvent] {
        match self {
            SearchError::Aborted { trace, .. } | SearchError::TraceIo { trace, .. } => trace,
            _ => &[],
        }
    }
}

/// Combine exploration and retrieval rewards as a product.
pub fn combine_reward(r_q: i64, r_k: i64) -> Result<f64, SearchError> {
    combine_reward_with(RewardCombination::Product, r_q, r_k)
}

pub fn combine_reward_with(mode: RewardCombination, r_q: i64, r_k: i64) -> Result<f64, SearchError> {
    if !(0..=1).contains(&r_q) {
        return Err(SearchError::InvalidArgument(format!("exploration reward {r_q} not in {{0,1}}")));
    }
    if !(0..=2).contains(&r_k) {
        return Err(SearchError::InvalidArgument(format!("retrieval reward {r_k} not in {{0,1,2}}")));
    }
    Ok(match mode {
        RewardCombination::Product => (r_q * r_k) as f64,
        RewardCombination::Sum => (r_q + r_k) as f64,
    })
}

/// The three backend handles a search needs.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub policy: &'a dyn PolicyBackend,
    pub reward: &'a dyn RewardBackend,
    pub search: &'a dyn SearchBackend,
}

/// Outcome of evaluating one freshly materialized child.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildResult {
    pub node: NodeId,
    pub rewards: RewardBundle,
}

/// Run a complete search for `query`. Events go to `tracer`; the caller
/// fills in [`SearchOutcome::trace`] if it wrote them somewhere.
pub fn run_search(
    query: &str,
    config: &SearchConfig,
    backends: Backends<'_>,
    tracer: Tracer,
) -> Result<SearchOutcome, SearchError> {
    if query.trim().is_empty() {
        return Err(SearchError::InvalidArgument("query is empty".into()));
    }
    config.validate()?;
    let tree = SearchTree::new(query, config.max_depth)?;
    let mut search = Search {
        query: query.to_string(),
        config,
        backends,
        tree,
        checklist: Checklist::default(),
        memory: KnowledgeMemory::new(),
        simulations_used: 0,
        last_feedback: None,
        tracer,
    };
    match search.run() {
        Ok((reason, answer)) => {
            search.tracer.flush().map_err(|source| SearchError::TraceIo {
                source,
                trace: search.tracer.events().to_vec(),
            })?;
            Ok(SearchOutcome {
                answer,
                termination_reason: reason,
                simulations_used: search.simulations_used,
                checklist: search.checklist,
                memory: search.memory,
                tree: search.tree,
                trace: None,
                events: search.tracer.into_events(),
            })
        }
        Err(stop) => {
            // best effort: keep whatever made it to disk
            let _ = search.tracer.flush();
            let trace = search.tracer.into_events();
            Err(match stop {
                Stop::Backend(cause) => SearchError::Aborted {
                    cause,
                    simulations_used: search.simulations_used,
                    trace,
                },
                Stop::Trace(source) => SearchError::TraceIo { source, trace },
                Stop::Tree(e) => SearchError::Tree(e),
            })
        }
    }
}

enum Stop {
    Backend(BackendError),
    Trace(TraceError),
    Tree(TreeError),
}

impl From<TraceError> for Stop {
    fn from(e: TraceError) -> Self {
        Stop::Trace(e)
    }
}

impl From<TreeError> for Stop {
    fn from(e: TreeError) -> Self {
        Stop::Tree(e)
    }
}

struct Search<'a> {
    query: String,
    config: &'a SearchConfig,
    backends: Backends<'a>,
    tree: SearchTree,
    checklist: Checklist,
    memory: KnowledgeMemory,
    simulations_used: u32,
    last_feedback: Option<ProgressFeedback>,
    tracer: Tracer,
}

/// Empty stand-in shown to backends when guidance is disabled.
static NO_CHECKLIST: Checklist = Checklist {
    goals: Vec::new(),
    revision: 0,
};

impl Search<'_> {
    fn guided(&self) -> bool {
        self.config.use_checklist
    }

    fn visible_checklist(&self) -> &Checklist {
        if self.guided() {
            &self.checklist
        } else {
            &NO_CHECKLIST
        }
    }

    /// Turn a non-fatal backend error into a warning; fatal ones stop the search.
    fn tolerate(&mut self, err: BackendError, what: &str) -> Result<(), Stop> {
        if err.is_fatal() {
            return Err(Stop::Backend(err));
        }
        self.tracer.warn(format!("{what}: {err}"), json!(null))?;
        Ok(())
    }

    fn run(&mut self) -> Result<(TerminationReason, String), Stop> {
        self.tracer.emit(
            Phase::Header,
            json!({
                "version": ARTIFACT_VERSION,
                "query": self.query,
                "config": self.config,
                "backends": {
                    "policy": self.backends.policy.name(),
                    "reward": self.backends.reward.name(),
                    "search": self.backends.search.name(),
                },
            }),
        )?;
        self.init_checklist()?;

        let reason = loop {
            if self.checklist.is_complete() {
                break TerminationReason::AllGoalsSolved;
            }
            if self.simulations_used >= self.config.max_simulations {
                break TerminationReason::BudgetExhausted;
            }
            let node = match self.tree.select(self.config.uct_weight) {
                Ok(node) => node,
                Err(TreeError::SearchExhausted) => break TerminationReason::SearchExhausted,
                Err(e) => return Err(e.into()),
            };
            let n = &self.tree.nodes[node];
            self.tracer.emit(
                Phase::Selection,
                json!({ "node": node, "depth": n.depth, "visits": n.visits, "value": n.value }),
            )?;
            self.expand_and_evaluate(node)?;
        };
        self.tracer.emit(
            Phase::Terminate,
            json!({
                "reason": reason,
                "simulations_used": self.simulations_used,
                "solved_goal_ids": self.checklist.solved_ids(),
                "memory_size": self.memory.len(),
            }),
        )?;

        if self.memory.is_empty() {
            self.tracer.warn("answering with an empty knowledge memory", json!(null))?;
        }
        let answer = match self.backends.policy.generate_answer(&self.query, &self.memory) {
            Ok(a) => a,
            Err(e) => {
                self.tolerate(e, "answer generation failed")?;
                String::new()
            }
        };
        if answer.trim().is_empty() {
            self.tracer.warn("policy produced an empty answer", json!(null))?;
        }
        self.tracer.emit(Phase::Answer, json!({ "answer": answer }))?;
        Ok((reason, answer))
    }

    fn init_checklist(&mut self) -> Result<(), Stop> {
        if !self.guided() {
            self.tracer.warn(
                "checklist guidance disabled; backends see an empty checklist",
                json!(null),
            )?;
            self.tracer.emit(
                Phase::ChecklistInit,
                json!({ "guided": false, "checklist": self.checklist }),
            )?;
            return Ok(());
        }
        let raw = match self.backends.policy.generate_checklist(&self.query) {
            Ok(raw) => raw,
            Err(e) => {
                self.tolerate(e, "checklist generation failed")?;
                String::new()
            }
        };
        let fallback = match Checklist::parse(&raw) {
            Ok(c) => {
                self.checklist = c;
                false
            }
            Err(_) => {
                self.checklist = Checklist::fallback(&self.query);
                self.tracer.warn(
                    "no sub-goals in checklist output, falling back to the query itself",
                    json!({ "raw": raw }),
                )?;
                true
            }
        };
        self.tracer.emit(
            Phase::ChecklistInit,
            json!({ "guided": true, "fallback": fallback, "checklist": self.checklist }),
        )?;
        Ok(())
    }

    /// Expand `node` with fresh subqueries and evaluate each new child, as
    /// long as budget remains. Each materialized child costs one simulation.
    fn expand_and_evaluate(&mut self, node: NodeId) -> Result<Vec<ChildResult>, Stop> {
        let history = HistoryContext {
            input_query: self.query.clone(),
            last_feedback: self.last_feedback.clone(),
            path_subqueries: self.tree.path_subqueries(node)?,
        };
        let raw = match self.backends.policy.propose_subqueries(
            &history,
            self.visible_checklist(),
            &self.memory,
            self.config.m_q,
        ) {
            Ok(list) => list,
            Err(e) => {
                self.tolerate(e, "subquery proposal failed")?;
                Vec::new()
            }
        };
        let subqueries = dedup_subqueries(&raw, self.config.m_q);
        self.tracer.emit(
            Phase::SubqueryProposed,
            json!({ "node": node, "proposed": raw.len(), "subqueries": subqueries }),
        )?;
        self.tree.mark_expanded(node)?;
        if subqueries.is_empty() {
            self.tracer.warn("expansion failed: no usable subqueries", json!({ "node": node }))?;
            return Ok(Vec::new());
        }

        let mut results = Vec::new();
        for subquery in subqueries {
            if self.simulations_used >= self.config.max_simulations {
                break;
            }
            let child = self.tree.add_child(node, &subquery)?;
            let result = self.evaluate_child(child, &subquery, &history)?;
            let done = result.rewards.feedback.terminate || self.checklist.is_complete();
            results.push(result);
            if done {
                break;
            }
        }
        Ok(results)
    }

    fn evaluate_child(
        &mut self,
        child: NodeId,
        subquery: &str,
        history: &HistoryContext,
    ) -> Result<ChildResult, Stop> {
        let step = self.simulations_used;
        let docs = match self.backends.search.search(subquery, self.config.top_k) {
            Ok(mut docs) => {
                docs.truncate(self.config.top_k);
                docs
            }
            Err(e) => {
                self.tolerate(e, "search failed")?;
                Vec::new()
            }
        };
        self.tracer.emit(
            Phase::Retrieval,
            json!({
                "node": child,
                "subquery": subquery,
                "doc_ids": docs.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(),
            }),
        )?;

        let mut chosen = None;
        if !docs.is_empty() {
            match self.backends.policy.summarize(subquery, &docs) {
                Ok(summary) if !summary.text.trim().is_empty() => {
                    let doc = match docs.iter().find(|d| d.doc_id == summary.doc_id) {
                        Some(d) => d,
                        None => {
                            self.tracer.warn(
                                "summary names a document outside the candidates, using the top result",
                                json!({ "node": child, "doc_id": summary.doc_id }),
                            )?;
                            &docs[0]
                        }
                    };
                    self.tracer.emit(
                        Phase::Summarization,
                        json!({ "node": child, "doc_id": doc.doc_id, "snippet": summary.text }),
                    )?;
                    chosen = Some((doc.clone(), summary.text));
                }
                Ok(_) => {
                    self.tracer.warn("empty summary", json!({ "node": child }))?;
                }
                Err(e) => self.tolerate(e, "summarization failed")?,
            }
        }

        let exploration = match self.backends.reward.exploration_reward(
            subquery,
            self.visible_checklist(),
            history,
        ) {
            Ok(raw) => self.clamped(raw, clamp_exploration, child)?,
            Err(e) => {
                self.tolerate(e, "exploration reward failed, using 0")?;
                0
            }
        };
        let retrieval = match &chosen {
            None => 0,
            Some((_, text)) => match self.backends.reward.retrieval_reward(subquery, text) {
                Ok(raw) => self.clamped(raw, clamp_retrieval, child)?,
                Err(e) => {
                    self.tolerate(e, "retrieval reward failed, using 0")?;
                    0
                }
            },
        };
        let combined =
            combine_reward_with(self.config.reward_combination, exploration as i64, retrieval as i64)
                .expect("clamped rewards are in range");
        self.tracer.emit(
            Phase::Reward,
            json!({ "node": child, "exploration": exploration, "retrieval": retrieval, "combined": combined }),
        )?;

        let mut snippet_id = None;
        if let Some((doc, text)) = &chosen {
            let admission = self.memory.admit(SnippetCandidate {
                text: text.clone(),
                source_doc_id: doc.doc_id.clone(),
                source_locator: doc.locator.clone(),
                subquery: subquery.to_string(),
                node_id: child,
                retrieval_reward: retrieval,
                step,
            });
            match admission {
                Admission::Admitted(id) => {
                    snippet_id = Some(id);
                    self.tracer.emit(
                        Phase::MemoryAdmit,
                        json!({ "node": child, "snippet_id": id, "doc_id": doc.doc_id }),
                    )?;
                }
                Admission::Rejected(reason) => {
                    self.tracer.emit(
                        Phase::MemoryReject,
                        json!({ "node": child, "doc_id": doc.doc_id, "reason": reason }),
                    )?;
                }
            }
        }

        let snippet_text = chosen.as_ref().map(|(_, t)| t.as_str());
        let mut feedback = match self.backends.reward.progress_feedback(
            subquery,
            snippet_text,
            self.visible_checklist(),
            history,
            &self.memory,
        ) {
            Ok(f) => f,
            Err(e) => {
                self.tolerate(e, "progress feedback failed, using empty feedback")?;
                ProgressFeedback::default()
            }
        };
        self.apply_feedback(child, &mut feedback)?;

        self.tree.backpropagate(child, combined)?;
        self.tracer.emit(
            Phase::Backprop,
            json!({ "node": child, "reward": combined, "root_visits": self.tree.root_node().visits }),
        )?;
        self.simulations_used += 1;

        let rewards = RewardBundle {
            exploration,
            retrieval,
            combined,
            feedback,
        };
        self.tree.set_evaluation(
            child,
            EvaluationRecord {
                snippet_id,
                rewards: rewards.clone(),
            },
        )?;
        Ok(ChildResult { node: child, rewards })
    }

    fn clamped(
        &mut self,
        raw: i64,
        clamp: fn(i64) -> (u8, Option<String>),
        node: NodeId,
    ) -> Result<u8, Stop> {
        let (value, warning) = clamp(raw);
        if let Some(w) = warning {
            self.tracer.warn(w, json!({ "node": node, "raw": raw }))?;
        }
        Ok(value)
    }

    /// Fold feedback into the checklist. A termination signal that the
    /// checklist does not back up is dropped.
    fn apply_feedback(&mut self, node: NodeId, feedback: &mut ProgressFeedback) -> Result<(), Stop> {
        if self.guided() {
            let effect = self.checklist.apply_feedback(feedback);
            if effect.has_warnings() {
                self.tracer.warn(
                    "feedback named unknown goals, tried to reopen solved ones or extend a complete checklist",
                    json!({
                        "node": node,
                        "unknown_ids": effect.unknown_ids,
                        "reopen_ignored": effect.reopen_ignored,
                        "appends_ignored": effect.appends_ignored,
                    }),
                )?;
            }
            self.tracer.emit(
                Phase::FeedbackApplied,
                json!({
                    "node": node,
                    "source": "reward",
                    "text": feedback.text,
                    "solved_goal_ids": feedback.solved_goal_ids,
                    "newly_solved": effect.newly_solved,
                    "appended": effect.appended,
                    "terminate": feedback.terminate,
                    "revision": self.checklist.revision,
                }),
            )?;
            if self.config.checklist_rewrite {
                match self
                    .backends
                    .policy
                    .rewrite_checklist(&self.query, &self.checklist, feedback)
                {
                    Ok(extra) if !extra.is_empty() => {
                        let effect = self.checklist.apply_feedback(&ProgressFeedback {
                            new_goals: extra,
                            ..Default::default()
                        });
                        self.tracer.emit(
                            Phase::FeedbackApplied,
                            json!({
                                "node": node,
                                "source": "policy_rewrite",
                                "appended": effect.appended,
                                "revision": self.checklist.revision,
                            }),
                        )?;
                    }
                    Ok(_) => {}
                    Err(e) => self.tolerate(e, "checklist rewrite failed")?,
                }
            }
        }
        if feedback.terminate && !self.checklist.is_complete() {
            self.tracer.warn(
                "termination signal ignored: checklist still has open goals",
                json!({ "node": node, "open": self.checklist.unsolved_ids() }),
            )?;
            feedback.terminate = false;
        }
        self.last_feedback = Some(feedback.clone());
        Ok(())
    }
}

/// Trim, drop blanks and normalized duplicates, keep at most `m_q`.
fn dedup_subqueries(raw: &[String], m_q: usize) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    raw.iter()
        .map(|q| q.trim())
        .filter(|q| !q.is_empty())
        .filter(|q| seen.insert(normalize_key(q)))
        .take(m_q)
        .map(str::to_string)
        .collect()
}
