//! End-to-end searches over scripted scenarios.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use hgmcts_core::backends::scripted::ScriptedScenario;
use hgmcts_core::backends::{BackendError, Document, ScriptedBackend};
use hgmcts_core::evaluation::page_recall;
use hgmcts_core::orchestrator::{
    run_search, Backends, HistoryContext, SearchConfig, SearchError, TerminationReason,
};
use hgmcts_core::scenario_gen::{generate, GeneratorParams};
use hgmcts_core::trace::{replay_verify, JsonlSink, Phase, TraceEvent, Tracer};
use hgmcts_core::{Checklist, KnowledgeMemory, RewardBackend, SearchBackend, SearchOutcome};

fn planted() -> ScriptedScenario {
    generate(&GeneratorParams::default()).scenario
}

fn run(scenario: &ScriptedScenario, config: &SearchConfig) -> SearchOutcome {
    let b = ScriptedBackend::new(scenario.clone()).unwrap();
    run_search(
        &scenario.query,
        config,
        Backends { policy: &b, reward: &b, search: &b },
        Tracer::in_memory(),
    )
    .unwrap()
}

fn phases(events: &[TraceEvent], phase: Phase) -> Vec<&TraceEvent> {
    events.iter().filter(|e| e.phase == phase).collect()
}

#[test]
fn planted_scenario_solves_every_goal() {
    let s = planted();
    let out = run(&s, &SearchConfig::default());
    assert_eq!(out.termination_reason, TerminationReason::AllGoalsSolved);
    assert!(out.simulations_used <= 40);
    assert!(out.checklist.is_complete());
    assert_eq!(out.answer, s.answer_script);
    assert_eq!(page_recall(&out.memory.source_locators(), &s.gold_pages()), Some(1.0));
    assert!(s.gold_doc_ids.is_subset(&out.memory.source_doc_ids()));
}

#[test]
fn trace_shape_of_a_completed_search() {
    let out = run(&planted(), &SearchConfig::default());
    let ev = &out.events;
    assert_eq!(ev[0].phase, Phase::Header);
    assert!(ev.windows(2).all(|w| w[0].seq < w[1].seq));
    assert_eq!(phases(ev, Phase::Terminate).len(), 1);
    assert_eq!(phases(ev, Phase::Answer).len(), 1);
    assert_eq!(ev.last().unwrap().phase, Phase::Answer);
    // one backprop and one reward per simulation, and the root saw them all
    assert_eq!(phases(ev, Phase::Backprop).len() as u32, out.simulations_used);
    assert_eq!(phases(ev, Phase::Reward).len() as u32, out.simulations_used);
    assert_eq!(out.tree.root_node().visits, u64::from(out.simulations_used));
    assert_eq!(out.tree.len() as u32, out.simulations_used + 1);
}

#[test]
fn memory_has_provenance() {
    let out = run(&planted(), &SearchConfig::default());
    assert!(!out.memory.is_empty());
    for (i, snippet) in out.memory.snippets.iter().enumerate() {
        assert_eq!(snippet.id, i);
        assert!(snippet.retrieval_reward >= 1);
        let node = out.tree.node(snippet.node_id).unwrap();
        assert_eq!(node.evaluation.as_ref().unwrap().snippet_id, Some(i));
        assert_eq!(node.subquery, snippet.subquery);
    }
    let admits = phases(&out.events, Phase::MemoryAdmit);
    assert_eq!(admits.len(), out.memory.len());
}

#[test]
fn replays_are_identical() {
    let s = planted();
    let a = run(&s, &SearchConfig::default());
    let b = run(&s, &SearchConfig::default());
    assert!(replay_verify(&a.events, &b.events).equal);
    assert_eq!(a.to_report_json(), b.to_report_json());
}

#[test]
fn trace_file_matches_in_memory_events() {
    let s = planted();
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    let tracer = Tracer::new(Box::new(JsonlSink::create(&path).unwrap()));
    let out = run_search(
        &s.query,
        &SearchConfig::default(),
        Backends { policy: &b, reward: &b, search: &b },
        tracer,
    )
    .unwrap();
    let back = hgmcts_core::trace::read_trace(&path).unwrap();
    assert_eq!(back, out.events);
}

/// Goal 3's gold snippet no longer earns credit, so the checklist can never
/// be completed.
fn without_goal_three(mut s: ScriptedScenario) -> ScriptedScenario {
    for e in &mut s.reward_script {
        e.feedback.solved_goal_ids.remove(&3);
    }
    s
}

#[test]
fn unsolvable_goal_runs_out_the_budget() {
    let out = run(&without_goal_three(planted()), &SearchConfig::default());
    assert_eq!(out.termination_reason, TerminationReason::BudgetExhausted);
    assert_eq!(out.simulations_used, 40);
    assert!(!out.checklist.solved_ids().contains(&3));
    assert_eq!(phases(&out.events, Phase::Backprop).len(), 40);
}

#[test]
fn budget_cuts_an_expansion_short() {
    let config = SearchConfig { max_simulations: 1, ..Default::default() };
    let out = run(&planted(), &config);
    assert_eq!(out.simulations_used, 1);
    assert_eq!(out.tree.root_node().children.len(), 1);
    assert_eq!(out.termination_reason, TerminationReason::BudgetExhausted);
}

#[test]
fn first_expansion_has_m_q_children() {
    let config = SearchConfig { max_simulations: 3, ..Default::default() };
    let out = run(&without_goal_three(planted()), &config);
    assert_eq!(out.tree.root_node().children.len(), 3);
    let config = SearchConfig { max_simulations: 3, m_q: 2, ..Default::default() };
    let out = run(&without_goal_three(planted()), &config);
    assert_eq!(out.tree.root_node().children.len(), 2);
}

fn doc(id: &str, content: &str) -> Document {
    Document {
        doc_id: id.into(),
        title: String::new(),
        locator: format!("corpus/{id}"),
        content: content.into(),
    }
}

/// One subquery per expansion, nothing ever solved.
fn chain_scenario() -> ScriptedScenario {
    ScriptedScenario {
        name: "chain".into(),
        query: "What is the chain?".into(),
        checklist_text: "1. Find the chain".into(),
        corpus: vec![doc("d1", "links of a chain")],
        subquery_script: BTreeMap::from([("default".into(), vec!["chain links".into()])]),
        summary_script: BTreeMap::new(),
        reward_script: Vec::new(),
        answer_script: "unknown".into(),
        gold_doc_ids: ["d1".to_string()].into(),
        gold_answers: Vec::new(),
    }
}

#[test]
fn degenerate_chain_exhausts_the_tree() {
    let config = SearchConfig { max_depth: 3, ..Default::default() };
    let out = run(&chain_scenario(), &config);
    assert_eq!(out.termination_reason, TerminationReason::SearchExhausted);
    assert_eq!(out.simulations_used, 3);
    assert_eq!(out.tree.len(), 4);
}

#[test]
fn empty_search_scores_zero() {
    let mut s = chain_scenario();
    s.subquery_script = BTreeMap::from([("default".into(), vec!["quantum flux".into()])]);
    let config = SearchConfig { max_depth: 1, ..Default::default() };
    let out = run(&s, &config);
    let rewards = phases(&out.events, Phase::Reward);
    assert_eq!(rewards.len(), 1);
    assert_eq!(rewards[0].payload["retrieval"], 0);
    assert_eq!(rewards[0].payload["combined"], 0.0);
    assert!(out.memory.is_empty());
    assert!(phases(&out.events, Phase::Summarization).is_empty());
    // answering from an empty memory is flagged
    assert!(phases(&out.events, Phase::Warning)
        .iter()
        .any(|e| e.payload["message"].as_str().unwrap().contains("empty knowledge memory")));
}

#[test]
fn unparseable_checklist_falls_back_to_the_query() {
    let mut s = chain_scenario();
    s.checklist_text = "I could not think of sub-goals.".into();
    let config = SearchConfig { max_depth: 1, ..Default::default() };
    let out = run(&s, &config);
    assert_eq!(out.checklist.goals.len(), 1);
    assert_eq!(out.checklist.goals[0].description, s.query);
    let init = phases(&out.events, Phase::ChecklistInit);
    assert_eq!(init[0].payload["fallback"], true);
}

/// Search backend that fails once the given number of calls succeeded.
struct FlakySearch {
    inner: ScriptedBackend,
    ok_calls: usize,
    calls: AtomicUsize,
    fatal: bool,
}

impl SearchBackend for FlakySearch {
    fn name(&self) -> String {
        "flaky".into()
    }

    fn search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok_calls {
            return Err(if self.fatal {
                BackendError::Unavailable("connection refused after 3 retries".into())
            } else {
                BackendError::ParseFailed("garbled results".into())
            });
        }
        self.inner.search(subquery, top_k)
    }
}

#[test]
fn unavailable_backend_aborts_with_partial_trace() {
    let s = planted();
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let flaky = FlakySearch { inner: b.clone(), ok_calls: 2, calls: AtomicUsize::new(0), fatal: true };
    let err = run_search(
        &s.query,
        &SearchConfig::default(),
        Backends { policy: &b, reward: &b, search: &flaky },
        Tracer::in_memory(),
    )
    .unwrap_err();
    match &err {
        SearchError::Aborted { cause, simulations_used, .. } => {
            assert!(matches!(cause, BackendError::Unavailable(_)));
            assert_eq!(*simulations_used, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
    let trace = err.partial_trace();
    assert_eq!(trace[0].phase, Phase::Header);
    assert_eq!(phases(trace, Phase::Backprop).len(), 2);
    assert!(phases(trace, Phase::Terminate).is_empty());
}

#[test]
fn recoverable_backend_errors_become_warnings() {
    let s = planted();
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let flaky = FlakySearch { inner: b.clone(), ok_calls: 0, calls: AtomicUsize::new(0), fatal: false };
    let out = run_search(
        &s.query,
        &SearchConfig { max_simulations: 6, ..Default::default() },
        Backends { policy: &b, reward: &b, search: &flaky },
        Tracer::in_memory(),
    )
    .unwrap();
    assert_eq!(out.simulations_used, 6);
    assert!(out.memory.is_empty());
    assert!(phases(&out.events, Phase::Warning).len() >= 6);
}

/// Reward model that always claims the task is done and emits out-of-range
/// scores.
struct Overeager {
    inner: ScriptedBackend,
}

impl RewardBackend for Overeager {
    fn name(&self) -> String {
        "overeager".into()
    }

    fn exploration_reward(&self, _: &str, _: &Checklist, _: &HistoryContext) -> Result<i64, BackendError> {
        Ok(7)
    }

    fn retrieval_reward(&self, _: &str, _: &str) -> Result<i64, BackendError> {
        Ok(-4)
    }

    fn progress_feedback(
        &self,
        subquery: &str,
        snippet: Option<&str>,
        checklist: &Checklist,
        history: &HistoryContext,
        memory: &KnowledgeMemory,
    ) -> Result<hgmcts_core::ProgressFeedback, BackendError> {
        let mut fb = self.inner.progress_feedback(subquery, snippet, checklist, history, memory)?;
        fb.solved_goal_ids.clear();
        fb.solved_goal_ids.insert(99);
        fb.terminate = true;
        Ok(fb)
    }
}

#[test]
fn malformed_rewards_are_clamped_and_false_termination_ignored() {
    let s = planted();
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let reward = Overeager { inner: b.clone() };
    let out = run_search(
        &s.query,
        &SearchConfig { max_simulations: 5, ..Default::default() },
        Backends { policy: &b, reward: &reward, search: &b },
        Tracer::in_memory(),
    )
    .unwrap();
    assert_eq!(out.termination_reason, TerminationReason::BudgetExhausted);
    assert_eq!(out.simulations_used, 5);
    for e in phases(&out.events, Phase::Reward) {
        assert_eq!(e.payload["exploration"], 0);
        assert_eq!(e.payload["retrieval"], 0);
    }
    // unknown goal 99 is reported, never fatal
    let warnings: Vec<String> = phases(&out.events, Phase::Warning)
        .iter()
        .map(|e| e.payload["message"].as_str().unwrap().to_string())
        .collect();
    assert!(warnings.iter().any(|m| m.contains("termination signal ignored")));
    assert!(warnings.iter().any(|m| m.contains("unknown goals")));
}

#[test]
fn unguided_search_never_touches_the_checklist() {
    let s = planted();
    let config = SearchConfig { use_checklist: false, ..Default::default() };
    let out = run(&s, &config);
    assert!(out.checklist.is_empty());
    assert!(phases(&out.events, Phase::FeedbackApplied).is_empty());
    assert_ne!(out.termination_reason, TerminationReason::AllGoalsSolved);
    // the default planted scenario revisits the first three goals when unguided
    let recall = page_recall(&out.memory.source_locators(), &s.gold_pages()).unwrap();
    assert!((recall - 0.6).abs() < 1e-12, "{recall}");
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = planted();
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let backends = Backends { policy: &b, reward: &b, search: &b };
    assert!(matches!(
        run_search("  ", &SearchConfig::default(), backends, Tracer::in_memory()),
        Err(SearchError::InvalidArgument(_))
    ));
    let bad = SearchConfig { max_simulations: 0, ..Default::default() };
    assert!(matches!(
        run_search("q", &bad, backends, Tracer::in_memory()),
        Err(SearchError::InvalidConfig(_))
    ));
}

#[test]
fn appended_goal_is_discovered_and_solved() {
    let g = generate(&GeneratorParams { appended_last_goal: true, ..Default::default() });
    let out = run(&g.scenario, &SearchConfig::default());
    assert_eq!(out.termination_reason, TerminationReason::AllGoalsSolved);
    assert_eq!(out.checklist.goals.len(), 5);
    assert_eq!(out.checklist.goals[4].origin, hgmcts_core::GoalOrigin::Appended);
    assert_eq!(page_recall(&out.memory.source_locators(), &g.scenario.gold_pages()), Some(1.0));
}
