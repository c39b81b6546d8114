//! Recall behaviour of the planted-document suite across budgets and with
//! guidance disabled.

use hgmcts_core::backends::ScriptedBackend;
use hgmcts_core::evaluation::page_recall;
use hgmcts_core::orchestrator::{run_search, Backends, SearchConfig};
use hgmcts_core::scenario_gen::generate_suite;
use hgmcts_core::trace::Tracer;

fn recall(s: &hgmcts_core::backends::scripted::ScriptedScenario, config: &SearchConfig) -> f64 {
    let b = ScriptedBackend::new(s.clone()).unwrap();
    let out = run_search(
        &s.query,
        config,
        Backends { policy: &b, reward: &b, search: &b },
        Tracer::in_memory(),
    )
    .unwrap();
    page_recall(&out.memory.source_locators(), &s.gold_pages()).unwrap()
}

#[test]
fn recall_never_drops_with_more_budget() {
    for g in generate_suite(10, 1) {
        let mut last = 0.0;
        for budget in [5, 10, 20, 40] {
            let r = recall(&g.scenario, &SearchConfig { max_simulations: budget, ..Default::default() });
            assert!(r >= last, "{}: budget {budget} recall {r} < {last}", g.scenario.name);
            last = r;
        }
        assert_eq!(last, 1.0, "{}", g.scenario.name);
    }
}

#[test]
fn guidance_never_hurts_and_usually_helps() {
    let mut strictly_better = 0;
    for g in generate_suite(10, 1) {
        let guided = recall(&g.scenario, &SearchConfig::default());
        let unguided = recall(&g.scenario, &SearchConfig { use_checklist: false, ..Default::default() });
        assert!(unguided <= guided, "{}", g.scenario.name);
        if unguided < guided {
            strictly_better += 1;
        }
    }
    assert!(strictly_better >= 5, "only {strictly_better} of 10");
}
