//! Answer metrics against hand-counted cases, plus fuzzed properties.

use std::collections::BTreeSet;

use hgmcts_core::evaluation::{
    aggregate, cover_exact_match, exact_match, normalize_answer, page_recall, rouge_l, rouge_n,
    token_f1, ItemMetrics,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn golds(g: &[&str]) -> Vec<String> {
    g.iter().map(|s| s.to_string()).collect()
}

fn assert_close(actual: f64, expected: f64, what: &str) {
    assert!((actual - expected).abs() <= 1e-9, "{what}: got {actual}, expected {expected}");
}

#[test]
fn normalization_examples() {
    assert_eq!(normalize_answer("The Cat!"), "cat");
    assert_eq!(normalize_answer(""), "");
    assert_eq!(normalize_answer("an  apple"), "apple");
}

#[test]
fn hand_counted_cases() {
    // pred {cat, sat} after dropping "the"; gold {cat, sat}
    assert_close(token_f1("the cat sat", &golds(&["cat sat"])), 1.0, "f1 article");
    // {cat, sat} vs {cat, ran}: P = R = 1/2
    assert_close(token_f1("cat sat", &golds(&["cat ran"])), 0.5, "f1 half");
    // x x y vs x y y: clipped overlap 2, P = R = 2/3
    assert_close(token_f1("x x y", &golds(&["x y y"])), 2.0 / 3.0, "f1 clipped");
    // best gold wins: vs "york" P=1/3 R=1 -> 1/2; vs "new york" P=2/3 R=1 -> 4/5
    assert_close(token_f1("new york city", &golds(&["York", "New York"])), 0.8, "f1 max");

    assert_close(exact_match("Paris", &golds(&["paris"])), 1.0, "em case");
    assert_close(exact_match("in Paris", &golds(&["Paris"])), 0.0, "em extra token");
    assert_close(exact_match("The Eiffel Tower", &golds(&["Eiffel Tower"])), 1.0, "em article");
    assert_close(cover_exact_match("the answer is paris", &golds(&["Paris"])), 1.0, "cem contained");
    assert_close(cover_exact_match("parisian", &golds(&["Paris"])), 0.0, "cem boundary");

    // {a,b,c} vs {a,c,d}: overlap 2 of 3 each side
    assert_close(rouge_n("a b c", "a c d", 1), 2.0 / 3.0, "rouge1");
    assert_close(rouge_l("a b c", "a c d"), 2.0 / 3.0, "rougeL");
    // bigrams {ab, bc} vs {ac, cd}: none shared
    assert_close(rouge_n("a b c", "a c d", 2), 0.0, "rouge2 disjoint");

    let p = "the cat sat on the mat";
    let r = "the cat sat on a mat";
    // unigram overlap: the(1) cat sat on mat = 5 of 6 each side
    assert_close(rouge_n(p, r, 1), 5.0 / 6.0, "rouge1 clipped");
    // bigram overlap: the-cat cat-sat sat-on = 3 of 5 each side
    assert_close(rouge_n(p, r, 2), 0.6, "rouge2");
    // LCS "the cat sat on mat" = 5
    assert_close(rouge_l(p, r), 5.0 / 6.0, "rougeL");
    // LCS of (a b c d, b d a c) has length 2
    assert_close(rouge_l("a b c d", "b d a c"), 0.5, "rougeL crossing");

    for f in [rouge_n("", "x", 1), rouge_n("x", "", 2), rouge_l("", "x")] {
        assert_close(f, 0.0, "empty side");
    }

    let gold: Vec<String> = (1..=5).map(|i| format!("https://Wiki.Example.org/P{i}")).collect();
    let retrieved: Vec<String> = vec![
        "wiki.example.org/P1/".into(),
        "HTTP://WIKI.EXAMPLE.ORG/P2#history".into(),
        "https://wiki.example.org/P3".into(),
        "https://wiki.example.org/p4".into(),
        "https://other.example.org/P5".into(),
    ];
    assert_close(page_recall(&retrieved, &gold).unwrap(), 0.6, "recall 3 of 5");
    assert_eq!(page_recall(&retrieved, &Vec::new()), None);

    let report = aggregate(vec![
        ItemMetrics::score("a", "x", &golds(&["x"]), &BTreeSet::new(), &[]),
        ItemMetrics::score("b", "y", &golds(&["x"]), &BTreeSet::new(), &[]),
    ]);
    assert_close(report.means.em.unwrap(), 0.5, "mean em");
    assert_eq!(report.means.page_recall, None);
}

const WORDS: &[&str] = &[
    "the", "a", "an", "paris", "tower", "eiffel", "new", "york", "city", "river", "1889", "blue",
];

fn phrase() -> impl Strategy<Value = String> {
    vec(prop::sample::select(WORDS), 1..6).prop_map(|w| w.join(" "))
}

/// Surface variant of a phrase that normalizes the same way.
fn perturb(text: &str, upper: bool, punct: bool, article: bool) -> String {
    let mut s = if upper { text.to_uppercase() } else { text.to_string() };
    if punct {
        s = s.replace(' ', ", ") + "!";
    }
    if article {
        s = format!("The  {s}");
    }
    s
}

fn rouge_surface(text: &str) -> String {
    text.to_lowercase().chars().filter(|c| !c.is_ascii_punctuation()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn exact_match_implies_cover_and_full_f1(
        gold in phrase(), other in phrase(), same in any::<bool>(),
        upper in any::<bool>(), punct in any::<bool>(), article in any::<bool>(),
    ) {
        let base = if same { gold.clone() } else { other };
        let pred = perturb(&base, upper, punct, article);
        let g = vec![gold];
        if exact_match(&pred, &g) == 1.0 {
            prop_assert_eq!(cover_exact_match(&pred, &g), 1.0);
            prop_assert_eq!(token_f1(&pred, &g), 1.0);
        }
    }

    #[test]
    fn metrics_stay_in_unit_range(p in phrase(), g in phrase()) {
        let gs = vec![g.clone()];
        for v in [
            exact_match(&p, &gs), cover_exact_match(&p, &gs), token_f1(&p, &gs),
            rouge_n(&p, &g, 1), rouge_n(&p, &g, 2), rouge_l(&p, &g),
        ] {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn identity_scores_one(x in phrase()) {
        let xs = vec![x.clone()];
        prop_assert_eq!(exact_match(&x, &xs), 1.0);
        prop_assert_eq!(cover_exact_match(&x, &xs), 1.0);
        prop_assert_eq!(token_f1(&x, &xs), 1.0);
        prop_assert!((rouge_n(&x, &x, 1) - 1.0).abs() < 1e-12);
        prop_assert!((rouge_n(&x, &x, 2) - 1.0).abs() < 1e-12);
        prop_assert!((rouge_l(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(p in phrase(), g in phrase(), upper in any::<bool>(), punct in any::<bool>()) {
        let raw = perturb(&p, upper, punct, false);
        let n = normalize_answer(&raw);
        prop_assert_eq!(normalize_answer(&n), n.clone());
        let gs = vec![g.clone()];
        prop_assert_eq!(token_f1(&n, &gs), token_f1(&raw, &gs));
        let r = rouge_surface(&raw);
        prop_assert_eq!(rouge_n(&r, &g, 1), rouge_n(&raw, &g, 1));
        prop_assert_eq!(rouge_n(&r, &g, 2), rouge_n(&raw, &g, 2));
        prop_assert_eq!(rouge_l(&r, &g), rouge_l(&raw, &g));
    }

    #[test]
    fn recall_grows_with_retrieved_set(
        gold in vec(0u8..20, 1..8),
        order in Just((0u8..20).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let loc = |i: &u8| format!("https://wiki.example.org/p{i}");
        let gold: Vec<String> = gold.iter().map(loc).collect();
        let mut retrieved: Vec<String> = Vec::new();
        let mut last = page_recall(&retrieved, &gold).unwrap();
        prop_assert_eq!(last, 0.0);
        for i in &order {
            retrieved.push(loc(i));
            let now = page_recall(&retrieved, &gold).unwrap();
            prop_assert!(now >= last);
            last = now;
        }
        prop_assert_eq!(last, 1.0);
    }
}
