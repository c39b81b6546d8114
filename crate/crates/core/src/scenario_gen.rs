//! Generator for planted-document scenarios.
//!
//! Each scenario asks for one attribute of several invented entities. Every
//! sub-goal has exactly one gold document that ranks first for the goal's
//! subquery; the rest of the corpus is near-miss documents (same entity,
//! wrong attribute) and unrelated noise documents reachable only through
//! off-goal noise subqueries.
//!
//! Guided subquery scripts are keyed by the set of open goals and target the
//! lowest-numbered open goals, optionally diluted with noise subqueries.
//! Unguided scripts (used when the checklist is disabled) are keyed by depth
//! and may keep revisiting the first goals.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backends::scripted::{RewardEntry, ScriptedScenario};
use crate::backends::{Document, LocalCorpus, ProgressFeedback};

const ATTRIBUTES: &[&str] = &[
    "founder", "birthplace", "capital", "architect", "director", "composer", "population",
    "mascot", "motto", "anthem", "currency", "patron",
];
const SYLLABLES: &[&str] = &[
    "ka", "ro", "vi", "zen", "mu", "tal", "qui", "dor", "bex", "ly", "sha", "pol", "ner", "fi",
    "gru", "wen", "ox", "tam", "bri", "sol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub name: String,
    pub seed: u64,
    pub goals: usize,
    pub corpus_size: usize,
    pub m_q: usize,
    pub top_k: usize,
    /// Noise subqueries placed ahead of the goal subqueries in every guided
    /// expansion (at most `m_q - 1`).
    pub noise: usize,
    /// Unguided scripts only ever revisit the first three goals.
    pub unguided_revisits: bool,
    /// The last goal is missing from the initial checklist and is appended
    /// by feedback once the goal before it is solved.
    pub appended_last_goal: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            name: "planted".into(),
            seed: 7,
            goals: 5,
            corpus_size: 25,
            m_q: 3,
            top_k: 3,
            noise: 1,
            unguided_revisits: true,
            appended_last_goal: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub scenario: ScriptedScenario,
    /// Goal id to the doc_id of its gold document.
    pub goal_docs: BTreeMap<u32, String>,
    pub goal_subqueries: BTreeMap<u32, String>,
}

struct Namer {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
}

impl Namer {
    fn word(&mut self) -> String {
        loop {
            let n = self.rng.random_range(2..=3);
            let w: String = (0..n)
                .map(|_| *SYLLABLES.choose(&mut self.rng).expect("non-empty"))
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

pub fn generate(params: &GeneratorParams) -> GeneratedScenario {
    assert!(params.goals >= 1 && params.goals <= ATTRIBUTES.len());
    assert!(params.noise < params.m_q);
    let noise_docs = params
        .corpus_size
        .checked_sub(2 * params.goals)
        .filter(|&n| n >= params.m_q)
        .expect("corpus too small for the requested goals");

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut namer = Namer {
        rng: ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed),
        used: BTreeSet::new(),
    };
    let mut attributes: Vec<&str> = ATTRIBUTES.to_vec();
    attributes.shuffle(&mut rng);

    struct Goal {
        entity: String,
        attribute: String,
        value: String,
    }
    let goals: Vec<Goal> = (0..params.goals)
        .map(|i| Goal {
            entity: capitalize(&namer.word()),
            attribute: attributes[i].to_string(),
            value: capitalize(&namer.word()),
        })
        .collect();

    // (document, summary) in generation order; ids assigned after shuffling
    let mut docs: Vec<(String, Document, String)> = Vec::new();
    for (i, g) in goals.iter().enumerate() {
        docs.push((
            format!("gold-{}", i + 1),
            Document {
                doc_id: String::new(),
                title: g.entity.clone(),
                locator: format!("https://wiki.example.org/{}", g.entity),
                content: format!(
                    "{e} {a} record: {e} {a} is {v}.",
                    e = g.entity,
                    a = g.attribute,
                    v = g.value
                ),
            },
            format!("The {} of {} is {}.", g.attribute, g.entity, g.value),
        ));
        let (f1, f2) = (namer.word(), namer.word());
        docs.push((
            format!("near-{}", i + 1),
            Document {
                doc_id: String::new(),
                title: format!("{} trivia", g.entity),
                locator: format!("https://wiki.example.org/{}_trivia", g.entity),
                content: format!("{} trivia mentions {f1} and {f2}.", g.entity),
            },
            format!("{} is loosely associated with {f1}.", g.entity),
        ));
    }
    let mut noise_subqueries = Vec::new();
    for j in 0..noise_docs {
        let (a, b, filler) = (namer.word(), namer.word(), namer.word());
        docs.push((
            format!("noise-{j}"),
            Document {
                doc_id: String::new(),
                title: format!("{} {}", capitalize(&a), capitalize(&b)),
                locator: format!("https://wiki.example.org/{}_{}", capitalize(&a), capitalize(&b)),
                content: format!("{a} {b} history notes about {filler}."),
            },
            format!("{} {} has a history involving {filler}.", capitalize(&a), capitalize(&b)),
        ));
        noise_subqueries.push(format!("{a} {b} history"));
    }

    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut rng);
    let mut role_to_id = BTreeMap::new();
    for (slot, &i) in order.iter().enumerate() {
        let id = format!("doc-{slot:02}");
        docs[i].1.doc_id = id.clone();
        role_to_id.insert(docs[i].0.clone(), id);
    }
    let mut corpus: Vec<Document> = docs.iter().map(|d| d.1.clone()).collect();
    corpus.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let summary_script: BTreeMap<String, String> =
        docs.iter().map(|d| (d.1.doc_id.clone(), d.2.clone())).collect();

    let goal_ids: Vec<u32> = (1..=params.goals as u32).collect();
    let description = |i: usize| format!("Find the {} of {}", goals[i].attribute, goals[i].entity);
    let goal_subqueries: BTreeMap<u32, String> = goal_ids
        .iter()
        .map(|&id| {
            let g = &goals[id as usize - 1];
            (id, format!("{} of {}", g.attribute, g.entity))
        })
        .collect();
    let goal_docs: BTreeMap<u32, String> = goal_ids
        .iter()
        .map(|&id| (id, role_to_id[&format!("gold-{id}")].clone()))
        .collect();

    let initial_goals = if params.appended_last_goal && params.goals > 1 {
        params.goals - 1
    } else {
        params.goals
    };
    let checklist_text = std::iter::once("Sub-goals:".to_string())
        .chain((0..initial_goals).map(|i| format!("{}. {}", i + 1, description(i))))
        .collect::<Vec<_>>()
        .join("\n");

    // guided scripts: one entry per non-empty set of open goals
    let mut subquery_script = BTreeMap::new();
    for mask in 1u32..(1 << params.goals) {
        let open: Vec<u32> = goal_ids.iter().copied().filter(|id| mask & (1 << (id - 1)) != 0).collect();
        let key = format!(
            "todo:{}",
            open.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        );
        let mut noise_iter = (0..noise_subqueries.len())
            .cycle()
            .skip(mask as usize % noise_subqueries.len())
            .map(|j| noise_subqueries[j].clone());
        let mut list: Vec<String> = noise_iter.by_ref().take(params.noise).collect();
        let room = params.m_q - params.noise;
        list.extend(open.iter().take(room).map(|id| goal_subqueries[id].clone()));
        while list.len() < params.m_q {
            list.push(noise_iter.next().expect("cycle"));
        }
        subquery_script.insert(key, list);
    }
    let first = |ids: &[u32]| -> Vec<String> {
        ids.iter()
            .filter_map(|id| goal_subqueries.get(id).cloned())
            .take(params.m_q)
            .collect()
    };
    if params.unguided_revisits {
        subquery_script.insert("default".into(), first(&[1, 2, 3]));
    } else {
        let mut rest: Vec<u32> = goal_ids.iter().copied().skip(3).collect();
        rest.push(1);
        subquery_script.insert("depth:0".into(), first(&[1, 2, 3]));
        subquery_script.insert("depth:1".into(), first(&rest));
        subquery_script.insert("default".into(), first(&[1, 2, 3]));
    }

    // reward verdicts for every (subquery, snippet) pair the scripts can produce
    let lookup = LocalCorpus::new(corpus.clone()).expect("generated ids are unique");
    let role_of: BTreeMap<String, String> =
        role_to_id.iter().map(|(role, id)| (id.clone(), role.clone())).collect();
    let all_subqueries: BTreeSet<String> = subquery_script.values().flatten().cloned().collect();
    let mut reward_script = Vec::new();
    for sq in &all_subqueries {
        let hits = lookup.rank(sq, params.top_k);
        let top = hits.first().expect("every scripted subquery retrieves something");
        let snippet = summary_script[&top.doc_id].clone();
        let role = &role_of[&top.doc_id];
        let goal = goal_docs.iter().find(|(_, d)| **d == top.doc_id).map(|(g, _)| *g);
        let entry = match goal {
            Some(g) if goal_subqueries[&g] == *sq => {
                let mut new_goals = Vec::new();
                if params.appended_last_goal && g as usize == params.goals - 1 {
                    new_goals.push(description(params.goals - 1));
                }
                RewardEntry {
                    subquery: sq.clone(),
                    snippet,
                    exploration: 1,
                    retrieval: 2,
                    feedback: ProgressFeedback {
                        text: format!("Goal {g} is solved: {}.", description(g as usize - 1)),
                        solved_goal_ids: [g].into(),
                        new_goals,
                        ..Default::default()
                    },
                }
            }
            _ => {
                let partial = role.starts_with("noise") && role.ends_with(['1', '3', '5', '7', '9']);
                RewardEntry {
                    subquery: sq.clone(),
                    snippet,
                    exploration: 0,
                    retrieval: i64::from(partial),
                    feedback: ProgressFeedback {
                        text: "No progress on the open goals.".into(),
                        ..Default::default()
                    },
                }
            }
        };
        reward_script.push(entry);
    }

    let answer = goals
        .iter()
        .map(|g| g.value.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let query = format!(
        "What are {}?",
        goals
            .iter()
            .map(|g| format!("the {} of {}", g.attribute, g.entity))
            .collect::<Vec<_>>()
            .join(", ")
    );

    GeneratedScenario {
        scenario: ScriptedScenario {
            name: params.name.clone(),
            query,
            checklist_text,
            corpus,
            subquery_script,
            summary_script,
            reward_script,
            answer_script: answer.clone(),
            gold_doc_ids: goal_docs.values().cloned().collect(),
            gold_answers: vec![answer],
        },
        goal_docs,
        goal_subqueries,
    }
}

/// Parameters for scenario `index` of the standard 10-scenario suite. Noise
/// levels cycle through 0..m_q, seven in ten scenarios have revisiting
/// unguided scripts, and every fourth scenario grows its checklist mid-search.
pub fn suite_params(index: usize, seed: u64) -> GeneratorParams {
    GeneratorParams {
        name: format!("planted-{index:02}"),
        seed: seed.wrapping_mul(1000).wrapping_add(index as u64),
        noise: index % 3,
        unguided_revisits: !matches!(index % 10, 2 | 5 | 8),
        appended_last_goal: index % 4 == 3,
        ..GeneratorParams::default()
    }
}

pub fn generate_suite(count: usize, seed: u64) -> Vec<GeneratedScenario> {
    (0..count).map(|i| generate(&suite_params(i, seed))).collect()
}
