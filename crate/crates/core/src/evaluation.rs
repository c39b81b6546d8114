//! Answer metrics (EM, cover EM, token F1, ROUGE-1/2/L), gold-page recall,
//! benchmark dataset loading and aggregation.
//!
//! EM, cover EM and F1 use SQuAD-style answer normalization. ROUGE works on
//! casefolded, punctuation-stripped tokens and reports the F-measure.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

fn strip_punctuation(text: &str) -> String {
    text.chars().filter(|c| !c.is_ascii_punctuation()).collect()
}

/// Lowercase, drop punctuation, drop the articles a/an/the, collapse
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    strip_punctuation(&text.to_lowercase())
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer_tokens(text: &str) -> Vec<String> {
    normalize_answer(text).split_whitespace().map(str::to_string).collect()
}

fn rouge_tokens(text: &str) -> Vec<String> {
    strip_punctuation(&text.to_lowercase())
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

pub fn exact_match(pred: &str, gold_answers: &[String]) -> f64 {
    let p = normalize_answer(pred);
    f64::from(u8::from(gold_answers.iter().any(|g| normalize_answer(g) == p)))
}

/// 1 when some normalized gold answer appears as a contiguous token run in
/// the normalized prediction.
pub fn cover_exact_match(pred: &str, gold_answers: &[String]) -> f64 {
    let p = answer_tokens(pred);
    let covered = gold_answers.iter().any(|g| {
        let g = answer_tokens(g);
        if g.is_empty() {
            return p.is_empty();
        }
        p.windows(g.len()).any(|w| w == g.as_slice())
    });
    f64::from(u8::from(covered))
}

fn f_measure(overlap: usize, pred_len: usize, ref_len: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred_len as f64;
    let recall = overlap as f64 / ref_len as f64;
    2.0 * precision * recall / (precision + recall)
}

fn multiset_overlap<T: std::hash::Hash + Eq>(a: &[T], b: &[T]) -> usize {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for t in b {
        *counts.entry(t).or_default() += 1;
    }
    a.iter()
        .filter(|t| match counts.get_mut(t) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

fn token_f1_single(pred: &str, gold: &str) -> f64 {
    let p = answer_tokens(pred);
    let g = answer_tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => f_measure(multiset_overlap(&p, &g), p.len(), g.len()),
    }
}

/// Best token-level F1 over the gold answers.
pub fn token_f1(pred: &str, gold_answers: &[String]) -> f64 {
    gold_answers
        .iter()
        .map(|g| token_f1_single(pred, g))
        .fold(0.0, f64::max)
}

fn ngrams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).collect()
}

/// ROUGE-N F-measure with clipped n-gram counts. Texts too short to contain
/// any n-gram score 1 when their token sequences are identical and 0
/// otherwise.
pub fn rouge_n(pred: &str, reference: &str, n: usize) -> f64 {
    let p = rouge_tokens(pred);
    let r = rouge_tokens(reference);
    if p.is_empty() || r.is_empty() {
        return 0.0;
    }
    let pg = ngrams(&p, n);
    let rg = ngrams(&r, n);
    if pg.is_empty() && rg.is_empty() {
        return f64::from(u8::from(p == r));
    }
    if pg.is_empty() || rg.is_empty() {
        return 0.0;
    }
    f_measure(multiset_overlap(&pg, &rg), pg.len(), rg.len())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure from the longest common token subsequence.
pub fn rouge_l(pred: &str, reference: &str) -> f64 {
    let p = rouge_tokens(pred);
    let r = rouge_tokens(reference);
    if p.is_empty() || r.is_empty() {
        return 0.0;
    }
    f_measure(lcs_len(&p, &r), p.len(), r.len())
}

/// Canonical form of a page locator: scheme, fragment and trailing slash
/// removed, host lowercased. Non-URL locators only lose fragment and
/// trailing slash.
pub fn normalize_locator(locator: &str) -> String {
    let locator = locator.trim();
    let locator = locator.split('#').next().unwrap_or_default();
    let normalized = match locator.split_once("://") {
        Some((_, rest)) => match rest.split_once('/') {
            Some((host, path)) => format!("{}/{}", host.to_lowercase(), path),
            None => rest.to_lowercase(),
        },
        None => locator.to_string(),
    };
    normalized.trim_end_matches('/').to_string()
}

/// Fraction of gold pages found among the retrieved ones; `None` when there
/// are no gold pages.
pub fn page_recall<'a, R, G>(retrieved: R, gold_pages: G) -> Option<f64>
where
    R: IntoIterator<Item = &'a String>,
    G: IntoIterator<Item = &'a String>,
{
    let gold: BTreeSet<String> = gold_pages.into_iter().map(|g| normalize_locator(g)).collect();
    if gold.is_empty() {
        return None;
    }
    let retrieved: BTreeSet<String> = retrieved.into_iter().map(|r| normalize_locator(r)).collect();
    Some(gold.intersection(&retrieved).count() as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub answers: Vec<String>,
    #[serde(default)]
    pub gold_pages: Vec<String>,
    /// Scripted scenario driving this item, relative to the dataset file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Read a JSONL dataset; blank lines are skipped.
pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkItem>, DatasetError> {
    let raw = std::fs::read_to_string(path)?;
    parse_dataset(&raw)
}

pub fn parse_dataset(raw: &str) -> Result<Vec<BenchmarkItem>, DatasetError> {
    let mut items = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let item: BenchmarkItem = serde_json::from_str(line).map_err(|e| DatasetError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        if item.question.trim().is_empty() {
            return Err(DatasetError::Line {
                line: line_no,
                message: "question is empty".into(),
            });
        }
        items.push(item);
    }
    Ok(items)
}

/// Seeded sample of `n` items, kept in dataset order. Returns everything
/// when `n` is at least the dataset size.
pub fn sample_items(items: &[BenchmarkItem], n: usize, seed: u64) -> Vec<BenchmarkItem> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub id: String,
    pub em: Option<f64>,
    pub cem: Option<f64>,
    pub f1: Option<f64>,
    pub rouge_1: Option<f64>,
    pub rouge_2: Option<f64>,
    pub rouge_l: Option<f64>,
    pub page_recall: Option<f64>,
}

impl ItemMetrics {
    /// Score one prediction. Answer metrics are absent without gold answers;
    /// recall is absent without gold pages. ROUGE takes the best gold.
    pub fn score(
        id: &str,
        prediction: &str,
        gold_answers: &[String],
        retrieved_pages: &BTreeSet<String>,
        gold_pages: &[String],
    ) -> Self {
        let has_gold = !gold_answers.is_empty();
        let best = |f: &dyn Fn(&str) -> f64| gold_answers.iter().map(|g| f(g)).fold(0.0, f64::max);
        Self {
            id: id.to_string(),
            em: has_gold.then(|| exact_match(prediction, gold_answers)),
            cem: has_gold.then(|| cover_exact_match(prediction, gold_answers)),
            f1: has_gold.then(|| token_f1(prediction, gold_answers)),
            rouge_1: has_gold.then(|| best(&|g| rouge_n(prediction, g, 1))),
            rouge_2: has_gold.then(|| best(&|g| rouge_n(prediction, g, 2))),
            rouge_l: has_gold.then(|| best(&|g| rouge_l(prediction, g))),
            page_recall: page_recall(retrieved_pages, gold_pages),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub em: Option<f64>,
    pub cem: Option<f64>,
    pub f1: Option<f64>,
    pub rouge_1: Option<f64>,
    pub rouge_2: Option<f64>,
    pub rouge_l: Option<f64>,
    pub page_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub items: Vec<ItemMetrics>,
    pub means: MetricMeans,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Corpus-level means over the metrics each item actually has.
pub fn aggregate(items: Vec<ItemMetrics>) -> MetricReport {
    let means = MetricMeans {
        em: mean_of(items.iter().map(|i| i.em)),
        cem: mean_of(items.iter().map(|i| i.cem)),
        f1: mean_of(items.iter().map(|i| i.f1)),
        rouge_1: mean_of(items.iter().map(|i| i.rouge_1)),
        rouge_2: mean_of(items.iter().map(|i| i.rouge_2)),
        rouge_l: mean_of(items.iter().map(|i| i.rouge_l)),
        page_recall: mean_of(items.iter().map(|i| i.page_recall)),
    };
    MetricReport { items, means }
}

impl MetricReport {
    /// Aligned plain-text table, one row per item plus a mean row.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let width = self
            .items
            .iter()
            .map(|i| i.id.chars().count())
            .chain(std::iter::once(4))
            .max()
            .unwrap_or(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
            "item", "EM", "CEM", "F1", "R-1", "R-2", "R-L", "recall"
        );
        let mut row = |id: &str, m: [Option<f64>; 7]| {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
                id,
                cell(m[0]),
                cell(m[1]),
                cell(m[2]),
                cell(m[3]),
                cell(m[4]),
                cell(m[5]),
                cell(m[6])
            );
        };
        for i in &self.items {
            row(&i.id, [i.em, i.cem, i.f1, i.rouge_1, i.rouge_2, i.rouge_l, i.page_recall]);
        }
        let m = &self.means;
        row("mean", [m.em, m.cem, m.f1, m.rouge_1, m.rouge_2, m.rouge_l, m.page_recall]);
        out
    }
}
