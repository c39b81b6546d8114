//! `hgmcts bench`: run a dataset with a bounded worker pool and score it.
//!
//! Workers only compute; the calling thread is the single collector and
//! writes every file, so output never interleaves and per-item files do not
//! depend on the pool size.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use anyhow::Context;
use clap::Args;
use hgmcts_core::backends::ScriptedScenario;
use hgmcts_core::evaluation::{aggregate, load_dataset, sample_items, BenchmarkItem, ItemMetrics, MetricReport};
use hgmcts_core::trace::{JsonlSink, TraceSink, Tracer};
use hgmcts_core::{run_search, BackendError, SearchConfig, SearchError, TerminationReason};
use serde::Serialize;

use crate::config::{SearchOverrides, Settings};
use crate::exit::{ItemsAborted, Usage, OK};
use crate::stack::{BackendKind, Stack};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSONL dataset, one item per line.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run a seeded random subset of this many items.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seed for --sample.
    #[arg(long = "seed", default_value_t = 0)]
    pub sample_seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Searches running at once.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long, value_enum, default_value_t = BackendKind::Scripted)]
    pub backend: BackendKind,
    /// Directory of JSON documents to search instead of the web (remote only).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: SearchOverrides,
}

/// What gets written for one item.
#[derive(Debug, Clone, Serialize)]
pub struct ItemOutcome {
    pub id: String,
    pub question: String,
    pub answer: Option<String>,
    pub termination_reason: Option<TerminationReason>,
    pub simulations_used: u32,
    pub retrieved_pages: BTreeSet<String>,
    pub metrics: ItemMetrics,
    pub error: Option<String>,
}

struct Finished {
    outcome: ItemOutcome,
    report: Option<String>,
    trace: Vec<hgmcts_core::trace::TraceEvent>,
    unavailable: bool,
}

/// File-name-safe form of an item id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn run_item(item: &BenchmarkItem, stack: &Stack, config: &SearchConfig) -> Finished {
    let result = run_search(&item.question, config, stack.backends(), Tracer::in_memory());
    match result {
        Ok(outcome) => {
            let retrieved = outcome.memory.source_locators();
            let metrics = ItemMetrics::score(&item.id, &outcome.answer, &item.answers, &retrieved, &item.gold_pages);
            Finished {
                report: Some(outcome.to_report_json()),
                trace: outcome.events.clone(),
                outcome: ItemOutcome {
                    id: item.id.clone(),
                    question: item.question.clone(),
                    answer: Some(outcome.answer),
                    termination_reason: Some(outcome.termination_reason),
                    simulations_used: outcome.simulations_used,
                    retrieved_pages: retrieved,
                    metrics,
                    error: None,
                },
                unavailable: false,
            }
        }
        Err(e) => {
            let unavailable = matches!(&e, SearchError::Aborted { cause: BackendError::Unavailable(_), .. });
            let simulations_used = match &e {
                SearchError::Aborted { simulations_used, .. } => *simulations_used,
                _ => 0,
            };
            Finished {
                report: None,
                trace: e.partial_trace().to_vec(),
                outcome: ItemOutcome {
                    id: item.id.clone(),
                    question: item.question.clone(),
                    answer: None,
                    termination_reason: None,
                    simulations_used,
                    retrieved_pages: BTreeSet::new(),
                    metrics: ItemMetrics::score(&item.id, "", &item.answers, &BTreeSet::new(), &item.gold_pages),
                    error: Some(e.to_string()),
                },
                unavailable,
            }
        }
    }
}

fn write_item(dir: &Path, done: &Finished) -> anyhow::Result<()> {
    let stem = file_stem(&done.outcome.id);
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&done.outcome)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    if let Some(report) = &done.report {
        std::fs::write(dir.join(format!("{stem}.report.json")), report)?;
    }
    let mut sink = JsonlSink::create(&dir.join(format!("{stem}.trace.jsonl")))?;
    for event in &done.trace {
        sink.write(event)?;
    }
    sink.flush()?;
    Ok(())
}

/// Run `items` with at most `parallel` searches in flight, handing each
/// result to `collect` on the calling thread as it finishes.
fn run_pool(
    items: &[BenchmarkItem],
    stacks: &[Stack],
    config: &SearchConfig,
    parallel: usize,
    mut collect: impl FnMut(usize, Finished) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Finished)>();
    std::thread::scope(|s| {
        for _ in 0..parallel.min(items.len()) {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let stack = &stacks[i.min(stacks.len() - 1)];
                if tx.send((i, run_item(&items[i], stack, config))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // dropping rx on error makes the workers stop at their next send
        rx.into_iter().try_for_each(|(i, done)| collect(i, done))
    })
}

fn scripted_stacks(items: &[BenchmarkItem], dataset: &Path) -> anyhow::Result<Vec<Stack>> {
    let base = dataset.parent().unwrap_or(Path::new(""));
    let mut cache: BTreeMap<PathBuf, Stack> = BTreeMap::new();
    items
        .iter()
        .map(|item| {
            let rel = item.scenario.as_ref().ok_or_else(|| {
                Usage(format!("item {} has no scenario; the scripted backend needs one", item.id))
            })?;
            let path = base.join(rel);
            if let Some(stack) = cache.get(&path) {
                return Ok(stack.clone());
            }
            let stack = Stack::scripted(ScriptedScenario::from_path(&path)?)?;
            cache.insert(path, stack.clone());
            Ok(stack)
        })
        .collect()
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<u8> {
    if args.parallel == 0 {
        return Err(Usage("--parallel must be at least 1".into()).into());
    }
    let settings = Settings::resolve(args.config.as_deref(), &args.overrides)?;
    let all = load_dataset(&args.dataset).with_context(|| format!("dataset {}", args.dataset.display()))?;
    let items = match args.sample {
        Some(n) => sample_items(&all, n, args.sample_seed),
        None => all,
    };
    let mut stems = BTreeSet::new();
    if let Some(dup) = items.iter().find(|i| !stems.insert(file_stem(&i.id))) {
        return Err(Usage(format!("item id {:?} is not unique", dup.id)).into());
    }
    // every backend is built up front so config errors surface before any search
    let stacks = match args.backend {
        BackendKind::Scripted => scripted_stacks(&items, &args.dataset)?,
        BackendKind::Remote => vec![Stack::remote(&settings, args.corpus.as_deref())?],
    };

    let item_dir = args.out_dir.join("items");
    std::fs::create_dir_all(&item_dir).with_context(|| format!("cannot create {}", item_dir.display()))?;
    let mut outcomes: Vec<Option<ItemOutcome>> = vec![None; items.len()];
    let mut aborted = 0;
    let mut failed = 0;
    run_pool(&items, &stacks, &settings.search, args.parallel, |i, done| {
        write_item(&item_dir, &done)?;
        if done.outcome.error.is_some() {
            failed += 1;
            aborted += usize::from(done.unavailable);
            eprintln!("item {}: {}", done.outcome.id, done.outcome.error.as_deref().unwrap_or(""));
        }
        outcomes[i] = Some(done.outcome);
        Ok(())
    })?;

    let outcomes: Vec<ItemOutcome> = outcomes.into_iter().flatten().collect();
    let report: MetricReport = aggregate(outcomes.iter().map(|o| o.metrics.clone()).collect());
    std::fs::write(args.out_dir.join("metrics.json"), serde_json::to_string_pretty(&report)?)?;
    let table = report.to_table();
    std::fs::write(args.out_dir.join("summary.txt"), &table)?;
    print!("{table}");

    if aborted > 0 {
        return Err(ItemsAborted(aborted).into());
    }
    if failed > 0 {
        anyhow::bail!("{failed} item(s) failed");
    }
    Ok(OK)
}
