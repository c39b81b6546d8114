//! `hgmcts sweep`: a scenario suite at several simulation budgets, one CSV
//! row per budget.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use hgmcts_core::backends::ScriptedScenario;
use hgmcts_core::evaluation::{exact_match, page_recall, token_f1};
use hgmcts_core::trace::Tracer;
use hgmcts_core::{run_search, SearchConfig};

use crate::config::{SearchOverrides, Settings};
use crate::exit::{Usage, OK};
use crate::stack::Stack;

pub const CSV_HEADER: &str = "budget,recall_mean,em_mean,f1_mean,items";

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated simulation budgets, e.g. 5,10,20,40.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub simulations: Vec<u32>,
    /// Directory of scenario JSON files.
    #[arg(long)]
    pub scenario_suite: PathBuf,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: SearchOverrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub budget: u32,
    pub recall_mean: Option<f64>,
    pub em_mean: f64,
    pub f1_mean: f64,
    pub items: usize,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let recall = self.recall_mean.map(|r| format!("{r:.6}")).unwrap_or_default();
        format!("{},{},{:.6},{:.6},{}", self.budget, recall, self.em_mean, self.f1_mean, self.items)
    }
}

/// Scenario files of a suite directory in file-name order.
pub fn load_suite(dir: &Path) -> anyhow::Result<Vec<ScriptedScenario>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read suite {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        return Err(Usage(format!("suite {} has no scenario files", dir.display())).into());
    }
    paths.iter().map(|p| Ok(ScriptedScenario::from_path(p)?)).collect()
}

pub fn sweep_rows(suite: &[ScriptedScenario], base: &SearchConfig, budgets: &[u32]) -> anyhow::Result<Vec<SweepRow>> {
    let stacks = suite.iter().map(|s| Stack::scripted(s.clone())).collect::<anyhow::Result<Vec<_>>>()?;
    budgets
        .iter()
        .map(|&budget| {
            let config = SearchConfig { max_simulations: budget, ..base.clone() };
            config.validate().map_err(|e| Usage(e.to_string()))?;
            let (mut recalls, mut em, mut f1) = (Vec::new(), 0.0, 0.0);
            for (scenario, stack) in suite.iter().zip(&stacks) {
                let out = run_search(&scenario.query, &config, stack.backends(), Tracer::in_memory())
                    .with_context(|| format!("scenario {} at budget {budget}", scenario.name))?;
                recalls.extend(page_recall(&out.memory.source_locators(), &scenario.gold_pages()));
                let gold = scenario.reference_answers();
                em += exact_match(&out.answer, &gold);
                f1 += token_f1(&out.answer, &gold);
            }
            let n = suite.len() as f64;
            Ok(SweepRow {
                budget,
                recall_mean: (!recalls.is_empty()).then(|| recalls.iter().sum::<f64>() / recalls.len() as f64),
                em_mean: em / n,
                f1_mean: f1 / n,
                items: suite.len(),
            })
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<u8> {
    if args.simulations.is_empty() {
        return Err(Usage("--simulations needs at least one budget".into()).into());
    }
    let settings = Settings::resolve(args.config.as_deref(), &args.overrides)?;
    let suite = load_suite(&args.scenario_suite)?;
    let rows = sweep_rows(&suite, &settings.search, &args.simulations)?;
    let mut csv = format!("{CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&args.out, &csv).with_context(|| format!("cannot write {}", args.out.display()))?;
    print!("{csv}");
    Ok(OK)
}
