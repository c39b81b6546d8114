//! `hgmcts generate`: write the planted-document suite as scenario files
//! plus a dataset that points at them.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hgmcts_core::evaluation::BenchmarkItem;
use hgmcts_core::scenario_gen::generate_suite;

use crate::exit::{Usage, OK};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of scenarios.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn generate(args: &GenerateArgs) -> anyhow::Result<u8> {
    if args.count == 0 {
        return Err(Usage("--count must be at least 1".into()).into());
    }
    let scenario_dir = args.out_dir.join("scenarios");
    std::fs::create_dir_all(&scenario_dir)
        .with_context(|| format!("cannot create {}", scenario_dir.display()))?;
    let mut dataset = String::new();
    for g in generate_suite(args.count, args.seed) {
        let s = &g.scenario;
        let rel = format!("scenarios/{}.json", s.name);
        std::fs::write(args.out_dir.join(&rel), serde_json::to_string_pretty(s)?)?;
        let item = BenchmarkItem {
            id: s.name.clone(),
            question: s.query.clone(),
            answers: s.reference_answers(),
            gold_pages: s.gold_pages().into_iter().collect(),
            scenario: Some(rel),
        };
        dataset.push_str(&serde_json::to_string(&item)?);
        dataset.push('\n');
    }
    std::fs::write(args.out_dir.join("dataset.jsonl"), dataset)?;
    println!("wrote {} scenarios to {}", args.count, args.out_dir.display());
    Ok(OK)
}
