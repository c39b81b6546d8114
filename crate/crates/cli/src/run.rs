//! `hgmcts run`: one search, answer on stdout, optional trace and report.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hgmcts_core::backends::ScriptedScenario;
use hgmcts_core::trace::{JsonlSink, Tracer};
use hgmcts_core::{run_search, SearchOutcome, TerminationReason};

use crate::config::{SearchOverrides, Settings};
use crate::exit::{Usage, OK};
use crate::stack::{BackendKind, Stack};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Question to answer; defaults to the scenario's query.
    #[arg(long, required_unless_present = "scenario")]
    pub query: Option<String>,
    /// Scenario file driving the scripted backend.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendKind::Scripted)]
    pub backend: BackendKind,
    /// Directory of JSON documents to search instead of the web (remote only).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Write the JSONL trace here.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: SearchOverrides,
}

pub fn reason_name(reason: TerminationReason) -> String {
    serde_json::to_value(reason)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn run(args: &RunArgs) -> anyhow::Result<u8> {
    let settings = Settings::resolve(args.config.as_deref(), &args.overrides)?;
    let scenario = args
        .scenario
        .as_deref()
        .map(ScriptedScenario::from_path)
        .transpose()?;
    let query = args
        .query
        .clone()
        .or_else(|| scenario.as_ref().map(|s| s.query.clone()))
        .unwrap_or_default();
    let stack = match args.backend {
        BackendKind::Scripted => {
            let scenario = scenario.ok_or_else(|| Usage("the scripted backend needs --scenario".into()))?;
            Stack::scripted(scenario)?
        }
        BackendKind::Remote => Stack::remote(&settings, args.corpus.as_deref())?,
    };
    let tracer = match &args.trace_out {
        Some(path) => Tracer::new(Box::new(
            JsonlSink::create(path).with_context(|| format!("cannot create trace {}", path.display()))?,
        )),
        None => Tracer::in_memory(),
    };
    let mut outcome: SearchOutcome = run_search(&query, &settings.search, stack.backends(), tracer)?;
    outcome.trace = args.trace_out.as_ref().map(|p| p.display().to_string());

    println!("answer: {}", outcome.answer);
    println!("termination: {}", reason_name(outcome.termination_reason));
    println!("simulations: {}", outcome.simulations_used);
    if let Some(path) = &args.report_out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, outcome.to_report_json())
            .with_context(|| format!("cannot write report {}", path.display()))?;
    }
    Ok(OK)
}
