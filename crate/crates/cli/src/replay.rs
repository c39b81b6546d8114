//! `hgmcts replay`: masked comparison of two trace files.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hgmcts_core::trace::{read_trace, replay_verify};

use crate::exit::{DIVERGED, OK};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trace_a: PathBuf,
    #[arg(long)]
    pub trace_b: PathBuf,
}

pub fn replay(args: &ReplayArgs) -> anyhow::Result<u8> {
    let a = read_trace(&args.trace_a).with_context(|| format!("trace {}", args.trace_a.display()))?;
    let b = read_trace(&args.trace_b).with_context(|| format!("trace {}", args.trace_b.display()))?;
    let verdict = replay_verify(&a, &b);
    if verdict.equal {
        println!("traces match ({} events)", a.len());
        return Ok(OK);
    }
    let seq = verdict.first_divergence.unwrap_or_default();
    println!("traces diverge at seq {seq}");
    let show = |events: &[hgmcts_core::trace::TraceEvent]| {
        events
            .iter()
            .find(|e| e.seq == seq)
            .map(|e| serde_json::json!({ "phase": e.phase, "payload": e.payload }).to_string())
            .unwrap_or_else(|| "(missing)".into())
    };
    println!("a: {}", show(&a));
    println!("b: {}", show(&b));
    Ok(DIVERGED)
}
