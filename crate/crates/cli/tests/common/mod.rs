//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use hgmcts_teststub::{chat_reply, Recorded, Reply, StubServer};
use serde_json::{json, Value};

pub const KEY: &str = "sk-live-9f8e7d6c5b4a";

pub fn hgmcts(args: &[&str]) -> Output {
    hgmcts_env(args, &[])
}

/// Run with `dir` as the working directory.
pub fn hgmcts_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgmcts"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn hgmcts")
}

pub fn hgmcts_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hgmcts"));
    cmd.args(args).env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn hgmcts")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// User prompt of a recorded chat request.
pub fn prompt_of(req: &Recorded) -> String {
    serde_json::from_str::<Value>(&req.body)
        .ok()
        .and_then(|v| v.pointer("/messages/1/content").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default()
}

/// Chat endpoint that plays a two-goal research session, routed on the
/// wording of each default prompt template.
pub fn fake_llm() -> StubServer {
    fake_llm_with("Score: 1", "Score: 2")
}

/// Like [`fake_llm`] with fixed replies to the two scoring prompts.
pub fn fake_llm_with(exploration: &'static str, retrieval: &'static str) -> StubServer {
    StubServer::with_responder(move |_, req| {
        let p = prompt_of(req);
        let text = if p.contains("Break the question into") {
            "1. Find who designed the tower\n2. Find the year the tower opened".to_string()
        } else if p.contains("Propose up to") {
            "1. tower designer\n2. tower opening year".to_string()
        } else if p.contains("Pick the single document") {
            let summary = if p.contains("Search query: tower designer") {
                "The tower was designed by Gustave Eiffel."
            } else {
                "The tower opened in 1889."
            };
            format!("```json\n{}\n```", json!({ "doc": 1, "summary": summary }))
        } else if p.contains("Does this query target") {
            exploration.to_string()
        } else if p.contains("How well does the extracted knowledge") {
            retrieval.to_string()
        } else if p.contains("Judge which sub-goals") {
            let solved = if p.contains("Latest search query: tower designer") { 1 } else { 2 };
            format!(
                "Progress made.\n```json\n{}\n```",
                json!({ "solved_goal_ids": [solved], "new_goals": [], "terminate": false })
            )
        } else if p.contains("Answer the question using only") {
            "Gustave Eiffel; it opened in 1889.".to_string()
        } else {
            "unexpected prompt".to_string()
        };
        Reply::ok(chat_reply(&text))
    })
}

/// Two-document corpus for the fake session.
pub fn write_corpus(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let docs = [
        ("designer", "Tower designer", "The tower designer was Gustave Eiffel, whose company built it."),
        ("opening", "Tower opening", "The tower opening year was 1889, for the world fair."),
    ];
    for (id, title, content) in docs {
        let doc = json!({ "doc_id": id, "title": title, "locator": format!("https://docs.example.org/{id}"), "content": content });
        std::fs::write(dir.join(format!("{id}.json")), doc.to_string()).unwrap();
    }
}

/// Config file pointing the remote backend at `llm_url`.
pub fn write_remote_config(path: &Path, llm_url: &str, key_env: &str, extra: &str) {
    let text = format!(
        "[search]\nmax_simulations = 10\n\n[llm]\nbase_url = \"{llm_url}/v1\"\napi_key_env = \"{key_env}\"\nmax_retries = 1\nretry_backoff_ms = [5]\ntimeout_ms = 2000\n{extra}"
    );
    std::fs::write(path, text).unwrap();
}
