//! Chat-completion client and the policy/reward backends built on it.

use std::sync::Arc;

use hgmcts_core::backends::Summary;
use hgmcts_core::{
    BackendError, Checklist, Document, HistoryContext, KnowledgeMemory, PolicyBackend,
    ProgressFeedback, RewardBackend,
};
use serde_json::{json, Value};

use crate::config::LlmEndpointConfig;
use crate::limiter::ConcurrencyLimiter;
use crate::parse::{first_standalone_integer, parse_feedback, parse_score, parse_subqueries};
use crate::prompts::{fill, PromptSet};
use crate::secret::SecretString;
use crate::transport::Transport;

/// Characters of each candidate document shown to the summarizer.
const DOCUMENT_EXCERPT: usize = 3_000;

#[derive(Debug, Clone)]
pub struct ChatClient {
    config: LlmEndpointConfig,
    transport: Transport,
}

impl ChatClient {
    /// Build a client, reading the API key from the configured environment
    /// variable.
    pub fn new(config: &LlmEndpointConfig, limiter: ConcurrencyLimiter) -> Result<Self, BackendError> {
        let secret = config.resolve_api_key()?;
        Self::with_secret(config, secret, limiter)
    }

    pub fn with_secret(
        config: &LlmEndpointConfig,
        secret: Option<SecretString>,
        limiter: ConcurrencyLimiter,
    ) -> Result<Self, BackendError> {
        config.validate()?;
        let transport = Transport::new(
            config.timeout(),
            limiter,
            secret,
            config.max_retries,
            &config.retry_backoff_ms,
            "chat endpoint",
        )?;
        Ok(Self {
            config: config.clone(),
            transport,
        })
    }

    pub fn config(&self) -> &LlmEndpointConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Text of the first choice.
    pub fn chat_complete(&self, system_prompt: &str, user_prompt: &str) -> Result<String, BackendError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": [
                { "role": "system", "content": system_prompt },
                { "role": "user", "content": user_prompt },
            ],
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
        });
        let payload = body.to_string();
        if self.config.debug_prompts {
            tracing::debug!(prompt = %self.transport.scrub(user_prompt), "chat request");
        }
        let url = self.url();
        let secret = self.transport.secret.clone();
        let reply = self.transport.send(
            |http| {
                let req = http
                    .post(&url)
                    .header(reqwest::header::CONTENT_TYPE, "application/json")
                    .body(payload.clone());
                match &secret {
                    Some(s) => req.bearer_auth(s.expose()),
                    None => req,
                }
            },
            payload.len(),
        )?;
        let value: Value = serde_json::from_str(&reply).map_err(|e| {
            BackendError::ParseFailed(format!("chat endpoint returned invalid JSON: {e}"))
        })?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::ParseFailed("chat reply has no choices[0].message.content".into())
            })
    }
}

fn checklist_text(checklist: &Checklist) -> String {
    if checklist.is_empty() {
        "(no checklist)".into()
    } else {
        checklist.render()
    }
}

fn memory_text(memory: &KnowledgeMemory, budget: usize) -> String {
    if memory.is_empty() {
        "(nothing collected yet)".into()
    } else {
        memory.render_context(budget)
    }
}

fn documents_text(docs: &[Document]) -> String {
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            let content: String = d.content.chars().take(DOCUMENT_EXCERPT).collect();
            format!("[{}] {} ({})\n{}", i + 1, d.title, d.locator, content)
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Policy model over a chat endpoint.
#[derive(Debug, Clone)]
pub struct LlmPolicy {
    chat: ChatClient,
    prompts: Arc<PromptSet>,
    memory_budget: usize,
}

impl LlmPolicy {
    pub fn new(chat: ChatClient, prompts: Arc<PromptSet>, memory_budget: usize) -> Self {
        Self {
            chat,
            prompts,
            memory_budget,
        }
    }

    fn ask(&self, user: String) -> Result<String, BackendError> {
        self.chat.chat_complete(&self.prompts.system, &user)
    }
}

/// Read the summarizer's reply: a `{"doc": n, "summary": ...}` object, or
/// failing that the first integer as the document number and the whole
/// reply as the summary.
fn parse_summary(raw: &str, docs: &[Document]) -> Result<Summary, BackendError> {
    let pick = |n: Option<i64>| {
        n.and_then(|n| usize::try_from(n).ok())
            .filter(|n| (1..=docs.len()).contains(n))
            .map_or(0, |n| n - 1)
    };
    let json = raw
        .find('{')
        .zip(raw.rfind('}'))
        .filter(|(a, b)| a < b)
        .and_then(|(a, b)| serde_json::from_str::<Value>(&raw[a..=b]).ok());
    if let Some(v) = json {
        if let Some(text) = v.get("summary").and_then(Value::as_str) {
            let doc = pick(v.get("doc").and_then(Value::as_i64));
            return Ok(Summary {
                doc_id: docs[doc].doc_id.clone(),
                text: text.trim().to_string(),
            });
        }
    }
    let text = raw.trim();
    if text.is_empty() {
        return Err(BackendError::ParseFailed("empty summary reply".into()));
    }
    Ok(Summary {
        doc_id: docs[pick(first_standalone_integer(text))].doc_id.clone(),
        text: text.to_string(),
    })
}

impl PolicyBackend for LlmPolicy {
    fn name(&self) -> String {
        format!("llm-policy:{}", self.chat.config.model_name)
    }

    fn generate_checklist(&self, query: &str) -> Result<String, BackendError> {
        self.ask(fill(&self.prompts.checklist, &[("query", query)]))
    }

    fn propose_subqueries(
        &self,
        history: &HistoryContext,
        checklist: &Checklist,
        memory: &KnowledgeMemory,
        m_q: usize,
    ) -> Result<Vec<String>, BackendError> {
        let prompt = fill(
            &self.prompts.subqueries,
            &[
                ("history", &history.render()),
                ("query", &history.input_query),
                ("checklist", &checklist_text(checklist)),
                ("memory", &memory_text(memory, self.memory_budget)),
                ("m_q", &m_q.to_string()),
            ],
        );
        let mut list = parse_subqueries(&self.ask(prompt)?)?;
        list.truncate(m_q);
        Ok(list)
    }

    fn summarize(&self, subquery: &str, candidates: &[Document]) -> Result<Summary, BackendError> {
        if candidates.is_empty() {
            return Err(BackendError::NoDocuments);
        }
        let prompt = fill(
            &self.prompts.summarize,
            &[("subquery", subquery), ("documents", &documents_text(candidates))],
        );
        parse_summary(&self.ask(prompt)?, candidates)
    }

    fn generate_answer(&self, query: &str, memory: &KnowledgeMemory) -> Result<String, BackendError> {
        let prompt = fill(
            &self.prompts.answer,
            &[("query", query), ("memory", &memory_text(memory, self.memory_budget))],
        );
        Ok(self.ask(prompt)?.trim().to_string())
    }
}

/// Reward model over a chat endpoint.
#[derive(Debug, Clone)]
pub struct LlmReward {
    chat: ChatClient,
    prompts: Arc<PromptSet>,
    memory_budget: usize,
}

impl LlmReward {
    pub fn new(chat: ChatClient, prompts: Arc<PromptSet>, memory_budget: usize) -> Self {
        Self {
            chat,
            prompts,
            memory_budget,
        }
    }

    fn ask(&self, user: String) -> Result<String, BackendError> {
        self.chat.chat_complete(&self.prompts.system, &user)
    }
}

impl RewardBackend for LlmReward {
    fn name(&self) -> String {
        format!("llm-reward:{}", self.chat.config.model_name)
    }

    fn exploration_reward(
        &self,
        subquery: &str,
        checklist: &Checklist,
        history: &HistoryContext,
    ) -> Result<i64, BackendError> {
        let prompt = fill(
            &self.prompts.exploration,
            &[
                ("history", &history.render()),
                ("query", &history.input_query),
                ("checklist", &checklist_text(checklist)),
                ("subquery", subquery),
            ],
        );
        parse_score(&self.ask(prompt)?)
    }

    fn retrieval_reward(&self, subquery: &str, snippet: &str) -> Result<i64, BackendError> {
        let prompt = fill(
            &self.prompts.retrieval,
            &[("subquery", subquery), ("snippet", snippet)],
        );
        parse_score(&self.ask(prompt)?)
    }

    fn progress_feedback(
        &self,
        subquery: &str,
        snippet: Option<&str>,
        checklist: &Checklist,
        history: &HistoryContext,
        memory: &KnowledgeMemory,
    ) -> Result<ProgressFeedback, BackendError> {
        let prompt = fill(
            &self.prompts.feedback,
            &[
                ("history", &history.render()),
                ("query", &history.input_query),
                ("checklist", &checklist_text(checklist)),
                ("subquery", subquery),
                ("snippet", snippet.unwrap_or("(nothing was retrieved)")),
                ("memory", &memory_text(memory, self.memory_budget)),
            ],
        );
        parse_feedback(&self.ask(prompt)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs() -> Vec<Document> {
        ["a", "b"]
            .iter()
            .map(|id| Document {
                doc_id: id.to_string(),
                title: id.to_uppercase(),
                locator: format!("https://x.org/{id}"),
                content: "text".into(),
            })
            .collect()
    }

    #[test]
    fn summary_json_and_fallback() {
        let d = docs();
        let s = parse_summary("```json\n{\"doc\": 2, \"summary\": \" B facts \"}\n```", &d).unwrap();
        assert_eq!((s.doc_id.as_str(), s.text.as_str()), ("b", "B facts"));
        let s = parse_summary("Document 2 says B facts.", &d).unwrap();
        assert_eq!(s.doc_id, "b");
        // out-of-range numbers fall back to the top result
        let s = parse_summary("{\"doc\": 9, \"summary\": \"x\"}", &d).unwrap();
        assert_eq!(s.doc_id, "a");
        assert!(parse_summary("  ", &d).is_err());
    }
}
