//! Endpoint settings. Secrets are never part of the serialized config; the
//! config only names the environment variable holding them.

use std::path::PathBuf;
use std::time::Duration;

use hgmcts_core::BackendError;
use serde::{Deserialize, Serialize};

use crate::limiter::DEFAULT_MAX_CONCURRENCY;
use crate::secret::SecretString;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmEndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    /// Environment variable holding the API key. No key is sent when unset.
    pub api_key_env: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub top_p: f64,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// Sleep before retry `i` is `retry_backoff_ms[min(i, len - 1)]`.
    pub retry_backoff_ms: Vec<u64>,
    pub max_concurrency: usize,
    /// Log prompt text at debug level instead of sizes only.
    pub debug_prompts: bool,
    /// Directory with prompt template overrides.
    pub prompt_dir: Option<PathBuf>,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            api_key_env: None,
            model_name: "gpt-4o-mini".into(),
            temperature: 0.9,
            top_p: 1.0,
            timeout_ms: 60_000,
            max_retries: 3,
            retry_backoff_ms: vec![500, 1_000, 2_000],
            max_concurrency: DEFAULT_MAX_CONCURRENCY,
            debug_prompts: false,
            prompt_dir: None,
        }
    }
}

impl LlmEndpointConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: String| Err(BackendError::Configuration(m));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.base_url.trim().is_empty() {
            return bad("llm base_url is empty".into());
        }
        if self.model_name.trim().is_empty() {
            return bad("llm model_name is empty".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn resolve_api_key(&self) -> Result<Option<SecretString>, BackendError> {
        resolve(self.api_key_env.as_deref())
    }
}

/// Where each field lives in the provider's JSON reply. `results` is a
/// dot-separated path to the hit array; the others are keys inside one hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResultMapping {
    pub results: String,
    pub title: String,
    pub link: String,
    pub snippet: String,
    pub content: String,
}

impl Default for ResultMapping {
    fn default() -> Self {
        Self {
            results: "items".into(),
            title: "title".into(),
            link: "link".into(),
            snippet: "snippet".into(),
            content: "content".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchEndpointConfig {
    /// Full search URL; the query goes in as a query-string parameter.
    pub base_url: String,
    pub api_key_env: Option<String>,
    /// Send the key as this query-string parameter; a bearer header is used
    /// when unset.
    pub api_key_param: Option<String>,
    pub query_param: String,
    pub count_param: String,
    pub top_k: usize,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub retry_backoff_ms: Vec<u64>,
    pub mapping: ResultMapping,
}

impl Default for SearchEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8001/search".into(),
            api_key_env: None,
            api_key_param: None,
            query_param: "q".into(),
            count_param: "num".into(),
            top_k: 3,
            timeout_ms: 30_000,
            max_retries: 3,
            retry_backoff_ms: vec![500, 1_000, 2_000],
            mapping: ResultMapping::default(),
        }
    }
}

impl SearchEndpointConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.top_k == 0 {
            return Err(BackendError::Configuration("search top_k must be at least 1".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(BackendError::Configuration("search base_url is empty".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn resolve_api_key(&self) -> Result<Option<SecretString>, BackendError> {
        resolve(self.api_key_env.as_deref())
    }
}

fn resolve(var: Option<&str>) -> Result<Option<SecretString>, BackendError> {
    var.map(|v| SecretString::from_env(v).map_err(BackendError::Configuration))
        .transpose()
}
