//! Building the policy, reward and search backends for a command.

use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use clap::ValueEnum;
use hgmcts_core::backends::{LocalCorpus, ScriptedBackend, ScriptedScenario};
use hgmcts_core::{Backends, PolicyBackend, RewardBackend, SearchBackend};
use hgmcts_remote::{ChatClient, ConcurrencyLimiter, LlmPolicy, LlmReward, PromptSet, WebSearchClient};

use crate::config::Settings;
use crate::exit::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Deterministic replies from a scenario file.
    Scripted,
    /// Chat-completion endpoint plus web search or a local corpus.
    Remote,
}

/// Shareable backend handles.
#[derive(Clone)]
pub struct Stack {
    pub policy: Arc<dyn PolicyBackend>,
    pub reward: Arc<dyn RewardBackend>,
    pub search: Arc<dyn SearchBackend>,
}

impl Stack {
    pub fn backends(&self) -> Backends<'_> {
        Backends {
            policy: &*self.policy,
            reward: &*self.reward,
            search: &*self.search,
        }
    }

    pub fn scripted(scenario: ScriptedScenario) -> anyhow::Result<Self> {
        let b = Arc::new(ScriptedBackend::new(scenario)?);
        Ok(Self {
            policy: b.clone(),
            reward: b.clone(),
            search: b,
        })
    }

    /// Remote model backends. Search goes to `corpus` when given, otherwise
    /// to the configured web search provider. Fails before any request when
    /// a key variable is missing.
    pub fn remote(settings: &Settings, corpus: Option<&Path>) -> anyhow::Result<Self> {
        let llm = &settings.file.llm;
        if llm.api_key_env.as_deref().is_none_or(|v| v.trim().is_empty()) {
            return Err(Usage(
                "the remote backend needs llm.api_key_env naming the variable that holds the API key".into(),
            )
            .into());
        }
        let limiter = ConcurrencyLimiter::new(llm.max_concurrency);
        let prompts = match &llm.prompt_dir {
            Some(dir) => PromptSet::from_dir(&settings.base_dir.join(dir))?,
            None => PromptSet::default(),
        };
        let prompts = Arc::new(prompts);
        let chat = ChatClient::new(llm, limiter.clone()).context("llm endpoint")?;
        let budget = settings.search.memory_budget;
        let search: Arc<dyn SearchBackend> = match (corpus, &settings.file.web_search) {
            (Some(dir), _) => Arc::new(LocalCorpus::from_dir(dir)?),
            (None, Some(web)) => Arc::new(WebSearchClient::new(web, limiter).context("web search endpoint")?),
            (None, None) => {
                return Err(Usage("the remote backend needs a [web_search] section or --corpus".into()).into())
            }
        };
        Ok(Self {
            policy: Arc::new(LlmPolicy::new(chat.clone(), prompts.clone(), budget)),
            reward: Arc::new(LlmReward::new(chat, prompts, budget)),
            search,
        })
    }
}
