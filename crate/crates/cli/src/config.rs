//! The TOML config file and command-line overrides.
//!
//! Precedence is flag, then file, then built-in default. Secrets never live
//! in the file; it only names the environment variables that hold them.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use hgmcts_core::{RewardCombination, SearchConfig};
use hgmcts_remote::{LlmEndpointConfig, SearchEndpointConfig};
use serde::{Deserialize, Serialize};

use crate::exit::Usage;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub search: SearchConfig,
    pub llm: LlmEndpointConfig,
    /// Web search provider; only needed by the remote backend when no local
    /// corpus is given.
    pub web_search: Option<SearchEndpointConfig>,
}

impl FileConfig {
    /// Defaults when `path` is `None`; a named file must exist and parse.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        if !path.is_file() {
            return Err(Usage(format!("config file {} does not exist", path.display())).into());
        }
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&raw).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(raw: &str) -> anyhow::Result<Self> {
        toml::from_str(raw).map_err(|e| Usage(e.to_string()).into())
    }
}

/// Search settings that can be given on the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchOverrides {
    /// Simulation budget.
    #[arg(long)]
    pub max_simulations: Option<u32>,
    #[arg(long)]
    pub max_depth: Option<u32>,
    /// UCT exploration weight.
    #[arg(long)]
    pub uct_weight: Option<f64>,
    /// Subqueries per expansion.
    #[arg(long)]
    pub m_q: Option<usize>,
    /// Documents per subquery.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Seed recorded in the search config.
    #[arg(long = "search-seed")]
    pub seed: Option<u64>,
    /// Run without the checklist (ablation).
    #[arg(long)]
    pub no_checklist: bool,
    /// Fold rewards with a sum instead of a product.
    #[arg(long)]
    pub sum_rewards: bool,
}

impl SearchOverrides {
    pub fn apply(&self, base: &SearchConfig) -> SearchConfig {
        let mut c = base.clone();
        if let Some(v) = self.max_simulations {
            c.max_simulations = v;
        }
        if let Some(v) = self.max_depth {
            c.max_depth = v;
        }
        if let Some(v) = self.uct_weight {
            c.uct_weight = v;
        }
        if let Some(v) = self.m_q {
            c.m_q = v;
        }
        if let Some(v) = self.top_k {
            c.top_k = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.no_checklist {
            c.use_checklist = false;
        }
        if self.sum_rewards {
            c.reward_combination = RewardCombination::Sum;
        }
        c
    }
}

/// Resolved settings for one command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub file: FileConfig,
    pub search: SearchConfig,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl Settings {
    pub fn resolve(path: Option<&Path>, overrides: &SearchOverrides) -> anyhow::Result<Self> {
        let file = FileConfig::load(path)?;
        let search = overrides.apply(&file.search);
        search.validate().map_err(|e| Usage(e.to_string()))?;
        let base_dir = path
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(Self { file, search, base_dir })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(FileConfig::parse("").unwrap(), FileConfig::default());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = FileConfig::parse("[search]\nmax_simulations = 12\nm_q = 2\n").unwrap();
        let flags = SearchOverrides { m_q: Some(5), ..Default::default() };
        let c = flags.apply(&file.search);
        assert_eq!(c.max_simulations, 12);
        assert_eq!(c.m_q, 5);
        assert_eq!(c.top_k, 3);
        assert_eq!(c.uct_weight, 0.2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[search]\nmax_sims = 3\n").is_err());
        assert!(FileConfig::parse("[llm]\napi_key = \"sk-x\"\n").is_err());
        assert!(FileConfig::parse("[other]\n").is_err());
    }

    #[test]
    fn endpoint_sections() {
        let f = FileConfig::parse(
            "[llm]\nbase_url = \"http://h/v1\"\napi_key_env = \"K\"\n[web_search]\nbase_url = \"http://s\"\n[web_search.mapping]\nresults = \"web.results\"\n",
        )
        .unwrap();
        assert_eq!(f.llm.api_key_env.as_deref(), Some("K"));
        assert_eq!(f.llm.temperature, 0.9);
        assert_eq!(f.web_search.unwrap().mapping.results, "web.results");
    }
}
