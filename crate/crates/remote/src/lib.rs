//! Networked backends: a chat-completion client implementing the policy and
//! reward contracts, and a JSON web-search client implementing the search
//! contract.
//!
//! All calls are blocking, go through a shared concurrency limiter, and
//! retry transient failures on a fixed backoff schedule. API keys are held
//! in [`SecretString`] and scrubbed from every error message.

pub mod config;
pub mod limiter;
pub mod llm;
pub mod parse;
pub mod prompts;
pub mod search;
pub mod secret;
mod transport;

pub use config::{LlmEndpointConfig, SearchEndpointConfig};
pub use limiter::ConcurrencyLimiter;
pub use llm::{ChatClient, LlmPolicy, LlmReward};
pub use parse::{parse_structured_reply, Expected, Parsed};
pub use prompts::PromptSet;
pub use search::WebSearchClient;
pub use secret::SecretString;
