//! Checklist-guided Monte Carlo tree search for intricate information seeking.
//!
//! A search starts from a complex query, asks a policy backend for a checklist
//! of sub-goals, then grows a UCT search tree whose expansions issue retrieval
//! subqueries. Every new node is scored by a reward backend (exploration
//! reward, retrieval reward and textual progress feedback); useful knowledge is
//! collected into an append-only memory and the checklist is updated as
//! sub-goals get solved. Once the checklist is complete or the simulation
//! budget runs out, the policy backend writes the final answer.
//!
//! All model and search access goes through the traits in [`backends`], so the
//! whole loop can run against deterministic scripted scenarios.

pub mod backends;
pub mod checklist;
pub mod evaluation;
pub mod memory;
pub mod orchestrator;
pub mod scenario_gen;
pub mod search_tree;
pub mod text;
pub mod trace;

pub use backends::{
    BackendError, Document, PolicyBackend, ProgressFeedback, RewardBackend, RewardBundle,
    SearchBackend,
};
pub use checklist::{Checklist, GoalOrigin, GoalStatus, SubGoal};
pub use memory::{KnowledgeMemory, KnowledgeSnippet};
pub use orchestrator::{
    combine_reward, run_search, Backends, HistoryContext, RewardCombination, SearchConfig,
    SearchError, SearchOutcome, TerminationReason,
};
pub use search_tree::{NodeId, SearchTree, TreeError, TreeNode};
