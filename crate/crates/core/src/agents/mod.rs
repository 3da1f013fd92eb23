//! Reasoning and acting: intent inference from perceived interactions and settings
//! changes, scope-enforced refinement, initial generation, and the LLM backends.

mod anchors;
mod backend;
mod config;
mod io;
pub mod mock;
mod pipeline;
mod prompts;
mod remote;
mod scope;
mod types;

pub use anchors::{batch_interactions, AnchorIndex, UNASSIGNED_LABEL};
pub use backend::{
    estimate_tokens, BackendError, CountingBackend, LlmBackend, LlmRequest, LlmResponse, Message, Role, SchemaId,
    Usage,
};
pub use config::{BackendConfig, BackendKind, ENV_PREFIX};
pub use io::*;
pub use mock::MockBackend;
pub use pipeline::{AgentError, Agents, PipelineRun, SCHEMA_RETRIES};
pub use prompts::{prompt_version, system_prompt};
pub use remote::{RemoteBackend, RemoteConfig};
pub use scope::{enforce_scope, provenance, prune_conflicts};
pub use types::*;
