use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::workspace::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Which structured output a request expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    Generation,
    SystemInference,
    InteractionInference,
    Refinement,
}

impl SchemaId {
    pub const ALL: [SchemaId; 4] = [
        SchemaId::Generation,
        SchemaId::SystemInference,
        SchemaId::InteractionInference,
        SchemaId::Refinement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::Generation => "generation",
            SchemaId::SystemInference => "system_inference",
            SchemaId::InteractionInference => "interaction_inference",
            SchemaId::Refinement => "refinement",
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaId {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemaId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| BackendError::UnknownSchema(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub schema: SchemaId,
    pub messages: Vec<Message>,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, o: Usage) {
        self.prompt_tokens += o.prompt_tokens;
        self.completion_tokens += o.completion_tokens;
    }
}

/// Raw completion. Schema validation happens in the pipeline, not in backends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    Protocol(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
    #[error("unknown response schema {0:?}")]
    UnknownSchema(String),
    #[error("request payload not understood: {0}")]
    BadRequest(String),
}

/// Provider-neutral chat completion. Implementations must be callable from many threads.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError>;

    fn name(&self) -> &str;
}

impl<T: LlmBackend + ?Sized> LlmBackend for Arc<T> {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Counts calls passed through to an inner backend.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: LlmBackend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: LlmBackend> LlmBackend for CountingBackend<B> {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

/// Rough token estimate used when a provider reports none.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_ids_parse() {
        for id in SchemaId::ALL {
            assert_eq!(id.as_str().parse::<SchemaId>().unwrap(), id);
        }
        assert_eq!(
            "critique".parse::<SchemaId>(),
            Err(BackendError::UnknownSchema("critique".into()))
        );
    }
}
