//! LLM access for translation and glossing: a chat-completions client with a
//! content-addressed cache, a replay backend that never touches the network,
//! an external-scorer client and a local stub server.

pub mod cache;
pub mod client;
pub mod gloss;
pub mod request;
pub mod scorer;
pub mod stub;
pub mod transport;

use thiserror::Error;

pub use cache::Cache;
pub use client::{LlmClient, RetryPolicy};
pub use gloss::{GlossClient, GlossPrediction};
pub use request::{Backend, CompletionRecord, CompletionRequest};
pub use scorer::external_score;
pub use stub::{StubReply, StubRequest, StubServer};
pub use transport::{EndpointConfig, ForbiddenTransport, HttpResponse, Transport, TransportError, UreqTransport};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("no cached response for key {key}")]
    ReplayMiss { key: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last_error}")]
    Exhausted { attempts: u32, last_error: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("{0}")]
    Scorer(String),
}

impl LlmError {
    /// Whether a later attempt could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Exhausted { .. })
    }
}
