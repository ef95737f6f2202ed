//! Chat and embedding backends plus the prompt-signature wire format.

pub mod catalog;
pub mod chat;
pub mod embed;
pub mod http;
pub mod signature;
pub mod simulated;

use std::sync::Arc;

pub use chat::{ChatProvider, ChatRequest, ScriptedLlm, ask_yes_no, call_signature, fields, parse_yes_no};
pub use embed::{CachedEmbedder, Embedder, Embedding, HashEmbedder};
pub use http::{HttpChatProvider, HttpEmbedder};
pub use signature::{FieldSpec, Prompt, Signature, marker, parse_signature_output, render_signature};
pub use simulated::SimulatedLlm;

use crate::config::{ChatBackend, ChatProviderConfig, EmbeddingBackend, EmbeddingProviderConfig};
use crate::error::Result;

pub fn chat_from_config(cfg: &ChatProviderConfig) -> Result<Arc<dyn ChatProvider>> {
    Ok(match cfg.backend {
        ChatBackend::Simulated => Arc::new(SimulatedLlm::new()),
        ChatBackend::Http => Arc::new(HttpChatProvider::from_config(cfg)?),
    })
}

/// Builds the configured embedder, memoized by text.
pub fn embedder_from_config(cfg: &EmbeddingProviderConfig) -> Result<Arc<dyn Embedder>> {
    Ok(match cfg.backend {
        EmbeddingBackend::Hash => Arc::new(CachedEmbedder::new(HashEmbedder::new(cfg.dimension))),
        EmbeddingBackend::Http => Arc::new(CachedEmbedder::new(HttpEmbedder::from_config(cfg)?)),
    })
}
