//! Language-model backend abstraction.
//!
//! Everything that talks to a model goes through the [`Backend`] trait:
//! free-form generation plus per-token log-probability scoring of a fixed
//! continuation.  Two implementations ship here:
//!
//! * [`MockBackend`] — fully offline and deterministic, with a published
//!   closed-form scoring model so tests can hand-compute expected values;
//! * [`HttpBackend`] — a completion-style JSON client with bearer-token
//!   auth, bounded retries, and echo-based scoring.
//!
//! [`PromptRegistry`] owns the prompt templates as data files and renders
//! them byte-stably; [`testing::ScriptedBackend`] is a rule-driven double
//! for rigging exact responses and scores in tests.

mod api;
mod http;
mod mock;
pub mod prompts;
pub mod testing;

pub use api::{Backend, BackendError, BackendKind, BackendSpec, GenParams, TokenScore};
pub use http::HttpBackend;
pub use mock::{MockBackend, fnv1a64, tokenize};
pub use prompts::{PromptError, PromptRegistry};
