//! The backend trait, its configuration, and the shared error type.

use crate::http::HttpBackend;
use crate::mock::MockBackend;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Generation parameters passed to [`Backend::generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub max_tokens: u32,
    pub temperature: f64,
    /// Sampling seed.  The mock backend derives its output from this, so
    /// varying the seed is how callers ask for distinct samples.
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { max_tokens: 512, temperature: 0.7, seed: 0 }
    }
}

impl GenParams {
    pub fn with_seed(seed: u64) -> Self {
        GenParams { seed, ..GenParams::default() }
    }
}

/// One scored token of a continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    /// Natural-log probability, always <= 0.
    pub logprob: f64,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {reason}")]
    Unavailable { reason: String },
    #[error("backend request timed out")]
    Timeout,
    #[error("authentication rejected with HTTP status {status}")]
    AuthFailure { status: u16 },
    #[error("request rejected with HTTP status {status}: {body}")]
    RequestRejected { status: u16, body: String },
    #[error("backend does not expose token log-probabilities")]
    NoLogprobSupport,
    #[error("malformed backend response: {reason}")]
    MalformedResponse { reason: String },
    #[error("API key environment variable {env} is not set")]
    MissingApiKey { env: String },
}

/// A text-completion model.
///
/// Implementations must be deterministic for fixed inputs wherever the
/// underlying service allows it, and must be safe to share across threads;
/// calls carry no session state.
pub trait Backend: Send + Sync {
    /// Short human-readable identity for logs and manifests.
    fn name(&self) -> String;

    /// Complete `prompt`, returning the continuation text only.
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError>;

    /// Score `continuation` token-by-token as a forced completion of
    /// `prompt`.  Concatenating the returned tokens reproduces
    /// `continuation` exactly.  Backends without log-probability access
    /// fail with [`BackendError::NoLogprobSupport`].
    fn score_continuation(
        &self,
        prompt: &str,
        continuation: &str,
    ) -> Result<Vec<TokenScore>, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

/// Declarative backend configuration; [`BackendSpec::build`] turns it into
/// a live backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSpec {
    pub kind: BackendKind,
    /// HTTP endpoint; falls back to the `TG_BACKEND_URL` environment
    /// variable when unset.
    pub endpoint_url: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: String,
    pub timeout_secs: u64,
    /// Retry budget for transient failures; auth rejections never retry.
    pub max_retries: u32,
    /// Upper bound on concurrently outstanding HTTP requests.
    pub max_inflight: usize,
    /// Seed for the mock backend's deterministic text and scores.
    pub mock_seed: u64,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec {
            kind: BackendKind::Mock,
            endpoint_url: None,
            model: "offline-mock".to_string(),
            auth_env: "TG_BACKEND_KEY".to_string(),
            timeout_secs: 30,
            max_retries: 3,
            max_inflight: 4,
            mock_seed: 0,
        }
    }
}

impl BackendSpec {
    pub fn mock(seed: u64) -> Self {
        BackendSpec { mock_seed: seed, ..BackendSpec::default() }
    }

    pub fn build(&self) -> Result<Box<dyn Backend>, BackendError> {
        match self.kind {
            BackendKind::Mock => Ok(Box::new(MockBackend::new(self.mock_seed))),
            BackendKind::Http => Ok(Box::new(HttpBackend::from_spec(self)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_builds_the_mock() {
        let backend = BackendSpec::default().build().unwrap();
        assert_eq!(backend.name(), "mock(seed=0)");
    }

    #[test]
    fn http_spec_without_endpoint_or_key_fails_cleanly() {
        let spec = BackendSpec {
            kind: BackendKind::Http,
            auth_env: "TGKIT_TEST_UNSET_KEY_VAR".to_string(),
            endpoint_url: Some("http://localhost:1/v1/completions".to_string()),
            ..BackendSpec::default()
        };
        match spec.build() {
            Err(BackendError::MissingApiKey { env }) => {
                assert_eq!(env, "TGKIT_TEST_UNSET_KEY_VAR");
            }
            Err(other) => panic!("expected MissingApiKey, got {other:?}"),
            Ok(_) => panic!("expected MissingApiKey, got a backend"),
        }
    }
}
