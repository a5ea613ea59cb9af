//! Completion-style HTTP backend.
//!
//! Speaks the classic completions JSON shape: requests carry `model`,
//! `prompt`, `max_tokens`, `temperature`, and optionally `logprobs` +
//! `echo`; responses carry `choices[0].text` and, when echo-scoring,
//! `choices[0].logprobs` with parallel `tokens` / `token_logprobs` /
//! `text_offset` arrays.  Scoring sends prompt and continuation as one
//! echoed prompt with `max_tokens 0` and slices out the tokens whose text
//! offset falls inside the continuation.
//!
//! Transient failures (connect errors, timeouts, HTTP 429/5xx) retry up to
//! the configured budget with exponential backoff; auth rejections (401 /
//! 403) and other 4xx responses never retry.

use crate::api::{Backend, BackendError, BackendSpec, GenParams, TokenScore};
use serde::Deserialize;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: String,
    max_retries: u32,
    gate: InflightGate,
}

impl HttpBackend {
    pub fn from_spec(spec: &BackendSpec) -> Result<Self, BackendError> {
        let url = spec
            .endpoint_url
            .clone()
            .or_else(|| std::env::var("TG_BACKEND_URL").ok())
            .ok_or_else(|| BackendError::Unavailable {
                reason: "no endpoint URL configured and TG_BACKEND_URL is unset".to_string(),
            })?;
        let api_key = std::env::var(&spec.auth_env)
            .map_err(|_| BackendError::MissingApiKey { env: spec.auth_env.clone() })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(spec.timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable { reason: e.to_string() })?;
        Ok(HttpBackend {
            client,
            url,
            model: spec.model.clone(),
            api_key,
            max_retries: spec.max_retries,
            gate: InflightGate::new(spec.max_inflight.max(1)),
        })
    }

    /// POST the body, retrying transient failures with exponential backoff.
    fn post(&self, body: &serde_json::Value) -> Result<CompletionResponse, BackendError> {
        let _slot = self.gate.acquire();
        let mut last_error = BackendError::Unavailable { reason: "no attempts made".to_string() };
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 << (attempt - 1).min(6)));
            }
            let sent = self
                .client
                .post(&self.url)
                .bearer_auth(&self.api_key)
                .json(body)
                .send();
            let response = match sent {
                Ok(r) => r,
                Err(e) if e.is_timeout() => {
                    last_error = BackendError::Timeout;
                    continue;
                }
                Err(e) => {
                    last_error = BackendError::Unavailable { reason: e.to_string() };
                    continue;
                }
            };
            let status = response.status();
            if status.as_u16() == 401 || status.as_u16() == 403 {
                return Err(BackendError::AuthFailure { status: status.as_u16() });
            }
            if status.as_u16() == 429 {
                last_error = BackendError::Unavailable { reason: "HTTP 429".to_string() };
                continue;
            }
            if status.is_client_error() {
                return Err(BackendError::RequestRejected {
                    status: status.as_u16(),
                    body: response.text().unwrap_or_default(),
                });
            }
            if !status.is_success() {
                last_error = BackendError::Unavailable {
                    reason: format!("HTTP {}", status.as_u16()),
                };
                continue;
            }
            return response
                .json::<CompletionResponse>()
                .map_err(|e| BackendError::MalformedResponse { reason: e.to_string() });
        }
        Err(last_error)
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> String {
        format!("http({})", self.model)
    }

    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "prompt": prompt,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "seed": params.seed,
        });
        let response = self.post(&body)?;
        let choice = response.first_choice()?;
        Ok(choice.text.clone())
    }

    fn score_continuation(
        &self,
        prompt: &str,
        continuation: &str,
    ) -> Result<Vec<TokenScore>, BackendError> {
        let full = format!("{prompt}{continuation}");
        let body = serde_json::json!({
            "model": self.model,
            "prompt": full,
            "max_tokens": 0,
            "temperature": 0.0,
            "logprobs": 0,
            "echo": true,
        });
        let response = self.post(&body)?;
        let choice = response.first_choice()?;
        // Chat-only services omit the logprobs block entirely.
        let logprobs = choice.logprobs.as_ref().ok_or(BackendError::NoLogprobSupport)?;
        if logprobs.tokens.len() != logprobs.token_logprobs.len()
            || logprobs.tokens.len() != logprobs.text_offset.len()
        {
            return Err(BackendError::MalformedResponse {
                reason: "logprob arrays have mismatched lengths".to_string(),
            });
        }
        let boundary = prompt.len();
        let mut scores = Vec::new();
        for ((token, lp), offset) in logprobs
            .tokens
            .iter()
            .zip(&logprobs.token_logprobs)
            .zip(&logprobs.text_offset)
        {
            if *offset < boundary {
                continue;
            }
            let lp = lp.ok_or_else(|| BackendError::MalformedResponse {
                reason: format!("null logprob for continuation token {token:?}"),
            })?;
            scores.push(TokenScore { token: token.clone(), logprob: lp });
        }
        Ok(scores)
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

impl CompletionResponse {
    fn first_choice(&self) -> Result<&Choice, BackendError> {
        self.choices.first().ok_or_else(|| BackendError::MalformedResponse {
            reason: "response carries no choices".to_string(),
        })
    }
}

#[derive(Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    logprobs: Option<LogprobBlock>,
}

#[derive(Deserialize)]
struct LogprobBlock {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

/// Counting gate bounding the number of in-flight requests.
struct InflightGate {
    state: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct InflightSlot<'a>(&'a InflightGate);

impl InflightGate {
    fn new(limit: usize) -> Self {
        InflightGate { state: Mutex::new(0), freed: Condvar::new(), limit }
    }

    fn acquire(&self) -> InflightSlot<'_> {
        let mut in_flight = self.state.lock().unwrap();
        while *in_flight >= self.limit {
            in_flight = self.freed.wait(in_flight).unwrap();
        }
        *in_flight += 1;
        InflightSlot(self)
    }
}

impl Drop for InflightSlot<'_> {
    fn drop(&mut self) {
        *self.0.state.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}
