//! Rule-driven backend double for tests.
//!
//! [`ScriptedBackend`] matches substring rules against the prompt (and the
//! continuation for scoring), so a test can rig exact generations and
//! per-token log-probabilities without standing up a server.  Rules are
//! checked in insertion order; the first match wins.

use crate::api::{Backend, BackendError, GenParams, TokenScore};

struct GenRule {
    prompt_contains: String,
    response: String,
}

struct ScoreRule {
    prompt_contains: Option<String>,
    continuation: String,
    token_logprobs: Vec<f64>,
}

/// A deterministic, stateless test backend configured by rules.
pub struct ScriptedBackend {
    gen_rules: Vec<GenRule>,
    default_response: String,
    score_rules: Vec<ScoreRule>,
    default_logprob: f64,
    logprobs_supported: bool,
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ScriptedBackend {
    pub fn new() -> Self {
        ScriptedBackend {
            gen_rules: Vec::new(),
            default_response: String::new(),
            score_rules: Vec::new(),
            default_logprob: -1.0,
            logprobs_supported: true,
        }
    }

    /// Respond with `response` whenever the prompt contains `marker`.
    pub fn on_generate(mut self, marker: &str, response: &str) -> Self {
        self.gen_rules.push(GenRule {
            prompt_contains: marker.to_string(),
            response: response.to_string(),
        });
        self
    }

    /// Response when no generation rule matches (defaults to empty text).
    pub fn default_response(mut self, response: &str) -> Self {
        self.default_response = response.to_string();
        self
    }

    /// Score `continuation` with the given per-token log-probabilities
    /// whenever the prompt contains `marker` (or always, for `None`).
    /// Whitespace-delimited words are the tokens; when the rule supplies
    /// fewer values than words, the last value repeats.
    pub fn on_score(
        mut self,
        marker: Option<&str>,
        continuation: &str,
        token_logprobs: Vec<f64>,
    ) -> Self {
        self.score_rules.push(ScoreRule {
            prompt_contains: marker.map(str::to_string),
            continuation: continuation.to_string(),
            token_logprobs,
        });
        self
    }

    /// Log-probability per token when no scoring rule matches.
    pub fn default_logprob(mut self, logprob: f64) -> Self {
        self.default_logprob = logprob;
        self
    }

    /// Make `score_continuation` fail like a chat-only service.
    pub fn without_logprobs(mut self) -> Self {
        self.logprobs_supported = false;
        self
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> String {
        "scripted".to_string()
    }

    fn generate(&self, prompt: &str, _params: &GenParams) -> Result<String, BackendError> {
        for rule in &self.gen_rules {
            if prompt.contains(&rule.prompt_contains) {
                return Ok(rule.response.clone());
            }
        }
        Ok(self.default_response.clone())
    }

    fn score_continuation(
        &self,
        prompt: &str,
        continuation: &str,
    ) -> Result<Vec<TokenScore>, BackendError> {
        if !self.logprobs_supported {
            return Err(BackendError::NoLogprobSupport);
        }
        let words: Vec<&str> = continuation.split_whitespace().collect();
        for rule in &self.score_rules {
            let prompt_ok = rule.prompt_contains.as_deref().is_none_or(|m| prompt.contains(m));
            if prompt_ok && rule.continuation == continuation {
                let last = rule.token_logprobs.last().copied().unwrap_or(self.default_logprob);
                return Ok(words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| TokenScore {
                        token: w.to_string(),
                        logprob: rule.token_logprobs.get(i).copied().unwrap_or(last),
                    })
                    .collect());
            }
        }
        Ok(words
            .iter()
            .map(|w| TokenScore { token: w.to_string(), logprob: self.default_logprob })
            .collect())
    }
}
