//! The offline deterministic backend.
//!
//! # Scoring model
//!
//! Scoring is a published closed form so tests can recompute it by hand.
//! Text splits into *tokens*: maximal runs of whitespace or of
//! non-whitespace, so concatenating the tokens reproduces the text exactly.
//! For a prompt `p` and continuation `c`, the token sequence of `p`
//! followed by the token sequence of `c` is indexed from zero, and the
//! token of `c` at combined index `i` scores
//!
//! ```text
//! logprob = -5 * fnv1a64(token_bytes ++ 0xFF ++ le64(i) ++ le64(seed)) / 2^64
//! ```
//!
//! which lies in `[-5, 0]`.  Because the index is the position in the
//! combined sequence, scoring a continuation in one call or in consecutive
//! whitespace-separated pieces yields identical per-token values.
//!
//! Generation derives a short pseudo-word sentence from
//! `fnv1a64(prompt ++ 0xFE ++ le64(spec seed) ++ le64(call seed))` and ends
//! with a deterministic `the answer is <word>` tail so that downstream
//! answer parsing always finds a final-answer marker.

use crate::api::{Backend, BackendError, GenParams, TokenScore};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a, the stable hash behind every deterministic choice the
/// mock makes.  Stable across platforms and releases by construction.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Split text into maximal whitespace / non-whitespace runs.  The
/// concatenation of the result is exactly the input.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let first_is_ws = rest.chars().next().unwrap().is_whitespace();
        let end = rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace() != first_is_ws)
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        tokens.push(&rest[..end]);
        rest = &rest[end..];
    }
    tokens
}

const LEXICON: &[&str] = &[
    "amber", "basin", "cedar", "delta", "ember", "fjord", "garnet", "harbor", "indigo", "juniper",
    "kestrel", "lantern", "meadow", "nickel", "orchid", "pebble", "quarry", "raven", "sable",
    "timber", "umber", "violet", "willow", "zephyr",
];

const ANSWER_TAIL: &[&str] = &["True", "False", "Unknown", "1950", "None"];

/// Deterministic offline backend; see the module docs for the exact model.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        MockBackend { seed }
    }

    fn token_logprob(&self, token: &str, combined_index: u64) -> f64 {
        let mut bytes = Vec::with_capacity(token.len() + 17);
        bytes.extend_from_slice(token.as_bytes());
        bytes.push(0xFF);
        bytes.extend_from_slice(&combined_index.to_le_bytes());
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        -5.0 * (fnv1a64(&bytes) as f64 / u64::MAX as f64)
    }
}

impl Backend for MockBackend {
    fn name(&self) -> String {
        format!("mock(seed={})", self.seed)
    }

    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        let mut bytes = prompt.as_bytes().to_vec();
        bytes.push(0xFE);
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        bytes.extend_from_slice(&params.seed.to_le_bytes());
        let mut state = fnv1a64(&bytes);
        let word_count = 6 + (state % 5) as usize;
        let mut words = Vec::with_capacity(word_count + 4);
        for _ in 0..word_count {
            words.push(LEXICON[(state % LEXICON.len() as u64) as usize]);
            state = fnv1a64(&state.to_le_bytes());
        }
        let tail = ANSWER_TAIL[(state % ANSWER_TAIL.len() as u64) as usize];
        Ok(format!("{}. the answer is {}", words.join(" "), tail))
    }

    fn score_continuation(
        &self,
        prompt: &str,
        continuation: &str,
    ) -> Result<Vec<TokenScore>, BackendError> {
        let offset = tokenize(prompt).len() as u64;
        Ok(tokenize(continuation)
            .iter()
            .enumerate()
            .map(|(i, token)| TokenScore {
                token: token.to_string(),
                logprob: self.token_logprob(token, offset + i as u64),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn tokenize_preserves_the_text() {
        let text = "  True or\tfalse:  event\n";
        let tokens = tokenize(text);
        assert_eq!(tokens.concat(), text);
        assert_eq!(tokens, vec!["  ", "True", " ", "or", "\t", "false:", "  ", "event", "\n"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn generation_is_deterministic_per_input() {
        let mock = MockBackend::new(7);
        let params = GenParams::with_seed(3);
        let a = mock.generate("Timeline:", &params).unwrap();
        let b = mock.generate("Timeline:", &params).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("the answer is "), "generation carries an answer marker: {a}");
    }

    #[test]
    fn generation_varies_with_seed_without_collisions() {
        let mock = MockBackend::new(0);
        let outputs: HashSet<String> = (0..1000)
            .map(|s| mock.generate("fixed prompt", &GenParams::with_seed(s)).unwrap())
            .collect();
        assert_eq!(outputs.len(), 1000, "all 1000 seeds give distinct generations");
    }

    #[test]
    fn scores_match_the_published_formula() {
        let mock = MockBackend::new(11);
        let prompt = "The answer is ";
        let continuation = "True enough";
        let scores = mock.score_continuation(prompt, continuation).unwrap();
        let rebuilt: String = scores.iter().map(|s| s.token.as_str()).collect();
        assert_eq!(rebuilt, continuation);

        // The prompt tokenizes into six runs ("The", " ", "answer", " ",
        // "is", " "), so the first continuation token sits at index 6.
        let prompt_tokens = tokenize(prompt);
        assert_eq!(prompt_tokens.len(), 6);
        let mut bytes = b"True".to_vec();
        bytes.push(0xFF);
        bytes.extend_from_slice(&6u64.to_le_bytes());
        bytes.extend_from_slice(&11u64.to_le_bytes());
        let expected = -5.0 * (fnv1a64(&bytes) as f64 / u64::MAX as f64);
        assert_eq!(scores[0].logprob, expected);
        assert!(scores.iter().all(|s| (-5.0..=0.0).contains(&s.logprob)));
    }

    #[test]
    fn scoring_in_pieces_matches_scoring_whole() {
        let mock = MockBackend::new(5);
        let prompt = "Q: ";
        let whole = mock.score_continuation(prompt, "alpha beta gamma").unwrap();
        let first = mock.score_continuation(prompt, "alpha ").unwrap();
        let second = mock.score_continuation("Q: alpha ", "beta gamma").unwrap();
        let stitched: Vec<TokenScore> = first.into_iter().chain(second).collect();
        assert_eq!(whole, stitched);
    }
}
