//! Reasoning-chain bootstrapping: generate candidate chains of thought,
//! reject the ones that land on a wrong final answer, score the survivors
//! by how much they raise the gold answer's standing, and sample a few to
//! keep as training data.
//!
//! Scoring combines two signals.  The base signal is the length-normalized
//! sequence log-probability of the gold answer when forced after the chain.
//! The contrastive signal — *plausibility growth* — is the log-ratio of the
//! gold answer's probability to the mean probability of the wrong
//! candidates in the same position: a chain that makes the gold answer more
//! likely *relative to its competitors* scores higher even when absolute
//! probabilities are low.  The final score is `logP(gold) + gamma * growth`;
//! a softmax over scores gives the sampling distribution.

use crate::mix_seed;
use crate::qa::QAItem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tgkit_backend::{Backend, BackendError, GenParams, PromptError, PromptRegistry};
use thiserror::Error;

/// A worked example shown before the query: timeline, question,
/// scaffolding, and a reference reasoning chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoBlock {
    pub timeline: String,
    pub question: String,
    pub knowledge: String,
    pub cot: String,
}

/// The query block: like a demo but ending at "let's think step by step".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedQuery {
    pub timeline: String,
    pub question: String,
    pub knowledge: String,
}

/// One generated reasoning chain with its parsed answer, acceptance flag,
/// and full score decomposition.  Rejected candidates keep zeroed scores
/// and a zero sampling probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoTCandidate {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parsed_answer: Option<String>,
    /// The parsed answer matched a gold under answer normalization.
    pub accepted: bool,
    /// Length-normalized log-probability of the gold answer after the chain.
    pub log_p_correct: f64,
    /// Contrastive log-ratio against the wrong candidates.
    pub plausibility_growth: f64,
    /// `log_p_correct + gamma * plausibility_growth`.
    pub score: f64,
    /// Softmax of `score` across the accepted set; 0 when rejected.
    pub sample_prob: f64,
}

impl CoTCandidate {
    pub fn from_text(text: String) -> Self {
        let parsed_answer = parse_final_answer(&text);
        CoTCandidate {
            text,
            parsed_answer,
            accepted: false,
            log_p_correct: 0.0,
            plausibility_growth: 0.0,
            score: 0.0,
            sample_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    /// Candidate chains to generate per item.
    pub num_candidates: usize,
    /// Chains to keep after sampling.
    pub num_keep: usize,
    /// Weight of the contrastive term in the score.
    pub gamma: f64,
    /// Average wrong-candidate probabilities geometrically instead of
    /// arithmetically.
    pub geometric_mean: bool,
    /// Keep the top-scored chains outright instead of sampling.
    pub greedy: bool,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            num_candidates: 5,
            num_keep: 1,
            gamma: 0.5,
            geometric_mean: false,
            greedy: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("item {id} has no gold answer to score against")]
    NoGold { id: String },
}

fn slot_map(pairs: &[(&str, &str)]) -> std::collections::BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Demonstration blocks followed by the query block, double-newline joined.
pub fn build_cot_prompt(
    registry: &PromptRegistry,
    demos: &[DemoBlock],
    query: &AugmentedQuery,
) -> Result<String, PromptError> {
    let mut blocks = Vec::with_capacity(demos.len() + 1);
    for demo in demos {
        blocks.push(registry.render(
            "cot_demo",
            &slot_map(&[
                ("timeline", &demo.timeline),
                ("question", &demo.question),
                ("knowledge", &demo.knowledge),
                ("cot", &demo.cot),
            ]),
        )?);
    }
    blocks.push(registry.render(
        "cot_query",
        &slot_map(&[
            ("timeline", &query.timeline),
            ("question", &query.question),
            ("knowledge", &query.knowledge),
        ]),
    )?);
    Ok(blocks.join("\n\n"))
}

/// Generate `k` candidate chains, one per derived seed, each carrying its
/// parsed final answer.
pub fn generate_cot_candidates(
    backend: &dyn Backend,
    prompt: &str,
    k: usize,
    base_seed: u64,
) -> Result<Vec<CoTCandidate>, BackendError> {
    (0..k)
        .map(|i| {
            let text = backend.generate(prompt, &GenParams::with_seed(base_seed + i as u64))?;
            Ok(CoTCandidate::from_text(text))
        })
        .collect()
}

const ANSWER_MARKERS: [&str; 2] = ["the answer is", "answer:"];

/// Extract the final answer: the text after the last (case-insensitive)
/// answer marker, with trailing sentence punctuation stripped.  Absence is
/// signaled by `None`, which forces rejection downstream.
pub fn parse_final_answer(text: &str) -> Option<String> {
    let lower = text.to_lowercase();
    let mut best: Option<usize> = None;
    for marker in ANSWER_MARKERS {
        let mut from = 0;
        while let Some(pos) = lower[from..].find(marker) {
            let start = from + pos;
            let tail_at = start + marker.len();
            best = Some(best.map_or(tail_at, |b: usize| b.max(tail_at)));
            from = start + marker.len();
        }
    }
    let tail = &text[best?..];
    let answer = tail
        .trim()
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .trim_end();
    if answer.is_empty() { None } else { Some(answer.to_string()) }
}

/// Mark candidates whose parsed answer matches a gold under answer
/// normalization; returns the indices of the accepted ones.
pub fn filter_correct(cands: &mut [CoTCandidate], golds: &[String]) -> Vec<usize> {
    let mut accepted = Vec::new();
    for (i, cand) in cands.iter_mut().enumerate() {
        cand.accepted = cand
            .parsed_answer
            .as_deref()
            .is_some_and(|ans| golds.iter().any(|g| crate::metrics::exact_match(ans, g)));
        if cand.accepted {
            accepted.push(i);
        }
    }
    accepted
}

/// Length-normalized sequence log-probability: the mean per-token log-prob
/// of `continuation` forced after `context`.  Empty continuations score 0.
pub fn sequence_log_prob(
    backend: &dyn Backend,
    context: &str,
    continuation: &str,
) -> Result<f64, BackendError> {
    let scores = backend.score_continuation(context, continuation)?;
    if scores.is_empty() {
        return Ok(0.0);
    }
    Ok(scores.iter().map(|s| s.logprob).sum::<f64>() / scores.len() as f64)
}

/// Contrastive term: `ln(P(gold) / mean P(wrong))`, with the mean taken
/// arithmetically by default or geometrically when asked.  No wrong
/// candidates means no contrast: 0.
pub fn plausibility_growth(log_p_gold: f64, wrong_log_ps: &[f64], geometric: bool) -> f64 {
    if wrong_log_ps.is_empty() {
        return 0.0;
    }
    let n = wrong_log_ps.len() as f64;
    let log_mean_wrong = if geometric {
        wrong_log_ps.iter().sum::<f64>() / n
    } else {
        (wrong_log_ps.iter().map(|lp| lp.exp()).sum::<f64>() / n).ln()
    };
    log_p_gold - log_mean_wrong
}

/// Numerically stable softmax; an empty input stays empty.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// The forced-answer scoring context for a chain.
fn scoring_context(query_prompt: &str, cot: &str) -> String {
    format!("{query_prompt}\n\n{cot}\n\nThe answer is ")
}

/// Score each accepted chain against the gold and the wrong candidates,
/// then distribute sampling probability by softmax over accepted scores.
/// Rejected candidates are left untouched (zero scores, zero probability).
pub fn score_candidates(
    backend: &dyn Backend,
    query_prompt: &str,
    cands: &mut [CoTCandidate],
    gold: &str,
    wrong_answers: &[String],
    config: &BootstrapConfig,
) -> Result<(), BackendError> {
    let mut accepted = Vec::new();
    for (i, cand) in cands.iter_mut().enumerate() {
        if !cand.accepted {
            continue;
        }
        let context = scoring_context(query_prompt, &cand.text);
        let log_p_gold = sequence_log_prob(backend, &context, gold)?;
        let wrong_log_ps = wrong_answers
            .iter()
            .map(|w| sequence_log_prob(backend, &context, w))
            .collect::<Result<Vec<f64>, _>>()?;
        cand.log_p_correct = log_p_gold;
        cand.plausibility_growth =
            plausibility_growth(log_p_gold, &wrong_log_ps, config.geometric_mean);
        cand.score = log_p_gold + config.gamma * cand.plausibility_growth;
        accepted.push(i);
    }
    let probs = softmax(&accepted.iter().map(|&i| cands[i].score).collect::<Vec<f64>>());
    for (&i, prob) in accepted.iter().zip(probs) {
        cands[i].sample_prob = prob;
    }
    Ok(())
}

/// Choose which accepted candidates to keep: weighted draws without
/// replacement, or the top scores when greedy.  Returns indices into
/// `cands`; rejected candidates are never chosen.
pub fn sample_cots(
    cands: &[CoTCandidate],
    config: &BootstrapConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let accepted: Vec<usize> =
        (0..cands.len()).filter(|&i| cands[i].accepted).collect();
    let take = config.num_keep.min(accepted.len());
    if config.greedy {
        let mut order = accepted;
        order.sort_by(|&a, &b| {
            cands[b].score.partial_cmp(&cands[a].score).unwrap().then(a.cmp(&b))
        });
        order.truncate(take);
        return order;
    }
    let mut remaining = accepted;
    let mut kept = Vec::with_capacity(take);
    for _ in 0..take {
        let total: f64 = remaining.iter().map(|&i| cands[i].sample_prob).sum();
        if total <= 0.0 {
            kept.push(remaining.remove(0));
            continue;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut picked = remaining.len() - 1;
        for (slot, &idx) in remaining.iter().enumerate() {
            target -= cands[idx].sample_prob;
            if target <= 0.0 {
                picked = slot;
                break;
            }
        }
        kept.push(remaining.remove(picked));
    }
    kept
}

/// Outcome counters for one bootstrapped item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub generated: usize,
    pub correct: usize,
    pub kept: usize,
}

/// Run the full loop for one item: prompt, generate, reject, score, sample.
/// Kept chains land in `item.cots`; the best sampled chain also becomes
/// `item.cot`.
pub fn bootstrap_item(
    backend: &dyn Backend,
    registry: &PromptRegistry,
    demos: &[DemoBlock],
    query: &AugmentedQuery,
    item: &mut QAItem,
    config: &BootstrapConfig,
) -> Result<BootstrapOutcome, BootstrapError> {
    let gold = item
        .golds
        .first()
        .cloned()
        .ok_or_else(|| BootstrapError::NoGold { id: item.id.clone() })?;
    let prompt = build_cot_prompt(registry, demos, query)?;
    let base_seed = mix_seed(config.seed, &item.id);
    let mut cands = generate_cot_candidates(backend, &prompt, config.num_candidates, base_seed)?;
    let accepted = filter_correct(&mut cands, &item.golds);
    let wrong_answers: Vec<String> = item
        .candidates
        .iter()
        .filter(|c| !item.golds.contains(c))
        .cloned()
        .collect();
    score_candidates(backend, &prompt, &mut cands, &gold, &wrong_answers, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let kept = sample_cots(&cands, config, &mut rng);
    item.cots = kept.iter().map(|&i| cands[i].clone()).collect();
    item.cot = item.cots.first().map(|c| c.text.clone());
    Ok(BootstrapOutcome {
        generated: cands.len(),
        correct: accepted.len(),
        kept: item.cots.len(),
    })
}
