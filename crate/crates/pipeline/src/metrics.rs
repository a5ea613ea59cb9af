//! Answer-level evaluation: normalized exact match, bag-of-tokens F1,
//! perplexity-based choice, and per-category aggregation.
//!
//! Normalization follows the extractive-QA convention: lowercase, delete
//! ASCII punctuation, drop the articles a/an/the, and collapse whitespace.
//! Both headline metrics take the maximum over the gold set, so any gold
//! phrasing counts.  Aggregation reports per-category means plus a
//! sample-weighted micro average and an unweighted macro average; the macro
//! average is the headline number because it offsets category imbalance.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use tgkit_backend::{Backend, BackendError};

/// Lowercase, strip ASCII punctuation, drop articles, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Equality under [`normalize_answer`].
pub fn exact_match(prediction: &str, gold: &str) -> bool {
    normalize_answer(prediction) == normalize_answer(gold)
}

/// 1.0 when the prediction matches any gold exactly, else 0.0.
pub fn exact_match_score(prediction: &str, golds: &[String]) -> f64 {
    golds.iter().any(|g| exact_match(prediction, g)) as u8 as f64
}

fn token_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for token in normalize_answer(text).split_whitespace() {
        *counts.entry(token.to_string()).or_insert(0) += 1;
    }
    counts
}

/// Bag-of-tokens F1 between one prediction and one gold, with multiplicity.
/// Two empty bags agree perfectly; one empty bag scores zero.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let pred = token_counts(prediction);
    let gold = token_counts(gold);
    let pred_total: usize = pred.values().sum();
    let gold_total: usize = gold.values().sum();
    if pred_total == 0 && gold_total == 0 {
        return 1.0;
    }
    if pred_total == 0 || gold_total == 0 {
        return 0.0;
    }
    let overlap: usize = pred
        .iter()
        .filter_map(|(token, &count)| gold.get(token).map(|&g| count.min(g)))
        .sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred_total as f64;
    let recall = overlap as f64 / gold_total as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Maximum token F1 over the gold set.
pub fn token_f1_score(prediction: &str, golds: &[String]) -> f64 {
    golds.iter().map(|g| token_f1(prediction, g)).fold(0.0, f64::max)
}

/// Index of the highest score; ties resolve to the earlier candidate.
pub fn choose_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &score) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if score <= b => {}
            _ => best = Some((i, score)),
        }
    }
    best.map(|(i, _)| i)
}

/// Choose among candidates by forced-continuation likelihood: each
/// candidate is scored as a continuation of `prompt` and the one with the
/// highest length-normalized sequence log-probability (the lowest
/// perplexity) wins.  Normalizing by token count keeps short and long
/// candidates comparable.
pub fn perplexity_choice(
    backend: &dyn Backend,
    prompt: &str,
    candidates: &[String],
) -> Result<Option<usize>, BackendError> {
    let scores = candidates
        .iter()
        .map(|c| {
            let tokens = backend.score_continuation(prompt, c)?;
            let total: f64 = tokens.iter().map(|t| t.logprob).sum();
            Ok(total / tokens.len().max(1) as f64)
        })
        .collect::<Result<Vec<f64>, BackendError>>()?;
    Ok(choose_best(&scores))
}

/// 1.0 when the perplexity-chosen candidate is a gold answer, else 0.0.
pub fn perplexity_accuracy(
    backend: &dyn Backend,
    prompt: &str,
    candidates: &[String],
    golds: &[String],
) -> Result<f64, BackendError> {
    match perplexity_choice(backend, prompt, candidates)? {
        Some(idx) => Ok(exact_match_score(&candidates[idx], golds)),
        None => Ok(0.0),
    }
}

/// Mean scores over one category (or one whole split).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub n: usize,
    pub em: f64,
    pub f1: f64,
    /// Perplexity-based accuracy; 0.0 when no backend scored the items.
    #[serde(default)]
    pub acc: f64,
}

/// Aggregated evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub categories: BTreeMap<String, CategoryScore>,
    /// Sample-weighted mean over every item.
    pub micro: CategoryScore,
    /// Unweighted mean over the per-category means.
    #[serde(rename = "macro")]
    pub macro_avg: CategoryScore,
}

/// One scored item: its category plus exact-match, F1, and accuracy values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub category: String,
    pub em: f64,
    pub f1: f64,
    #[serde(default)]
    pub acc: f64,
}

/// Fold per-item scores into category, micro, and macro summaries.
pub fn aggregate_report(items: &[ScoredItem]) -> EvalReport {
    let mut sums: BTreeMap<String, (usize, f64, f64, f64)> = BTreeMap::new();
    for item in items {
        let entry = sums.entry(item.category.clone()).or_insert((0, 0.0, 0.0, 0.0));
        entry.0 += 1;
        entry.1 += item.em;
        entry.2 += item.f1;
        entry.3 += item.acc;
    }
    let categories: BTreeMap<String, CategoryScore> = sums
        .into_iter()
        .map(|(name, (n, em, f1, acc))| {
            let d = n as f64;
            (name, CategoryScore { n, em: em / d, f1: f1 / d, acc: acc / d })
        })
        .collect();
    let total = items.len();
    let mean = |get: fn(&ScoredItem) -> f64| {
        if total == 0 { 0.0 } else { items.iter().map(get).sum::<f64>() / total as f64 }
    };
    let micro = CategoryScore {
        n: total,
        em: mean(|i| i.em),
        f1: mean(|i| i.f1),
        acc: mean(|i| i.acc),
    };
    let k = categories.len();
    let cat_mean = |get: fn(&CategoryScore) -> f64| {
        if k == 0 { 0.0 } else { categories.values().map(get).sum::<f64>() / k as f64 }
    };
    let macro_avg = CategoryScore {
        n: total,
        em: cat_mean(|c| c.em),
        f1: cat_mean(|c| c.f1),
        acc: cat_mean(|c| c.acc),
    };
    EvalReport { categories, micro, macro_avg }
}
