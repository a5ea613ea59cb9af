//! Dataset pipeline for temporal-graph question answering.
//!
//! The crate turns a temporal knowledge graph into a QA dataset and back
//! again: subgraph extraction and event-disjoint splitting ([`kg`],
//! [`split`]), entity anonymization ([`anon`]), template-based question
//! generation with a symbolic answer oracle ([`qa`]), in-context arithmetic
//! knowledge ([`knowledge`]), answer-preserving graph augmentation
//! ([`augment`]), chain-of-thought bootstrapping ([`bootstrap`]), story
//! generation and alignment QC ([`story`]), text-to-graph extraction
//! ([`text2tg`]), evaluation metrics ([`metrics`]), JSONL persistence
//! ([`dataset`]), and stage orchestration ([`run`]).
//!
//! Every stage is deterministic under its seed: randomness flows through
//! seeded ChaCha8 generators keyed by stable identifiers, so repeated runs
//! produce byte-identical artifacts.

pub mod anon;
pub mod augment;
pub mod bootstrap;
pub mod dataset;
pub mod kg;
pub mod knowledge;
pub mod metrics;
pub mod qa;
pub mod run;
pub mod split;
pub mod story;
pub mod text2tg;

use tgkit_backend::fnv1a64;

/// Derive a sub-seed from a base seed and a stable textual tag, so distinct
/// pipeline pieces (per question type, per sample, per stage) draw from
/// independent deterministic streams.
pub fn mix_seed(seed: u64, tag: &str) -> u64 {
    let mut bytes = Vec::with_capacity(tag.len() + 8);
    bytes.extend_from_slice(tag.as_bytes());
    bytes.extend_from_slice(&seed.to_le_bytes());
    fnv1a64(&bytes)
}
