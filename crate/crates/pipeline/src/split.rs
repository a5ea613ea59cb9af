//! Event-disjoint train/validation/test splitting.
//!
//! The hard constraint: no event key may appear in more than one split,
//! because an event seen in training would leak its answer into test.  The
//! soft goal: split sizes follow the requested ratios.  A seeded shuffle
//! fixes the assignment order, targets come from the largest-remainder
//! method, and each graph goes to the split with the largest remaining
//! deficit — unless key sharing forces it into a specific split, or into
//! two at once, in which case it is dropped and reported.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::borrow::Borrow;
use std::collections::BTreeSet;
use tgkit_core::{EventKey, TemporalGraph};
use thiserror::Error;

/// Ratios and seed for one split run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// (train, val, test) fractions; must lie in [0,1] and sum to 1.
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { ratios: (0.8, 0.1, 0.1), seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SplitError> {
        let (a, b, c) = self.ratios;
        let in_range = |r: f64| (0.0..=1.0).contains(&r);
        if !(in_range(a) && in_range(b) && in_range(c)) {
            return Err(SplitError::InvalidSpec {
                reason: format!("ratios {:?} must each lie in [0,1]", self.ratios),
            });
        }
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(SplitError::InvalidSpec {
                reason: format!("ratios {:?} must sum to 1", self.ratios),
            });
        }
        Ok(())
    }
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Index-based result: positions into the input graph list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    /// Graphs sharing keys with two or more splits; excluded entirely.
    pub dropped: Vec<usize>,
}

impl SplitAssignment {
    pub fn of(&self, split: usize) -> &[usize] {
        match split {
            0 => &self.train,
            1 => &self.val,
            _ => &self.test,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("invalid split spec: {reason}")]
    InvalidSpec { reason: String },
    #[error("event sharing forces every graph into one split; the requested ratios are unsatisfiable")]
    UnsatisfiableSplit,
}

/// Largest-remainder apportionment of `n` graphs over the three ratios;
/// ties go to the earlier split.
fn targets(n: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let raw = [ratios.0 * n as f64, ratios.1 * n as f64, ratios.2 * n as f64];
    let mut base = [raw[0] as usize, raw[1] as usize, raw[2] as usize];
    let mut leftover = n - base.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (raw[a] - base[a] as f64, raw[b] - base[b] as f64);
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        base[i] += 1;
        leftover -= 1;
    }
    base
}

/// Assign graphs to event-disjoint splits.
///
/// Deterministic under the spec seed.  Returns an error when the ratios are
/// malformed, or when key sharing collapses a genuinely multi-way request
/// into a single split.
pub fn split_dataset<G: Borrow<TemporalGraph>>(
    graphs: &[G],
    spec: &SplitSpec,
) -> Result<SplitAssignment, SplitError> {
    spec.validate()?;
    let targets = targets(graphs.len(), spec.ratios);

    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let mut split_keys: [BTreeSet<EventKey>; 3] = Default::default();
    let mut assigned: [Vec<usize>; 3] = Default::default();
    let mut dropped = Vec::new();
    let mut any_forced = false;

    for &idx in &order {
        let keys: Vec<EventKey> = graphs[idx].borrow().event_keys();
        let touching: Vec<usize> = (0..3)
            .filter(|&s| keys.iter().any(|k| split_keys[s].contains(k)))
            .collect();
        let target_split = match touching.len() {
            0 => {
                // Largest remaining deficit; ties to the earlier split.
                (0..3)
                    .max_by(|&a, &b| {
                        let da = targets[a] as isize - assigned[a].len() as isize;
                        let db = targets[b] as isize - assigned[b].len() as isize;
                        da.cmp(&db).then(b.cmp(&a))
                    })
                    .expect("three splits")
            }
            1 => {
                any_forced = true;
                touching[0]
            }
            _ => {
                dropped.push(idx);
                continue;
            }
        };
        split_keys[target_split].extend(keys);
        assigned[target_split].push(idx);
    }

    let populated = assigned.iter().filter(|a| !a.is_empty()).count();
    let wanted = targets.iter().filter(|&&t| t > 0).count();
    let total_assigned: usize = assigned.iter().map(Vec::len).sum();
    if any_forced && populated == 1 && wanted >= 2 && total_assigned >= 2 {
        return Err(SplitError::UnsatisfiableSplit);
    }

    let [mut train, mut val, mut test] = assigned;
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    dropped.sort_unstable();
    Ok(SplitAssignment { train, val, test, dropped })
}
