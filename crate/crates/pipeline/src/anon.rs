//! Entity anonymization: map real names to same-typed replacements drawn
//! from a bundled pool.
//!
//! Pretrained models have seen the source knowledge graph, so leaving real
//! names in place lets a model answer from memory instead of from the
//! story.  Replacing every entity with a random name of the same type —
//! globally, injectively, and never with a name that exists in the source
//! KG — removes that shortcut while keeping graphs structurally identical.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use tgkit_core::{EventKey, TemporalFact, TemporalGraph, sort_chronological};
use thiserror::Error;

/// An injective original → replacement mapping with type tags.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityMap {
    pub mapping: BTreeMap<String, String>,
    pub entity_type: BTreeMap<String, String>,
}

impl EntityMap {
    /// Build directly from pairs; callers own injectivity.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        EntityMap {
            mapping: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            entity_type: BTreeMap::new(),
        }
    }

    pub fn replacement(&self, original: &str) -> Option<&str> {
        self.mapping.get(original).map(String::as_str)
    }

    /// Swap mapping direction; only valid on injective maps.
    pub fn inverse(&self) -> EntityMap {
        EntityMap {
            mapping: self.mapping.iter().map(|(k, v)| (v.clone(), k.clone())).collect(),
            entity_type: self
                .entity_type
                .iter()
                .filter_map(|(name, ty)| {
                    self.mapping.get(name).map(|repl| (repl.clone(), ty.clone()))
                })
                .collect(),
        }
    }

    pub fn is_injective(&self) -> bool {
        let replacements: BTreeSet<&String> = self.mapping.values().collect();
        replacements.len() == self.mapping.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnonError {
    #[error("no unused replacement names left for type {entity_type:?}")]
    PoolExhausted { entity_type: String },
    #[error("entity {name:?} has no replacement in the map")]
    UnmappedEntity { name: String },
    #[error("name pool line {line}: expected `type<TAB>name`")]
    MalformedPoolLine { line: usize },
}

/// Parse a `type<TAB>name` pool; `#` lines and blanks are comments.
pub fn parse_name_pool(text: &str) -> Result<BTreeMap<String, Vec<String>>, AnonError> {
    let mut pool: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (ty, name) = line
            .split_once('\t')
            .ok_or(AnonError::MalformedPoolLine { line: i + 1 })?;
        if ty.trim().is_empty() || name.trim().is_empty() {
            return Err(AnonError::MalformedPoolLine { line: i + 1 });
        }
        pool.entry(ty.trim().to_string()).or_default().push(name.trim().to_string());
    }
    Ok(pool)
}

pub fn load_name_pool(path: &Path) -> Result<BTreeMap<String, Vec<String>>, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    parse_name_pool(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

/// Draw a type-respecting injective mapping for `entities`, deterministic
/// under `seed`.  Names listed in `forbidden` (the source KG vocabulary)
/// are never used.
pub fn build_entity_map(
    entities: &[(String, String)],
    pool: &BTreeMap<String, Vec<String>>,
    forbidden: &BTreeSet<String>,
    seed: u64,
) -> Result<EntityMap, AnonError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Shuffle each type's candidates once, then deal them out in entity
    // order; iterating types in sorted order keeps this deterministic.
    let mut shuffled: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (ty, names) in pool {
        let mut candidates: Vec<&str> = names
            .iter()
            .map(String::as_str)
            .filter(|n| !forbidden.contains(*n))
            .collect();
        candidates.shuffle(&mut rng);
        shuffled.insert(ty.as_str(), candidates);
    }
    let mut map = EntityMap::default();
    for (name, ty) in entities {
        if map.mapping.contains_key(name) {
            continue;
        }
        let candidates = shuffled
            .get_mut(ty.as_str())
            .ok_or_else(|| AnonError::PoolExhausted { entity_type: ty.clone() })?;
        let replacement = candidates
            .pop()
            .ok_or_else(|| AnonError::PoolExhausted { entity_type: ty.clone() })?;
        map.mapping.insert(name.clone(), replacement.to_string());
        map.entity_type.insert(name.clone(), ty.clone());
    }
    debug_assert!(map.is_injective());
    Ok(map)
}

/// All distinct subjects and objects, in first appearance order.
pub fn graph_entities(graph: &TemporalGraph) -> Vec<String> {
    let mut entities = Vec::new();
    for key in graph.event_keys() {
        for name in [&key.subject, &key.object] {
            if !entities.contains(name) {
                entities.push(name.clone());
            }
        }
    }
    entities
}

/// Replace every subject and object through the map; relations, times, and
/// chronological structure are untouched.
pub fn anonymize_graph(graph: &TemporalGraph, map: &EntityMap) -> Result<TemporalGraph, AnonError> {
    let remap = |name: &str| -> Result<String, AnonError> {
        map.replacement(name)
            .map(str::to_string)
            .ok_or_else(|| AnonError::UnmappedEntity { name: name.to_string() })
    };
    let facts = graph
        .facts()
        .iter()
        .map(|fact| {
            Ok(TemporalFact::new(
                EventKey {
                    subject: remap(&fact.key.subject)?,
                    relation: fact.key.relation.clone(),
                    object: remap(&fact.key.object)?,
                },
                fact.endpoint,
                fact.time,
            ))
        })
        .collect::<Result<Vec<TemporalFact>, AnonError>>()?;
    Ok(sort_chronological(facts).expect("renaming preserves graph validity"))
}
