//! Pipeline driver: one config, ten stages, a fixed artifact layout, and
//! a run manifest.
//!
//! Stages run in a fixed dependency order.  Each stage reads the artifacts
//! of the nearest earlier stage that has produced output, transforms the
//! samples, and writes its own artifacts under `out/<stage>/`; running the
//! same stages twice over the same config yields byte-identical files.
//! Sample-level work inside backend-bound stages runs concurrently up to
//! the backend's in-flight bound, with results kept in input order.
//!
//! Artifact layout under the output directory:
//!
//! ```text
//! ingest/graphs.jsonl            extracted subgraphs, one sample per line
//! <stage>/{train,val,test}.jsonl every stage from split onward
//! verify/queue.jsonl             pending alignment flags for human review
//! evaluate/report.json           per-category and aggregate metrics
//! manifest.json                  config hash, seed, per-stage counts
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tgkit_backend::{
    fnv1a64, Backend, BackendError, BackendKind, BackendSpec, GenParams, PromptError,
    PromptRegistry,
};
use tgkit_core::render_timeline;

use crate::anon::{build_entity_map, load_name_pool, AnonError};
use crate::augment::{augment_batch, load_synonyms, remap_entities_and_times, AugmentConfig,
    AugmentError};
use crate::bootstrap::{bootstrap_item, build_cot_prompt, AugmentedQuery, BootstrapConfig,
    BootstrapError, DemoBlock};
use crate::dataset::{atomic_write, read_dataset, write_dataset, DatasetError, DatasetSample};
use crate::kg::{load_kg_file, plan_subgraphs, KgError};
use crate::knowledge::{derive_for_item, render_knowledge, KnowledgeError, KnowledgeScope};
use crate::metrics::{aggregate_report, exact_match_score, perplexity_choice, token_f1_score,
    ScoredItem};
use crate::mix_seed;
use crate::qa::generate_qas;
use crate::split::{split_dataset, SplitError, SplitSpec};
use crate::story::{emit_review_queue, generate_story, probe_alignment, ReviewError, StoryError};
use crate::text2tg::run_bounded;

/// Everything one run needs: input paths, stage parameters, and the
/// backend.  All fields have defaults so a config file may set only what
/// it cares about.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Tab-separated temporal knowledge graph; required by the ingest
    /// stage.
    pub kg_path: Option<PathBuf>,
    /// `type<TAB>name` replacement pool; required by the anonymize stage.
    pub name_pool_path: Option<PathBuf>,
    /// JSON array of chain-of-thought demonstration blocks for
    /// bootstrapping.
    pub demos_path: Option<PathBuf>,
    /// `relation<TAB>synonym` lines for the augment stage.
    pub synonyms_path: Option<PathBuf>,
    /// Root of the artifact tree.
    pub out_dir: PathBuf,
    /// Root seed; stage seeds are derived from it unless set explicitly.
    pub seed: u64,
    /// Neighborhood radius for subgraph extraction.
    pub max_hops: usize,
    /// Event cap per extracted subgraph.
    pub max_events: usize,
    /// Cap on the number of extracted subgraphs.
    pub max_samples: Option<usize>,
    pub split: SplitSpec,
    pub qa: crate::qa::QaConfig,
    pub knowledge_scope: KnowledgeScope,
    pub augment: AugmentConfig,
    pub bootstrap: BootstrapConfig,
    pub backend: BackendSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kg_path: None,
            name_pool_path: None,
            demos_path: None,
            synonyms_path: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            max_hops: 2,
            max_events: 12,
            max_samples: None,
            split: SplitSpec::default(),
            qa: crate::qa::QaConfig::default(),
            knowledge_scope: KnowledgeScope::default(),
            augment: AugmentConfig::default(),
            bootstrap: BootstrapConfig::default(),
            backend: BackendSpec::default(),
        }
    }
}

impl PipelineConfig {
    /// Reject configs whose referenced files do not exist or whose stage
    /// parameters are internally inconsistent.
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (label, path) in [
            ("kg_path", &self.kg_path),
            ("name_pool_path", &self.name_pool_path),
            ("demos_path", &self.demos_path),
            ("synonyms_path", &self.synonyms_path),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(PipelineError::ConfigInvalid {
                        reason: format!("{label} {p:?} is not a readable file"),
                    });
                }
            }
        }
        if self.max_hops < 1 || self.max_events < 1 {
            return Err(PipelineError::ConfigInvalid {
                reason: "max_hops and max_events must be at least 1".to_string(),
            });
        }
        self.split.validate()?;
        self.augment.validate()?;
        Ok(())
    }

    /// Re-key every stage from one root seed.  Used by the global seed
    /// override: each stage draws from an independent stream derived from
    /// the root, so overriding the root re-seeds the whole run coherently.
    pub fn apply_global_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = mix_seed(seed, "split");
        self.qa.seed = mix_seed(seed, "qa");
        self.augment.seed = mix_seed(seed, "augment");
        self.bootstrap.seed = mix_seed(seed, "bootstrap");
        self.backend.mock_seed = mix_seed(seed, "backend");
    }
}

/// The pipeline stages, in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Split,
    Anonymize,
    Story,
    Qa,
    Knowledge,
    Augment,
    Bootstrap,
    Verify,
    Evaluate,
}

/// Every stage, in execution order.
pub const STAGE_ORDER: [Stage; 10] = [
    Stage::Ingest,
    Stage::Split,
    Stage::Anonymize,
    Stage::Story,
    Stage::Qa,
    Stage::Knowledge,
    Stage::Augment,
    Stage::Bootstrap,
    Stage::Verify,
    Stage::Evaluate,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Split => "split",
            Stage::Anonymize => "anonymize",
            Stage::Story => "story",
            Stage::Qa => "qa",
            Stage::Knowledge => "knowledge",
            Stage::Augment => "augment",
            Stage::Bootstrap => "bootstrap",
            Stage::Verify => "verify",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        match name {
            "ingest" => Some(Stage::Ingest),
            "split" => Some(Stage::Split),
            "anonymize" => Some(Stage::Anonymize),
            "story" | "gen-story" => Some(Stage::Story),
            "qa" | "gen-qa" => Some(Stage::Qa),
            "knowledge" => Some(Stage::Knowledge),
            "augment" => Some(Stage::Augment),
            "bootstrap" => Some(Stage::Bootstrap),
            "verify" => Some(Stage::Verify),
            "evaluate" => Some(Stage::Evaluate),
            _ => None,
        }
    }

    /// Stages that talk to the language-model backend; the backend is
    /// only built (and its configuration only enforced) for these.
    pub fn needs_backend(self) -> bool {
        matches!(self, Stage::Story | Stage::Bootstrap | Stage::Verify | Stage::Evaluate)
    }

    fn index(self) -> usize {
        STAGE_ORDER.iter().position(|s| *s == self).expect("stage is in the order table")
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {reason}")]
    ConfigInvalid { reason: String },
    #[error("stage {stage} has no input: {path:?} is missing (run an earlier stage first)")]
    StageInputMissing { stage: &'static str, path: PathBuf },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{reason}")]
    Data { reason: String },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 backend, 4 data/input.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::ConfigInvalid { .. } => 2,
            PipelineError::Backend(_) => 3,
            PipelineError::StageInputMissing { .. } | PipelineError::Data { .. } => 4,
        }
    }

    fn data(err: impl std::fmt::Display) -> Self {
        PipelineError::Data { reason: err.to_string() }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(err: std::io::Error) -> Self {
        PipelineError::data(err)
    }
}

impl From<KgError> for PipelineError {
    fn from(err: KgError) -> Self {
        match err {
            KgError::InvalidBound { .. } => PipelineError::ConfigInvalid { reason: err.to_string() },
            other => PipelineError::data(other),
        }
    }
}

impl From<SplitError> for PipelineError {
    fn from(err: SplitError) -> Self {
        match err {
            SplitError::InvalidSpec { .. } => PipelineError::ConfigInvalid { reason: err.to_string() },
            SplitError::UnsatisfiableSplit => PipelineError::data(err),
        }
    }
}

impl From<AugmentError> for PipelineError {
    fn from(err: AugmentError) -> Self {
        match err {
            AugmentError::InvalidConfig { .. } => {
                PipelineError::ConfigInvalid { reason: err.to_string() }
            }
            other => PipelineError::data(other),
        }
    }
}

impl From<StoryError> for PipelineError {
    fn from(err: StoryError) -> Self {
        match err {
            StoryError::Backend(e) => PipelineError::Backend(e),
            other => PipelineError::data(other),
        }
    }
}

impl From<BootstrapError> for PipelineError {
    fn from(err: BootstrapError) -> Self {
        match err {
            BootstrapError::Backend(e) => PipelineError::Backend(e),
            other => PipelineError::data(other),
        }
    }
}

impl From<AnonError> for PipelineError {
    fn from(err: AnonError) -> Self {
        PipelineError::data(err)
    }
}

impl From<KnowledgeError> for PipelineError {
    fn from(err: KnowledgeError) -> Self {
        PipelineError::data(err)
    }
}

impl From<DatasetError> for PipelineError {
    fn from(err: DatasetError) -> Self {
        PipelineError::data(err)
    }
}

impl From<PromptError> for PipelineError {
    fn from(err: PromptError) -> Self {
        PipelineError::data(err)
    }
}

impl From<ReviewError> for PipelineError {
    fn from(err: ReviewError) -> Self {
        PipelineError::data(err)
    }
}

const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

fn stage_dir(config: &PipelineConfig, stage: Stage) -> PathBuf {
    config.out_dir.join(stage.name())
}

fn graphs_path(config: &PipelineConfig) -> PathBuf {
    stage_dir(config, Stage::Ingest).join("graphs.jsonl")
}

fn split_paths(config: &PipelineConfig, stage: Stage) -> [PathBuf; 3] {
    let dir = stage_dir(config, stage);
    SPLIT_NAMES.map(|name| dir.join(format!("{name}.jsonl")))
}

fn read_splits(config: &PipelineConfig, stage: Stage) -> Result<[Vec<DatasetSample>; 3], PipelineError> {
    let [train, val, test] = split_paths(config, stage);
    Ok([read_dataset(&train)?, read_dataset(&val)?, read_dataset(&test)?])
}

fn write_splits(
    config: &PipelineConfig,
    stage: Stage,
    splits: &[Vec<DatasetSample>; 3],
) -> Result<usize, PipelineError> {
    for (path, samples) in split_paths(config, stage).iter().zip(splits) {
        write_dataset(path, samples)?;
    }
    Ok(splits.iter().map(Vec::len).sum())
}

/// Find the nearest stage before `stage` whose split artifacts exist on
/// disk, and load them.  Stages are free-standing: `qa` after `split`
/// works even when `anonymize` and `story` were never run.
fn resolve_split_input(
    config: &PipelineConfig,
    stage: Stage,
) -> Result<[Vec<DatasetSample>; 3], PipelineError> {
    for candidate in STAGE_ORDER[1..stage.index()].iter().rev() {
        if split_paths(config, *candidate).iter().all(|p| p.is_file()) {
            return read_splits(config, *candidate);
        }
    }
    let previous = STAGE_ORDER[stage.index() - 1];
    Err(PipelineError::StageInputMissing {
        stage: stage.name(),
        path: split_paths(config, previous)[0].clone(),
    })
}

fn build_backend(config: &PipelineConfig) -> Result<Box<dyn Backend>, PipelineError> {
    Ok(config.backend.build()?)
}

/// Map a fallible per-sample job over every sample of every split, with
/// bounded concurrency and input-order results.
fn map_samples<F>(
    splits: &[Vec<DatasetSample>; 3],
    max_in_flight: usize,
    f: F,
) -> Result<[Vec<DatasetSample>; 3], PipelineError>
where
    F: Fn(&DatasetSample) -> Result<DatasetSample, PipelineError> + Sync,
{
    let mut out: [Vec<DatasetSample>; 3] = Default::default();
    for (i, samples) in splits.iter().enumerate() {
        out[i] = run_bounded(samples, max_in_flight, &f)
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
    }
    Ok(out)
}

fn run_ingest(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let kg_path = config.kg_path.as_ref().ok_or_else(|| PipelineError::ConfigInvalid {
        reason: "ingest needs kg_path".to_string(),
    })?;
    let kg = load_kg_file(kg_path)?;
    let planned = plan_subgraphs(&kg, config.max_hops, config.max_events, config.max_samples)?;
    let samples: Vec<DatasetSample> = planned
        .into_iter()
        .map(|(seed_entity, graph)| {
            let mut sample = DatasetSample::new(seed_entity, graph);
            sample.provenance.seed = config.seed;
            sample
        })
        .collect();
    write_dataset(&graphs_path(config), &samples)?;
    Ok(samples.len())
}

fn run_split(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let path = graphs_path(config);
    if !path.is_file() {
        return Err(PipelineError::StageInputMissing { stage: Stage::Split.name(), path });
    }
    let samples = read_dataset(&path)?;
    let graphs: Vec<&tgkit_core::TemporalGraph> = samples.iter().map(|s| &s.graph).collect();
    let assignment = split_dataset(&graphs, &config.split)?;
    let mut splits: [Vec<DatasetSample>; 3] = Default::default();
    for (slot, (name, indices)) in SPLIT_NAMES
        .iter()
        .zip([&assignment.train, &assignment.val, &assignment.test])
        .enumerate()
    {
        for &i in indices {
            let mut sample = samples[i].clone();
            sample.provenance.split = Some(name.to_string());
            splits[slot].push(sample);
        }
    }
    write_splits(config, Stage::Split, &splits)
}

fn run_anonymize(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let kg_path = config.kg_path.as_ref().ok_or_else(|| PipelineError::ConfigInvalid {
        reason: "anonymize needs kg_path to recover entity types".to_string(),
    })?;
    let pool_path = config.name_pool_path.as_ref().ok_or_else(|| {
        PipelineError::ConfigInvalid { reason: "anonymize needs name_pool_path".to_string() }
    })?;
    let splits = resolve_split_input(config, Stage::Anonymize)?;
    let kg = load_kg_file(kg_path)?;
    let pool = load_name_pool(pool_path)?;
    let entities: Vec<(String, String)> = kg.entity_types().into_iter().collect();
    let forbidden: BTreeSet<String> = kg.display_vocabulary();
    let map = build_entity_map(&entities, &pool, &forbidden, mix_seed(config.seed, "anonymize"))?;
    let out = map_samples(&splits, 1, |sample| {
        Ok(remap_entities_and_times(sample, Some(&map), 0)?)
    })?;
    write_splits(config, Stage::Anonymize, &out)
}

fn run_story(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Story)?;
    let backend = build_backend(config)?;
    let registry = PromptRegistry::builtin();
    let out = map_samples(&splits, config.backend.max_inflight, |sample| {
        let params = GenParams::with_seed(mix_seed(config.seed, &sample.id));
        let story = generate_story(backend.as_ref(), &registry, &sample.graph, &params)?;
        let mut sample = sample.clone();
        sample.story = Some(story);
        Ok(sample)
    })?;
    write_splits(config, Stage::Story, &out)
}

fn run_qa(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Qa)?;
    let out = map_samples(&splits, 1, |sample| {
        let mut qa_config = config.qa.clone();
        qa_config.seed = mix_seed(config.qa.seed, &sample.id);
        let mut sample = sample.clone();
        sample.qas = generate_qas(&sample.graph, &qa_config);
        Ok(sample)
    })?;
    write_splits(config, Stage::Qa, &out)
}

fn run_knowledge(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Knowledge)?;
    let out = map_samples(&splits, 1, |sample| {
        let mut sample = sample.clone();
        for item in &mut sample.qas {
            item.knowledge = Some(derive_for_item(&sample.graph, item, config.knowledge_scope)?);
        }
        Ok(sample)
    })?;
    write_splits(config, Stage::Knowledge, &out)
}

fn run_augment(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let mut splits = resolve_split_input(config, Stage::Augment)?;
    let mut augment_config = config.augment.clone();
    if augment_config.synonyms.is_none() {
        if let Some(path) = &config.synonyms_path {
            augment_config.synonyms = Some(load_synonyms(path)?);
        }
    }
    let active = augment_config.drop_irrelevant
        || augment_config.synonyms.is_some()
        || augment_config.entity_map.is_some()
        || augment_config.time_offset.is_some()
        || augment_config.random_offset;
    if active {
        // Augmented copies extend the training split; validation and test
        // stay untouched so evaluation only ever sees original samples.
        let mut augmented = augment_batch(&splits[0], &augment_config)?;
        for sample in &mut augmented {
            sample.id = format!("{}-aug", sample.id);
        }
        splits[0].extend(augmented);
    }
    write_splits(config, Stage::Augment, &splits)
}

fn run_bootstrap(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Bootstrap)?;
    let backend = build_backend(config)?;
    let registry = PromptRegistry::builtin();
    let demos: Vec<DemoBlock> = match &config.demos_path {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(PipelineError::data)?,
        None => Vec::new(),
    };
    let [train, val, test] = splits;
    // Only training items get reasoning chains; they are the fine-tuning
    // corpus the chains exist for.
    let bootstrapped = run_bounded(&train, config.backend.max_inflight, |sample| {
        let mut sample = sample.clone();
        let timeline = render_timeline(&sample.graph);
        for item in &mut sample.qas {
            let query = AugmentedQuery {
                timeline: timeline.clone(),
                question: item.question.clone(),
                knowledge: item.knowledge.as_ref().map(render_knowledge).unwrap_or_default(),
            };
            bootstrap_item(
                backend.as_ref(),
                &registry,
                &demos,
                &query,
                item,
                &config.bootstrap,
            )?;
        }
        Ok::<DatasetSample, PipelineError>(sample)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    write_splits(config, Stage::Bootstrap, &[bootstrapped, val, test])
}

fn run_verify(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Verify)?;
    let backend = build_backend(config)?;
    let registry = PromptRegistry::builtin();
    let out = map_samples(&splits, config.backend.max_inflight, |sample| {
        let Some(story) = &sample.story else {
            return Ok(sample.clone()); // nothing to probe without a story
        };
        let params = GenParams::with_seed(mix_seed(config.seed, &sample.id));
        let flags = probe_alignment(
            backend.as_ref(),
            &registry,
            &sample.id,
            story,
            &sample.graph,
            &params,
        )?;
        let mut sample = sample.clone();
        sample.flags = flags;
        Ok(sample)
    })?;
    let all_flags: Vec<_> = out.iter().flatten().flat_map(|s| s.flags.clone()).collect();
    emit_review_queue(&all_flags, &stage_dir(config, Stage::Verify).join("queue.jsonl"))?;
    write_splits(config, Stage::Verify, &out)
}

fn run_evaluate(config: &PipelineConfig) -> Result<usize, PipelineError> {
    let splits = resolve_split_input(config, Stage::Evaluate)?;
    let backend = build_backend(config)?;
    let registry = PromptRegistry::builtin();
    let test = &splits[2];
    let scored = run_bounded(test, config.backend.max_inflight, |sample| {
        let timeline = render_timeline(&sample.graph);
        let mut items = Vec::with_capacity(sample.qas.len());
        for item in &sample.qas {
            let query = AugmentedQuery {
                timeline: timeline.clone(),
                question: item.question.clone(),
                knowledge: item.knowledge.as_ref().map(render_knowledge).unwrap_or_default(),
            };
            let prompt = format!("{}\n\nThe answer is ", build_cot_prompt(&registry, &[], &query)?);
            let chosen = perplexity_choice(backend.as_ref(), &prompt, &item.candidates)?;
            let prediction = chosen.map(|i| item.candidates[i].as_str()).unwrap_or("");
            let em = exact_match_score(prediction, &item.golds);
            items.push(ScoredItem {
                category: item.qtype.label().to_string(),
                em,
                f1: token_f1_score(prediction, &item.golds),
                acc: em,
            });
        }
        Ok::<Vec<ScoredItem>, PipelineError>(items)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();
    let report = aggregate_report(&scored);
    let json = serde_json::to_string_pretty(&report).map_err(PipelineError::data)?;
    atomic_write(&stage_dir(config, Stage::Evaluate).join("report.json"), &format!("{json}\n"))?;
    Ok(scored.len())
}

/// Run one stage and return how many units it wrote: samples for the
/// dataset stages, scored items for `evaluate`.
pub fn run_stage(config: &PipelineConfig, stage: Stage) -> Result<usize, PipelineError> {
    match stage {
        Stage::Ingest => run_ingest(config),
        Stage::Split => run_split(config),
        Stage::Anonymize => run_anonymize(config),
        Stage::Story => run_story(config),
        Stage::Qa => run_qa(config),
        Stage::Knowledge => run_knowledge(config),
        Stage::Augment => run_augment(config),
        Stage::Bootstrap => run_bootstrap(config),
        Stage::Verify => run_verify(config),
        Stage::Evaluate => run_evaluate(config),
    }
}

/// What a run recorded: per-stage unit counts, in execution order.
pub type RunSummary = Vec<(Stage, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    /// Hash of the full serialized config, so artifact trees are traceable
    /// to the exact settings that produced them.
    config_hash: String,
    seed: u64,
    /// Units written per completed stage.
    stages: BTreeMap<String, usize>,
}

fn config_hash(config: &PipelineConfig) -> Result<String, PipelineError> {
    let bytes = serde_json::to_vec(config).map_err(PipelineError::data)?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

fn write_manifest(config: &PipelineConfig, summary: &RunSummary) -> Result<(), PipelineError> {
    let path = config.out_dir.join("manifest.json");
    let mut stages: BTreeMap<String, usize> = std::fs::read_to_string(&path)
        .ok()
        .and_then(|text| serde_json::from_str::<Manifest>(&text).ok())
        .map(|m| m.stages)
        .unwrap_or_default();
    for (stage, count) in summary {
        stages.insert(stage.name().to_string(), *count);
    }
    let manifest = Manifest { config_hash: config_hash(config)?, seed: config.seed, stages };
    let json = serde_json::to_string_pretty(&manifest).map_err(PipelineError::data)?;
    atomic_write(&path, &format!("{json}\n"))?;
    Ok(())
}

/// Validate the config, run the requested stages in dependency order
/// (duplicates collapsed), and record the manifest.
pub fn run_stages(config: &PipelineConfig, stages: &[Stage]) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    if config.backend.kind == BackendKind::Http && stages.iter().any(|s| s.needs_backend()) {
        // Surface a dead backend before any stage burns work; the mock
        // needs no such check.
        build_backend(config)?;
    }
    let mut ordered: Vec<Stage> = stages.to_vec();
    ordered.sort_by_key(|s| s.index());
    ordered.dedup();
    let mut summary = RunSummary::new();
    for stage in ordered {
        let count = run_stage(config, stage)?;
        summary.push((stage, count));
    }
    write_manifest(config, &summary)?;
    Ok(summary)
}

/// Run every stage over one config.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    run_stages(config, &STAGE_ORDER)
}
