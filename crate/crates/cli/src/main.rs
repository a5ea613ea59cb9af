//! `tgkit` — command-line driver for the temporal-graph QA data pipeline.
//!
//! Each subcommand runs one pipeline stage over a TOML config (defaults
//! apply when no config is given); `review-apply` folds reviewer decisions
//! back into the verified dataset, and `render-prompts` prints the built-in
//! prompt templates.  Exit codes: 0 ok, 2 config error, 3 backend error,
//! 4 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tgkit_backend::{BackendKind, PromptRegistry};
use tgkit_pipeline::dataset::{read_dataset, write_dataset, DatasetSample};
use tgkit_pipeline::run::{run_stages, PipelineConfig, PipelineError, Stage};
use tgkit_pipeline::story::{apply_review, load_review_decisions};

#[derive(Parser)]
#[command(name = "tgkit", version, about = "Temporal-graph QA dataset pipeline")]
struct Cli {
    /// TOML config file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed override; re-keys every stage coherently.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Backend override.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendChoice>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    /// Deterministic offline mock.
    Mock,
    /// Completion-style HTTP endpoint (`TG_BACKEND_URL`, `TG_BACKEND_KEY`).
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Extract subgraph samples from the knowledge graph.
    Ingest,
    /// Partition samples into train/val/test with disjoint events.
    Split,
    /// Replace entity names with pool names absent from the source KG.
    Anonymize,
    /// Generate a narrative story for every sample.
    GenStory,
    /// Generate rule-based QA items for every sample.
    GenQa,
    /// Derive arithmetic scaffolding for every QA item.
    Knowledge,
    /// Extend the training split with augmented copies.
    Augment,
    /// Bootstrap reasoning chains for training items.
    Bootstrap,
    /// Probe story/graph alignment and emit the review queue.
    Verify,
    /// Fold reviewer decisions back into the verified dataset.
    ReviewApply {
        /// JSONL file of reviewer decisions.
        #[arg(long)]
        decisions: PathBuf,
    },
    /// Score the test split and write the metric report.
    Evaluate,
    /// Print every built-in prompt template.
    RenderPrompts,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        match self {
            Command::Ingest => Some(Stage::Ingest),
            Command::Split => Some(Stage::Split),
            Command::Anonymize => Some(Stage::Anonymize),
            Command::GenStory => Some(Stage::Story),
            Command::GenQa => Some(Stage::Qa),
            Command::Knowledge => Some(Stage::Knowledge),
            Command::Augment => Some(Stage::Augment),
            Command::Bootstrap => Some(Stage::Bootstrap),
            Command::Verify => Some(Stage::Verify),
            Command::Evaluate => Some(Stage::Evaluate),
            Command::ReviewApply { .. } | Command::RenderPrompts => None,
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| PipelineError::ConfigInvalid {
                    reason: format!("cannot read config {}: {e}", path.display()),
                })?;
            toml::from_str(&text).map_err(|e| PipelineError::ConfigInvalid {
                reason: format!("config {}: {e}", path.display()),
            })?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.apply_global_seed(seed);
    }
    if let Some(choice) = cli.backend {
        config.backend.kind = match choice {
            BackendChoice::Mock => BackendKind::Mock,
            BackendChoice::Http => BackendKind::Http,
        };
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

/// Apply reviewer decisions to the verify stage's artifacts in place.
/// The three splits are reviewed as one dataset, so decisions are checked
/// against every pending flag, then samples return to their assigned
/// split files.
fn review_apply(config: &PipelineConfig, decisions_path: &Path) -> Result<(), PipelineError> {
    let dir = config.out_dir.join("verify");
    let paths: Vec<PathBuf> =
        ["train", "val", "test"].iter().map(|n| dir.join(format!("{n}.jsonl"))).collect();
    if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
        return Err(PipelineError::StageInputMissing {
            stage: "review-apply",
            path: missing.clone(),
        });
    }
    let decisions = load_review_decisions(decisions_path)?;
    let mut all: Vec<DatasetSample> = Vec::new();
    for path in &paths {
        all.extend(read_dataset(path)?);
    }
    let (corrected, report) =
        apply_review(&all, &decisions).map_err(|e| PipelineError::Data { reason: e.to_string() })?;
    let mut splits: [Vec<DatasetSample>; 3] = Default::default();
    for sample in corrected {
        let slot = match sample.provenance.split.as_deref() {
            Some("train") => 0,
            Some("val") => 1,
            Some("test") => 2,
            other => {
                return Err(PipelineError::Data {
                    reason: format!("sample {} has unknown split {other:?}", sample.id),
                })
            }
        };
        splits[slot].push(sample);
    }
    for (path, samples) in paths.iter().zip(&splits) {
        write_dataset(path, samples)?;
    }
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| PipelineError::Data { reason: e.to_string() })?;
    emit(&json);
    Ok(())
}

/// Print without panicking when the reader hangs up (e.g. piping into
/// `head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{text}");
}

fn render_prompts() {
    let registry = PromptRegistry::builtin();
    for id in registry.ids() {
        emit(&format!("== {id} =="));
        emit(registry.body(id).expect("listed ids resolve"));
        emit("");
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::RenderPrompts => {
            render_prompts();
            Ok(())
        }
        Command::ReviewApply { decisions } => {
            let config = load_config(cli)?;
            config.validate()?;
            review_apply(&config, decisions)
        }
        command => {
            let stage = command.stage().expect("stage subcommands map to stages");
            let config = load_config(cli)?;
            for (stage, count) in run_stages(&config, &[stage])? {
                emit(&format!("{stage}: {count}"));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
