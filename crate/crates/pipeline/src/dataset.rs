//! The persisted dataset record and its JSONL serialization.
//!
//! One [`DatasetSample`] bundles a temporal graph with its narrative story,
//! generated question items, and any outstanding alignment flags.  Files
//! hold one JSON object per line, written atomically (temp file + rename)
//! so interrupted runs leave either the previous artifact or none.  Writing
//! re-verifies every stored gold answer against the symbolic oracle and
//! refuses to persist a sample that no longer checks out — the on-disk
//! invariant the rest of the pipeline leans on.

use crate::qa::{self, QAItem};
use crate::story::AlignmentFlag;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use tgkit_core::TemporalGraph;
use thiserror::Error;

/// Where a sample came from and what has been done to it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Provenance {
    /// Seed that produced the sample (subgraph extraction or fixture).
    pub seed: u64,
    /// Applied transforms, e.g. `drop:2`, `synonyms`, `entities`,
    /// `offset:+10`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<String>,
    /// Which split the sample belongs to, once assigned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// One unit of the dataset: graph, story, questions, and QC flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub id: String,
    pub graph: TemporalGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qas: Vec<QAItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<AlignmentFlag>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl DatasetSample {
    pub fn new(id: impl Into<String>, graph: TemporalGraph) -> Self {
        DatasetSample {
            id: id.into(),
            graph,
            story: None,
            qas: Vec::new(),
            flags: Vec::new(),
            provenance: Provenance::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    SchemaViolation {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate sample id {id:?}")]
    DuplicateId { id: String },
    #[error("sample {sample_id} item {item_id}: stored gold no longer matches the oracle")]
    OracleMismatch { sample_id: String, item_id: String },
    #[error("sample {sample_id} item {item_id}: oracle cannot answer: {reason}")]
    OracleFailure { sample_id: String, item_id: String, reason: String },
}

/// Write `contents` to `path` atomically: same-directory temp file, fsync,
/// rename.  Creates missing parent directories.
pub fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{file_name}.{}.tmp", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            fs::remove_file(&tmp).ok();
            Err(e)
        }
    }
}

/// Serialize items as JSONL and write atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("dataset types serialize"));
        out.push('\n');
    }
    atomic_write(path, &out)?;
    Ok(())
}

/// Read a JSONL file; blank lines are ignored, errors carry line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let text = fs::read_to_string(path)?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line)
            .map_err(|source| DatasetError::SchemaViolation { line: i + 1, source })?;
        items.push(item);
    }
    Ok(items)
}

/// Check every stored gold against the oracle and sample ids for
/// uniqueness.
pub fn verify_samples(samples: &[DatasetSample]) -> Result<(), DatasetError> {
    let mut seen: Vec<&str> = Vec::with_capacity(samples.len());
    for sample in samples {
        if seen.contains(&sample.id.as_str()) {
            return Err(DatasetError::DuplicateId { id: sample.id.clone() });
        }
        seen.push(&sample.id);
        for item in &sample.qas {
            match qa::verify_item(&sample.graph, item) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(DatasetError::OracleMismatch {
                        sample_id: sample.id.clone(),
                        item_id: item.id.clone(),
                    });
                }
                Err(e) => {
                    return Err(DatasetError::OracleFailure {
                        sample_id: sample.id.clone(),
                        item_id: item.id.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Verify, then persist.  Nothing is written when verification fails.
pub fn write_dataset(path: &Path, samples: &[DatasetSample]) -> Result<(), DatasetError> {
    verify_samples(samples)?;
    write_jsonl(path, samples)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetSample>, DatasetError> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::{QaConfig, generate_qas};
    use tgkit_core::fixtures;

    fn sample(id: &str) -> DatasetSample {
        let graph = fixtures::media_mogul_graph();
        let qas = generate_qas(&graph, &QaConfig::with_seed(4));
        DatasetSample { qas, ..DatasetSample::new(id, graph) }
    }

    #[test]
    fn jsonl_round_trips_samples_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out").join("train.jsonl");
        let samples = vec![sample("s-0"), sample("s-1")];
        write_dataset(&path, &samples).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(samples, back);
        // One JSON object per line, newline-terminated.
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn writes_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        write_dataset(&a, &[sample("s-0")]).unwrap();
        write_dataset(&b, &[sample("s-0")]).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn tampered_gold_is_rejected_and_nothing_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let mut bad = sample("s-0");
        bad.qas[0].golds = vec!["not the answer".to_string()];
        let err = write_dataset(&path, &[bad]).unwrap_err();
        assert!(matches!(err, DatasetError::OracleMismatch { .. }), "got {err}");
        assert!(!path.exists());
        // No stray temp files either.
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let err = write_dataset(&path, &[sample("s-0"), sample("s-0")]).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId { .. }));
    }

    #[test]
    fn malformed_lines_report_their_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        fs::write(&path, "{\"id\":\"ok\",\"graph\":[]}\nnot json\n").unwrap();
        match read_dataset(&path) {
            Err(DatasetError::SchemaViolation { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected SchemaViolation, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_reads_as_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        assert!(read_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.txt");
        atomic_write(&path, "old").unwrap();
        atomic_write(&path, "new").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "new");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
