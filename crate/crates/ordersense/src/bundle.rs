//! Report bundles: the on-disk artifacts an experiment emits.
//!
//! Every bundle directory holds the resolved config (config.json) plus JSON
//! artifacts stamped with a provenance header carrying the config digest,
//! the seeds in play and the artifact version. Tables are additionally
//! emitted as CSV. Artifacts contain no timestamps, so re-running an
//! experiment with the same config rewrites byte-identical files, and every
//! table number is recomputable from the bundled raw files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::corpus::SplitManifest;
use crate::ordersearch::{OrderSearchResult, SweepCurve, TransferResult};
use crate::sensitivity::{AccuracyMatrix, AggregateRow, SensitivityReport};

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {message}")]
    Malformed { path: String, message: String },
    #[error(
        "artifact {path} was produced under config digest {artifact_digest}, \
         but the bundle config digests to {config_digest}"
    )]
    DigestMismatch {
        path: String,
        artifact_digest: String,
        config_digest: String,
    },
}

/// Header stamped into every JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact_version: String,
    pub config_digest: String,
    pub model_id: String,
    pub dataset: String,
    pub seeds: BTreeMap<String, u64>,
}

impl Provenance {
    pub fn new(config: &ExperimentConfig, model_id: &str) -> Self {
        let mut seeds = BTreeMap::new();
        seeds.insert("split".into(), config.split.seed);
        seeds.insert("demos".into(), config.demos.seed);
        seeds.insert("perms".into(), config.perms.seed);
        if let Some(mock) = &config.model.mock {
            seeds.insert("mock".into(), mock.seed);
        }
        Provenance {
            artifact_version: crate::ARTIFACT_VERSION.into(),
            config_digest: config.digest(),
            model_id: model_id.into(),
            dataset: config.corpus.dataset_name(),
            seeds,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixArtifact {
    pub provenance: Provenance,
    pub matrix: AccuracyMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SensitivityArtifact {
    pub provenance: Provenance,
    pub report: SensitivityReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OrderSearchArtifact {
    pub provenance: Provenance,
    pub result: OrderSearchResult,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestArtifact {
    pub provenance: Provenance,
    pub manifest: SplitManifest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepParams {
    pub kind: String,
    pub values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CurveArtifact {
    pub provenance: Provenance,
    pub sweep: SweepParams,
    pub curve: SweepCurve,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransferArtifact {
    pub provenance_a: Provenance,
    pub provenance_b: Provenance,
    pub result: TransferResult,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AggregateArtifact {
    pub group_by: String,
    pub rows: Vec<AggregateRow>,
    /// Digests of the source report artifacts, keyed by (model, dataset).
    pub sources: BTreeMap<String, String>,
}

/// Paths written by one command invocation.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BundleError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| BundleError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| BundleError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, BundleError> {
    let raw = fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|e| BundleError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes the resolved config into the bundle; its digest is what every
/// artifact's provenance must carry.
pub fn write_config(dir: &Path, config: &ExperimentConfig) -> Result<PathBuf, BundleError> {
    fs::create_dir_all(dir).map_err(|source| BundleError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join("config.json");
    fs::write(&path, config.canonical_json()).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Loads a bundle's config and checks an artifact's provenance against it.
/// A mismatch means the bundle was edited or mixed from different runs.
pub fn verify_provenance(
    bundle_dir: &Path,
    provenance: &Provenance,
    artifact_path: &Path,
) -> Result<ExperimentConfig, BundleError> {
    let config_path = bundle_dir.join("config.json");
    let config: ExperimentConfig = read_json(&config_path)?;
    let digest = config.digest();
    if digest != provenance.config_digest {
        return Err(BundleError::DigestMismatch {
            path: artifact_path.display().to_string(),
            artifact_digest: provenance.config_digest.clone(),
            config_digest: digest,
        });
    }
    Ok(config)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), BundleError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| BundleError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| BundleError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    writer
        .write_record(header)
        .map_err(|e| BundleError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| BundleError::Malformed {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
    }
    writer.flush().map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Display a float the way the bundle tables do: shortest round-trip form.
pub fn number(value: f64) -> String {
    format!("{value}")
}

/// Display an optional ratio; absent means undefined (zero denominator).
pub fn ratio_cell(ratio: Option<f64>) -> String {
    match ratio {
        Some(r) => number(r),
        None => "undefined".into(),
    }
}
