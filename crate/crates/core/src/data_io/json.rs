//! Canonical JSON documents: checkpoints, metrics and lab reports.
//!
//! Documents are serialized through [`serde_json::Value`], whose object map
//! keeps keys sorted, and written compactly with every float in the fixed
//! 17-significant-digit form `d.dddddddddddddddde±x`. Saving a document that
//! was just loaded therefore reproduces the original bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::chebyshev::CoeffTensor;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::failure_lab::LabReport;
use crate::model::{Dims, History, MlpParams, ModelParams, TrainConfig, TrainOutcome};

/// Schema version written into, and required of, checkpoints.
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;
/// Schema version of lab reports.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Schema version of metrics files.
pub const METRICS_SCHEMA_VERSION: u32 = 1;

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Canonical serialization of any serializable value.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value).map_err(|e| Error::Json {
        path: "<memory>".into(),
        source: e,
    })?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    tree.serialize(&mut ser).map_err(|e| Error::Json {
        path: "<memory>".into(),
        source: e,
    })?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Canonically serializes `value` and writes it atomically.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_canonical_string(value)?.as_bytes())
}

/// Reads a JSON document after checking its `schema_version` field.
pub fn load_versioned<T: DeserializeOwned>(path: &Path, expected: u32) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tree: Value = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    let found = tree
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            msg: "missing integer field schema_version".into(),
        })?;
    if found != u64::from(expected) {
        return Err(Error::SchemaVersion { expected, found });
    }
    serde_json::from_value(tree).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// Parameter arrays as nested lists. `theta[c][j][b]` follows the
/// coefficient tensor's `(input, output, node)` indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArrays {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub theta: Vec<Vec<Vec<f64>>>,
}

impl ParamArrays {
    pub fn from_params(p: &ModelParams) -> Self {
        let c = p.theta.channels();
        let d = p.theta.degree();
        ParamArrays {
            w1: p.mlp.w1.to_rows(),
            b1: p.mlp.b1.clone(),
            w2: p.mlp.w2.to_rows(),
            b2: p.mlp.b2.clone(),
            theta: (0..c)
                .map(|ci| {
                    (0..c)
                        .map(|j| (0..=d).map(|b| p.theta.get(ci, j, b)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_params(&self, dims: Dims) -> Result<ModelParams> {
        let bad = |what: &str| Error::InvalidInput(format!("checkpoint array {what} does not match dims {dims:?}"));
        let w1 = DenseMat::from_rows(&self.w1).map_err(|_| bad("w1"))?;
        let w2 = DenseMat::from_rows(&self.w2).map_err(|_| bad("w2"))?;
        if w1.shape() != (dims.k, dims.h) {
            return Err(bad("w1"));
        }
        if w2.shape() != (dims.h, dims.c) {
            return Err(bad("w2"));
        }
        if self.b1.len() != dims.h {
            return Err(bad("b1"));
        }
        if self.b2.len() != dims.c {
            return Err(bad("b2"));
        }
        let mut flat = Vec::with_capacity(dims.c * dims.c * (dims.d + 1));
        if self.theta.len() != dims.c {
            return Err(bad("theta"));
        }
        for row in &self.theta {
            if row.len() != dims.c {
                return Err(bad("theta"));
            }
            for samples in row {
                if samples.len() != dims.d + 1 {
                    return Err(bad("theta"));
                }
                flat.extend_from_slice(samples);
            }
        }
        Ok(ModelParams {
            mlp: MlpParams {
                w1,
                b1: self.b1.clone(),
                w2,
                b2: self.b2.clone(),
            },
            theta: CoeffTensor::from_vec(dims.c, dims.d, flat)?,
        })
    }
}

/// Summary metrics stored alongside checkpointed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetrics {
    pub best_epoch: usize,
    pub best_valid_acc: f64,
    pub test_acc: f64,
}

/// A trained model on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub dims: Dims,
    pub arrays: ParamArrays,
    pub config: TrainConfig,
    pub metrics: CheckpointMetrics,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, config: &TrainConfig, metrics: CheckpointMetrics) -> Self {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            dims: params.dims(),
            arrays: ParamArrays::from_params(params),
            config: config.clone(),
            metrics,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.arrays.to_params(self.dims)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    save_json(path, ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ckpt: Checkpoint = load_versioned(path, CHECKPOINT_SCHEMA_VERSION)?;
    ckpt.params()?;
    Ok(ckpt)
}

/// Per-run training metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub train_loss: Vec<f64>,
    pub valid_acc: Vec<f64>,
    pub test_acc: f64,
    pub best_epoch: usize,
    pub seed: u64,
    pub config: TrainConfig,
}

impl Metrics {
    pub fn from_outcome(outcome: &TrainOutcome, config: &TrainConfig) -> Self {
        let History {
            train_loss, valid_acc, ..
        } = outcome.history.clone();
        Metrics {
            schema_version: METRICS_SCHEMA_VERSION,
            train_loss,
            valid_acc,
            test_acc: outcome.test_acc,
            best_epoch: outcome.best_epoch,
            seed: config.seed,
            config: config.clone(),
        }
    }
}

pub fn save_metrics(path: &Path, m: &Metrics) -> Result<()> {
    save_json(path, m)
}

pub fn load_metrics(path: &Path) -> Result<Metrics> {
    load_versioned(path, METRICS_SCHEMA_VERSION)
}

pub fn save_report(path: &Path, report: &LabReport) -> Result<()> {
    save_json(path, report)
}

pub fn load_report(path: &Path) -> Result<LabReport> {
    load_versioned(path, REPORT_SCHEMA_VERSION)
}
