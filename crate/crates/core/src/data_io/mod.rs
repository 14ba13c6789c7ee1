//! Dataset files, synthetic tasks, and JSON persistence.
//!
//! A dataset directory holds four files:
//!
//! * `edges.tsv`: one undirected edge per line, two tab-separated node ids;
//! * `features.csv`: one comma-separated row of reals per node;
//! * `labels.csv`: one integer class per line;
//! * `splits.json`: `{"train": [...], "valid": [...], "test": [...]}`.
//!
//! Node ids in `edges.tsv` and `splits.json` are 0- or 1-based according to
//! the `index_base` argument. Blank lines and lines starting with `#` are
//! ignored in the text files. Self-loops are rejected; duplicate edges are
//! dropped with a warning.

pub mod json;
pub mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Splits;

pub use json::{
    load_checkpoint, load_metrics, load_report, load_versioned, save_checkpoint, save_json, save_metrics, save_report,
    to_canonical_string, write_atomic, Checkpoint, CheckpointMetrics, Metrics, ParamArrays, CHECKPOINT_SCHEMA_VERSION,
    METRICS_SCHEMA_VERSION, REPORT_SCHEMA_VERSION,
};
pub use synthetic::{cross_channel_oracle, gen_synthetic, gnm_graph, SyntheticSpec, TaskKind};

/// A node-classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub x: DenseMat,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub splits: Splits,
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    train: Vec<usize>,
    valid: Vec<usize>,
    test: Vec<usize>,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn check_base(index_base: usize) -> Result<()> {
    if index_base > 1 {
        return Err(Error::InvalidInput(format!(
            "index_base must be 0 or 1, got {index_base}"
        )));
    }
    Ok(())
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path, index_base: usize) -> Result<Dataset> {
    check_base(index_base)?;
    let features_path = dir.join("features.csv");
    let x = parse_features(&features_path)?;
    let n = x.rows();
    if n == 0 {
        return Err(parse_err(&features_path, 1, "no feature rows"));
    }

    let labels_path = dir.join("labels.csv");
    let labels = parse_labels(&labels_path)?;
    if labels.len() != n {
        return Err(parse_err(
            &labels_path,
            labels.len(),
            format!("{} labels for {n} feature rows", labels.len()),
        ));
    }

    let edges_path = dir.join("edges.tsv");
    let edges = parse_edges(&edges_path, n, index_base)?;
    let (graph, dropped) = Graph::from_edges_dedup(n, &edges)?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} duplicate edge(s)", edges_path.display());
    }

    let splits_path = dir.join("splits.json");
    let raw: SplitFile = serde_json::from_str(&read(&splits_path)?).map_err(|e| Error::Json {
        path: splits_path.clone(),
        source: e,
    })?;
    let shift = |v: &[usize], name: &str| -> Result<Vec<usize>> {
        v.iter()
            .map(|&i| {
                i.checked_sub(index_base).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{}: {name} index {i} is below index base {index_base}",
                        splits_path.display()
                    ))
                })
            })
            .collect()
    };
    let splits = Splits::from_indices(
        n,
        &shift(&raw.train, "train")?,
        &shift(&raw.valid, "valid")?,
        &shift(&raw.test, "test")?,
    )
    .map_err(|e| Error::InvalidInput(format!("{}: {e}", splits_path.display())))?;

    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    Ok(Dataset {
        graph,
        x,
        labels,
        n_classes,
        splits,
    })
}

fn parse_features(path: &Path) -> Result<DenseMat> {
    let text = read(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in content_lines(&text) {
        let row = l
            .split(',')
            .map(|tok| {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("not a real number: {:?}", tok.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(path, line, "non-finite feature value"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("{} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    DenseMat::from_rows(&rows)
}

fn parse_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(line, l)| {
            l.parse::<usize>()
                .map_err(|_| parse_err(path, line, format!("not a class index: {l:?}")))
        })
        .collect()
}

fn parse_edges(path: &Path, n: usize, index_base: usize) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (line, l) in content_lines(&text) {
        let toks: Vec<&str> = l.split('\t').map(str::trim).collect();
        if toks.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected two tab-separated ids, got {l:?}"),
            ));
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&toks) {
            let raw: usize = tok
                .parse()
                .map_err(|_| parse_err(path, line, format!("not a node id: {tok:?}")))?;
            *slot = raw
                .checked_sub(index_base)
                .filter(|&i| i < n)
                .ok_or_else(|| parse_err(path, line, format!("node id {raw} out of range for {n} nodes")))?;
        }
        if ids[0] == ids[1] {
            return Err(parse_err(path, line, format!("self-loop on node {}", toks[0])));
        }
        edges.push((ids[0], ids[1]));
    }
    Ok(edges)
}

/// Writes a dataset directory (0-based ids), creating it if needed.
/// Returns the paths written.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for &(a, b) in ds.graph.edges() {
        edges.push_str(&format!("{a}\t{b}\n"));
    }
    let mut feats = String::new();
    for i in 0..ds.x.rows() {
        let row: Vec<String> = ds.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        feats.push_str(&row.join(","));
        feats.push('\n');
    }
    let labels: String = ds.labels.iter().map(|l| format!("{l}\n")).collect();
    let splits = SplitFile {
        train: Splits::indices(&ds.splits.train),
        valid: Splits::indices(&ds.splits.valid),
        test: Splits::indices(&ds.splits.test),
    };
    let splits = serde_json::to_string(&splits).expect("index lists serialize");
    let files = [
        ("edges.tsv", edges),
        ("features.csv", feats),
        ("labels.csv", labels),
        ("splits.json", splits),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
