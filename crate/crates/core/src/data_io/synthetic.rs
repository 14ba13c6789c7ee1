//! Synthetic node-classification tasks on stochastic block model graphs.
//!
//! Two task kinds are available.
//!
//! **separable**: node `i` sits in block `⌊i · blocks / N⌋` and its class is
//! the block index modulo the number of classes. Features are a per-class
//! Gaussian mean plus white noise, so a perceptron alone can solve the task.
//!
//! **cross_channel**: the graph's normalized-Laplacian eigenvectors are split
//! into a low band (the lowest 15 %) and a high band (the highest 15 %).
//! Four independent unit-RMS signals are drawn: `s_L`, `n_L` in the low band
//! and `s_H`, `n_H` in the high band. The two feature channels are
//!
//! ```text
//! x_0 = s_L + n_H        x_1 = s_H + n_L
//! ```
//!
//! and the label depends on both informative parts through
//! `[s_L + s_H > 0] + 2 · [s_L − s_H > 0]` (four classes) or
//! `[s_L + s_H > 0]` (two classes). Recovering the label needs a low-pass
//! filter on channel 0 and a high-pass filter on channel 1 at the same time.
//! A single filter shared by both channels cannot do both, while a 2-D
//! convolution assigns each channel pair its own filter.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Splits;
use crate::spectral::EigenBasis;

/// Fraction of the spectrum in each informative band of `cross_channel`.
pub const BAND_FRACTION: f64 = 0.15;

/// Expected number of neighbours inside / outside a node's block used by
/// the default specs.
const INTRA_DEGREE: f64 = 8.0;
const INTER_DEGREE: f64 = 1.5;

/// Fractions of nodes assigned to the train and validation splits; the rest
/// is the test split.
const TRAIN_FRACTION: f64 = 0.6;
const VALID_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Separable,
    CrossChannel,
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(TaskKind::Separable),
            "cross_channel" => Ok(TaskKind::CrossChannel),
            other => Err(Error::InvalidConfig(format!(
                "unknown task kind {other:?} (expected separable or cross_channel)"
            ))),
        }
    }
}

/// Parameters of a synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub blocks: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    pub noise: f64,
    pub kind: TaskKind,
    pub seed: u64,
}

fn default_probs(n: usize, blocks: usize) -> (f64, f64) {
    let block = (n / blocks.max(1)).max(2) as f64;
    let rest = (n as f64 - block).max(1.0);
    ((INTRA_DEGREE / block).min(1.0), (INTER_DEGREE / rest).min(1.0))
}

impl SyntheticSpec {
    /// Separable task with one block per class and 8 features.
    pub fn separable(n_nodes: usize, n_classes: usize, seed: u64) -> Self {
        let (p_intra, p_inter) = default_probs(n_nodes, n_classes);
        SyntheticSpec {
            n_nodes,
            n_classes,
            blocks: n_classes,
            p_intra,
            p_inter,
            feature_dim: 8,
            noise: 0.5,
            kind: TaskKind::Separable,
            seed,
        }
    }

    /// Four-class cross-channel task on a four-block graph with two
    /// noiseless feature channels.
    pub fn cross_channel(n_nodes: usize, seed: u64) -> Self {
        let (p_intra, p_inter) = default_probs(n_nodes, 4);
        SyntheticSpec {
            n_nodes,
            n_classes: 4,
            blocks: 4,
            p_intra,
            p_inter,
            feature_dim: 2,
            noise: 0.0,
            kind: TaskKind::CrossChannel,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_nodes < 10 {
            return bad(format!("synthetic tasks need at least 10 nodes, got {}", self.n_nodes));
        }
        if self.blocks == 0 || self.blocks > self.n_nodes {
            return bad(format!("blocks must lie in [1, {}], got {}", self.n_nodes, self.blocks));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be nonnegative, got {}", self.noise));
        }
        match self.kind {
            TaskKind::Separable => {
                if self.n_classes < 2 || self.n_classes > self.blocks {
                    return bad(format!(
                        "separable tasks need 2 <= classes <= blocks, got {} classes and {} blocks",
                        self.n_classes, self.blocks
                    ));
                }
                if self.feature_dim == 0 {
                    return bad("feature_dim must be positive".into());
                }
            }
            TaskKind::CrossChannel => {
                if self.n_classes != 2 && self.n_classes != 4 {
                    return bad(format!("cross_channel supports 2 or 4 classes, got {}", self.n_classes));
                }
                if self.feature_dim < 2 {
                    return bad(format!(
                        "cross_channel needs feature_dim >= 2, got {}",
                        self.feature_dim
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic dataset from a spec.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graph = sbm_graph(spec.n_nodes, spec.blocks, spec.p_intra, spec.p_inter, &mut rng)?;
    let (x, labels) = match spec.kind {
        TaskKind::Separable => separable_signals(spec, &mut rng),
        TaskKind::CrossChannel => cross_channel_signals(spec, &graph, &mut rng)?,
    };
    let splits = random_splits(spec.n_nodes, &mut rng)?;
    Ok(Dataset {
        graph,
        x,
        labels,
        n_classes: spec.n_classes,
        splits,
    })
}

/// Block of node `i` when `n` nodes are cut into `blocks` contiguous runs.
pub fn block_of(i: usize, n: usize, blocks: usize) -> usize {
    i * blocks / n
}

/// Stochastic block model with contiguous blocks.
pub fn sbm_graph(n: usize, blocks: usize, p_intra: f64, p_inter: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        let bi = block_of(i, n, blocks);
        for j in (i + 1)..n {
            let p = if block_of(j, n, blocks) == bi { p_intra } else { p_inter };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges)
}

/// Uniform random graph with exactly `m` edges.
pub fn gnm_graph(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let max = n * n.saturating_sub(1) / 2;
    if m > max {
        return Err(Error::InvalidConfig(format!(
            "{m} edges do not fit in a simple graph on {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if seen.insert(e) {
            edges.push(e);
        }
    }
    Graph::new(n, &edges)
}

fn random_splits(n: usize, rng: &mut impl Rng) -> Result<Splits> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let n_valid = (VALID_FRACTION * n as f64).round() as usize;
    Splits::from_indices(
        n,
        &perm[..n_train],
        &perm[n_train..n_train + n_valid],
        &perm[n_train + n_valid..],
    )
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn separable_signals(spec: &SyntheticSpec, rng: &mut impl Rng) -> (DenseMat, Vec<usize>) {
    let n = spec.n_nodes;
    let k = spec.feature_dim;
    let means: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| (0..k).map(|_| 3.0 * gaussian(rng)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| block_of(i, n, spec.blocks) % spec.n_classes).collect();
    let x = DenseMat::from_fn(n, k, |i, j| means[labels[i]][j] + spec.noise * gaussian(rng));
    (x, labels)
}

/// Number of eigenvectors in each informative band.
fn band_size(n: usize) -> usize {
    ((BAND_FRACTION * n as f64).round() as usize).max(1)
}

/// Random unit-RMS combination of the eigenvectors `cols`.
fn band_signal(basis: &EigenBasis, cols: std::ops::Range<usize>, rng: &mut impl Rng) -> Vec<f64> {
    let n = basis.dim();
    let mut s = vec![0.0; n];
    for c in cols {
        let a = gaussian(rng);
        for (i, v) in s.iter_mut().enumerate() {
            *v += a * basis.u.get(i, c);
        }
    }
    let rms = (s.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    s.iter().map(|v| v / rms).collect()
}

fn planted_label(s_low: f64, s_high: f64, n_classes: usize) -> usize {
    let bit0 = usize::from(s_low + s_high > 0.0);
    if n_classes == 2 {
        bit0
    } else {
        bit0 + 2 * usize::from(s_low - s_high > 0.0)
    }
}

fn cross_channel_signals(spec: &SyntheticSpec, graph: &Graph, rng: &mut impl Rng) -> Result<(DenseMat, Vec<usize>)> {
    let n = spec.n_nodes;
    let basis = EigenBasis::of_graph(graph)?;
    let nb = band_size(n);
    let low = 0..nb;
    let high = n - nb..n;
    let s_low = band_signal(&basis, low.clone(), rng);
    let s_high = band_signal(&basis, high.clone(), rng);
    let n_low = band_signal(&basis, low, rng);
    let n_high = band_signal(&basis, high, rng);
    let labels = (0..n)
        .map(|i| planted_label(s_low[i], s_high[i], spec.n_classes))
        .collect();
    let x = DenseMat::from_fn(n, spec.feature_dim, |i, j| {
        let clean = match j {
            0 => s_low[i] + n_high[i],
            1 => s_high[i] + n_low[i],
            _ => 0.0,
        };
        let extra = if j >= 2 { gaussian(rng) } else { 0.0 };
        clean + extra + spec.noise * gaussian(rng)
    });
    Ok((x, labels))
}

/// Applies the planting rule of `cross_channel` to a dataset's own
/// features: project channel 0 onto the low band and channel 1 onto the
/// high band of the graph, then read off the label bits. On a noiseless
/// dataset this reproduces the labels exactly.
pub fn cross_channel_oracle(ds: &Dataset) -> Result<Vec<usize>> {
    if ds.x.cols() < 2 {
        return Err(Error::InvalidInput(
            "cross_channel oracle needs two feature channels".into(),
        ));
    }
    if ds.n_classes != 2 && ds.n_classes != 4 {
        return Err(Error::InvalidInput(format!(
            "cross_channel oracle supports 2 or 4 classes, got {}",
            ds.n_classes
        )));
    }
    let n = ds.graph.n_nodes();
    let basis = EigenBasis::of_graph(&ds.graph)?;
    let nb = band_size(n);
    let project = |col: usize, cols: std::ops::Range<usize>| -> Vec<f64> {
        let x = ds.x.column(col);
        let mut out = vec![0.0; n];
        for c in cols {
            let coef: f64 = (0..n).map(|i| basis.u.get(i, c) * x[i]).sum();
            for (i, v) in out.iter_mut().enumerate() {
                *v += coef * basis.u.get(i, c);
            }
        }
        out
    };
    let s_low = project(0, 0..nb);
    let s_high = project(1, n - nb..n);
    Ok((0..n)
        .map(|i| planted_label(s_low[i], s_high[i], ds.n_classes))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_probabilities_match_degree_targets() {
        let s = SyntheticSpec::cross_channel(400, 0);
        assert!((s.p_intra - 0.08).abs() < 1e-15);
        assert!((s.p_inter - 0.005).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = SyntheticSpec::cross_channel(40, 1);
        s.n_classes = 3;
        assert!(gen_synthetic(&s).is_err());
        let mut s = SyntheticSpec::separable(40, 2, 1);
        s.p_intra = 1.5;
        assert!(gen_synthetic(&s).is_err());
        assert!(gen_synthetic(&SyntheticSpec::separable(5, 2, 1)).is_err());
        assert!("other".parse::<TaskKind>().is_err());
    }

    #[test]
    fn gnm_has_exact_edge_count() {
        let g = gnm_graph(50, 200, 3).unwrap();
        assert_eq!(g.n_edges(), 200);
        assert!(gnm_graph(4, 7, 0).is_err());
    }

    #[test]
    fn splits_partition_nodes() {
        let ds = gen_synthetic(&SyntheticSpec::separable(50, 2, 4)).unwrap();
        for i in 0..50 {
            let k = [ds.splits.train[i], ds.splits.valid[i], ds.splits.test[i]]
                .iter()
                .filter(|&&b| b)
                .count();
            assert_eq!(k, 1);
        }
        assert_eq!(Splits::indices(&ds.splits.train).len(), 30);
    }
}
