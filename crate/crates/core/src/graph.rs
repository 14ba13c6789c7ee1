//! Undirected graphs and their compressed sparse symmetric matrices.
//!
//! [`Graph`] is a validated simple graph. [`SparseSym`] is a CSR matrix that
//! is symmetric by construction; it holds the normalized Laplacian
//! `L = I - D^{-1/2} A D^{-1/2}` and the shifted Laplacian `L̂ = L - I`.
//! Isolated nodes use the pseudo-inverse convention for `D^{-1/2}`, so their
//! Laplacian row is the unit row `e_i`.

use crate::dense::DenseMat;
use crate::error::{Error, Result};

/// A simple undirected graph on nodes `0..n_nodes`.
///
/// Edges are stored canonically as `(min, max)` pairs, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and canonicalizes an edge list.
    ///
    /// Self-loops and out-of-range indices are errors. Duplicate edges (in
    /// either orientation) are an error here too; loaders that want to drop
    /// them use [`Graph::from_edges_dedup`].
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let (g, dropped) = Self::build(n_nodes, edges)?;
        if dropped > 0 {
            return Err(Error::InvalidInput(format!("{dropped} duplicate edge(s) in edge list")));
        }
        Ok(g)
    }

    /// Like [`Graph::new`] but silently drops duplicates, returning how many
    /// were removed so the caller can warn.
    pub fn from_edges_dedup(n_nodes: usize, edges: &[(usize, usize)]) -> Result<(Self, usize)> {
        Self::build(n_nodes, edges)
    }

    fn build(n_nodes: usize, edges: &[(usize, usize)]) -> Result<(Self, usize)> {
        if n_nodes == 0 {
            return Err(Error::InvalidInput("graph must have at least one node".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) has an endpoint outside [0, {n_nodes})"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on node {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        let before = canon.len();
        canon.dedup();
        let dropped = before - canon.len();
        Ok((Graph { n_nodes, edges: canon }, dropped))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Canonical `(min, max)` edge pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbour lists.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }
}

/// Compressed-sparse-row symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a CSR matrix from `(row, col, value)` triplets.
    ///
    /// The triplet list must already be symmetric; this is checked exactly.
    /// Entries within a row are sorted by column; duplicates are rejected.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, v) in &sorted {
            if i >= dim || j >= dim {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i}, {j}) outside a {dim}x{dim} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseSym::from_triplets"));
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        for w in sorted.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidInput(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        let mut row_offsets = vec![0usize; dim + 1];
        for &(i, _, _) in &sorted {
            row_offsets[i + 1] += 1;
        }
        for i in 0..dim {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = sorted.iter().map(|t| t.1).collect();
        let values = sorted.iter().map(|t| t.2).collect();
        let m = SparseSym {
            dim,
            row_offsets,
            col_indices,
            values,
        };
        for i in 0..dim {
            for (j, v) in m.row_entries(i) {
                if m.entry(j, i) != Some(v) {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) has no equal mirror entry"
                    )));
                }
            }
        }
        Ok(m)
    }

    /// Sparsifies a dense symmetric matrix, keeping entries that are nonzero
    /// and always keeping the diagonal.
    pub fn from_dense(m: &DenseMat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::dims(
                "SparseSym::from_dense",
                "square",
                format!("{:?}", m.shape()),
            ));
        }
        let mut t = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if v != 0.0 || i == j {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.rows(), &t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(col, value)` pairs of row `i` in ascending column order.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// Stored value at `(i, j)`, if the position is in the pattern.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        self.col_indices[lo..hi]
            .binary_search(&j)
            .ok()
            .map(|k| self.values[lo + k])
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut d = DenseMat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row_entries(i) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Adds `alpha` to every diagonal entry, inserting missing diagonal
    /// positions. Off-diagonal structure is untouched.
    pub fn add_to_diagonal(&self, alpha: f64) -> SparseSym {
        let mut t = Vec::with_capacity(self.nnz() + self.dim);
        for i in 0..self.dim {
            let mut saw_diag = false;
            for (j, v) in self.row_entries(i) {
                if j == i {
                    saw_diag = true;
                    t.push((i, j, v + alpha));
                } else {
                    t.push((i, j, v));
                }
            }
            if !saw_diag {
                t.push((i, i, alpha));
            }
        }
        // Triplets are built from a valid symmetric matrix, so this cannot fail.
        Self::from_triplets(self.dim, &t).expect("diagonal shift preserves symmetry")
    }
}

/// Degree of every node as an `N × 1` column.
pub fn degree_vector(g: &Graph) -> DenseMat {
    let mut deg = vec![0.0; g.n_nodes()];
    for &(a, b) in g.edges() {
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    DenseMat::column_vector(&deg)
}

/// `L = I - D^{-1/2} A D^{-1/2}` with the pseudo-inverse convention at
/// degree zero.
pub fn normalized_laplacian(g: &Graph) -> SparseSym {
    let deg = degree_vector(g);
    let inv_sqrt: Vec<f64> = deg
        .as_slice()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut t = Vec::with_capacity(2 * g.n_edges() + g.n_nodes());
    for i in 0..g.n_nodes() {
        t.push((i, i, 1.0));
    }
    for &(a, b) in g.edges() {
        let v = -(inv_sqrt[a] * inv_sqrt[b]);
        t.push((a, b, v));
        t.push((b, a, v));
    }
    SparseSym::from_triplets(g.n_nodes(), &t).expect("Laplacian triplets are symmetric")
}

/// `L̂ = L - I`, keeping the diagonal positions (now zero) in the pattern.
pub fn shifted_laplacian(l: &SparseSym) -> SparseSym {
    l.add_to_diagonal(-1.0)
}

/// Sparse × dense product `m · x`.
///
/// Each output row accumulates its terms in ascending column order of `m`,
/// so the result does not depend on how rows are scheduled.
pub fn spmm(m: &SparseSym, x: &DenseMat) -> Result<DenseMat> {
    let mut out = DenseMat::zeros(m.dim(), x.cols());
    spmm_into(m, x, &mut out)?;
    Ok(out)
}

/// [`spmm`] writing into a preallocated output, overwriting its contents.
pub fn spmm_into(m: &SparseSym, x: &DenseMat, out: &mut DenseMat) -> Result<()> {
    if m.dim() != x.rows() {
        return Err(Error::dims(
            "spmm",
            format!("{} rows", m.dim()),
            format!("{} rows", x.rows()),
        ));
    }
    if out.shape() != (m.dim(), x.cols()) {
        return Err(Error::dims(
            "spmm_into",
            format!("{:?}", (m.dim(), x.cols())),
            format!("{:?}", out.shape()),
        ));
    }
    let c = x.cols();
    let xs = x.as_slice();
    let os = out.as_mut_slice();
    for i in 0..m.dim() {
        let orow = &mut os[i * c..(i + 1) * c];
        orow.iter_mut().for_each(|v| *v = 0.0);
        let lo = m.row_offsets[i];
        let hi = m.row_offsets[i + 1];
        for k in lo..hi {
            let a = m.values[k];
            let xrow = &xs[m.col_indices[k] * c..(m.col_indices[k] + 1) * c];
            for (o, &xv) in orow.iter_mut().zip(xrow) {
                *o += a * xv;
            }
        }
    }
    Ok(())
}
