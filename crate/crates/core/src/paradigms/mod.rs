//! Spectral convolution paradigms and the 2-D graph convolution.
//!
//! All operators here act through an explicit [`EigenBasis`]. Writing
//! `F̂ = Uᵀ F` for the frequency representation of an `N × C` signal:
//!
//! | form | output |
//! |------|--------|
//! | [`paradigm1`] | `Z = U diag(g) Uᵀ F` (one filter shared by all channels) |
//! | [`paradigm2`] | `Z = U diag(g) Uᵀ F R` (shared filter plus channel mixing) |
//! | [`paradigm3`] | `Z[:, c] = U diag(g_c) Uᵀ F[:, c]` (one filter per channel) |
//! | [`conv2d_block`] | `Z[:, j] = Σ_c U diag(g_(c,j)) Uᵀ F[:, c]` |
//! | [`conv2d_fcn`] | `Z[i, j] = Σ_n Σ_c Ω[i, j, n, c] F[n, c]` |
//!
//! A [`FilterGrid`] is indexed `(c, j)` with `c` the input channel and `j`
//! the output channel. Its block-matrix form places `Φ_(c,j)` at block row
//! `j`, block column `c`, acting on the column-major vectorization
//! ([`vec`]) of `F`.
//!
//! The [`floors`] submodule holds the closed-form error oracles and rank /
//! support certificates used to show when a legacy paradigm cannot reach a
//! target.

pub mod floors;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::spectral::{gft, igft, EigenBasis};

pub use floors::{
    certificates_frequency, infeasibility_certificates, min_error_p1, min_error_p2, min_error_p3, rank_floor,
    Certificates, FULL_SUPPORT_TOL, RANK_REL_TOL, VIOLATION_TARGET_TOL,
};

/// Names of the convolution families compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "P1")]
    P1,
    #[serde(rename = "P2")]
    P2,
    #[serde(rename = "P3")]
    P3,
    /// Sum of two independent shared-filter-plus-mixing terms.
    #[serde(rename = "P2+P2")]
    P2P2,
    /// Sum of one term from each legacy paradigm.
    #[serde(rename = "P1+P2+P3")]
    Combined,
    /// 2-D convolution whose grid entries at designated positions are pinned
    /// to a constant.
    #[serde(rename = "2D-const")]
    TiedConstant,
    /// 2-D convolution with grid entries shared across designated positions.
    #[serde(rename = "2D-shared")]
    TiedShared,
    /// The unrestricted 2-D convolution.
    #[serde(rename = "2D")]
    TwoD,
}

impl Paradigm {
    pub fn label(self) -> &'static str {
        match self {
            Paradigm::P1 => "P1",
            Paradigm::P2 => "P2",
            Paradigm::P3 => "P3",
            Paradigm::P2P2 => "P2+P2",
            Paradigm::Combined => "P1+P2+P3",
            Paradigm::TiedConstant => "2D-const",
            Paradigm::TiedShared => "2D-shared",
            Paradigm::TwoD => "2D",
        }
    }
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A single spectral filter `g` of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSingle {
    pub g: Vec<f64>,
}

/// A `C × C` channel-mixing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MixMatrix {
    pub r: DenseMat,
}

/// One spectral filter per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPerColumn {
    pub gs: Vec<Vec<f64>>,
}

/// `C × C` grid of length-`N` spectral filters, entry `(c, j)` mapping input
/// channel `c` to output channel `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGrid {
    n: usize,
    c: usize,
    data: Vec<f64>,
}

impl FilterGrid {
    pub fn zeros(n: usize, c: usize) -> Self {
        FilterGrid {
            n,
            c,
            data: vec![0.0; n * c * c],
        }
    }

    /// The grid with all-pass filters on the diagonal.
    pub fn identity(n: usize, c: usize) -> Self {
        let mut g = Self::zeros(n, c);
        for k in 0..c {
            g.get_mut(k, k).fill(1.0);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    /// Filter from input channel `c` to output channel `j`.
    pub fn get(&self, c: usize, j: usize) -> &[f64] {
        let off = (c * self.c + j) * self.n;
        &self.data[off..off + self.n]
    }

    pub fn get_mut(&mut self, c: usize, j: usize) -> &mut [f64] {
        let off = (c * self.c + j) * self.n;
        &mut self.data[off..off + self.n]
    }

    pub fn set(&mut self, c: usize, j: usize, g: &[f64]) -> Result<()> {
        if g.len() != self.n {
            return Err(Error::dims("FilterGrid::set", self.n, g.len()));
        }
        self.get_mut(c, j).copy_from_slice(g);
        Ok(())
    }

    /// Applies the grid to a frequency-domain signal:
    /// `Ẑ[n, j] = Σ_c g_(c,j)[n] F̂[n, c]`.
    pub fn apply_frequency(&self, fhat: &DenseMat) -> Result<DenseMat> {
        if fhat.shape() != (self.n, self.c) {
            return Err(Error::dims(
                "FilterGrid::apply_frequency",
                format!("{:?}", (self.n, self.c)),
                format!("{:?}", fhat.shape()),
            ));
        }
        let mut z = DenseMat::zeros(self.n, self.c);
        for n in 0..self.n {
            for j in 0..self.c {
                let mut acc = 0.0;
                for c in 0..self.c {
                    acc += self.get(c, j)[n] * fhat.get(n, c);
                }
                z.set(n, j, acc);
            }
        }
        Ok(z)
    }

    /// The `NC × NC` block operator acting on `vec(F)`; block row `j`, block
    /// column `c` holds `Φ_(c,j) = U diag(g_(c,j)) Uᵀ`.
    pub fn block_matrix(&self, basis: &EigenBasis) -> Result<DenseMat> {
        check_basis(basis, self.n, "FilterGrid::block_matrix")?;
        let (n, cc) = (self.n, self.c);
        let mut big = DenseMat::zeros(n * cc, n * cc);
        for c in 0..cc {
            for j in 0..cc {
                let phi = spectral_operator(basis, self.get(c, j))?;
                for a in 0..n {
                    for b in 0..n {
                        big.set(j * n + a, c * n + b, phi.get(a, b));
                    }
                }
            }
        }
        Ok(big)
    }
}

/// Coefficients `Ω[i, j, n, c]` of the fully connected 2-D form.
#[derive(Debug, Clone, PartialEq)]
pub struct FcnCoeffs {
    n: usize,
    c: usize,
    data: Vec<f64>,
}

impl FcnCoeffs {
    pub fn zeros(n: usize, c: usize) -> Self {
        FcnCoeffs {
            n,
            c,
            data: vec![0.0; n * c * n * c],
        }
    }

    pub fn from_fn(n: usize, c: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut w = Self::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                for nn in 0..n {
                    for cc in 0..c {
                        *w.at_mut(i, j, nn, cc) = f(i, j, nn, cc);
                    }
                }
            }
        }
        w
    }

    /// Index map from a filter grid: `Ω[i, j, n, c] = Φ_(c,j)[i, n]`.
    pub fn from_grid(basis: &EigenBasis, grid: &FilterGrid) -> Result<Self> {
        check_basis(basis, grid.n(), "FcnCoeffs::from_grid")?;
        let (n, cc) = (grid.n(), grid.channels());
        let mut w = Self::zeros(n, cc);
        for c in 0..cc {
            for j in 0..cc {
                let phi = spectral_operator(basis, grid.get(c, j))?;
                for i in 0..n {
                    for nn in 0..n {
                        *w.at_mut(i, j, nn, c) = phi.get(i, nn);
                    }
                }
            }
        }
        Ok(w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn at(&self, i: usize, j: usize, n: usize, c: usize) -> f64 {
        self.data[((i * self.c + j) * self.n + n) * self.c + c]
    }

    pub fn at_mut(&mut self, i: usize, j: usize, n: usize, c: usize) -> &mut f64 {
        &mut self.data[((i * self.c + j) * self.n + n) * self.c + c]
    }
}

/// Column-major vectorization: entry `(i, j)` lands at `i + rows · j`.
pub fn vec(m: &DenseMat) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(m.get(i, j));
        }
    }
    v
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMat> {
    if v.len() != rows * cols {
        return Err(Error::dims("unvec", rows * cols, v.len()));
    }
    Ok(DenseMat::from_fn(rows, cols, |i, j| v[i + rows * j]))
}

fn check_basis(basis: &EigenBasis, n: usize, op: &'static str) -> Result<()> {
    if basis.dim() != n || basis.u.shape() != (n, n) {
        return Err(Error::dims(op, format!("basis of dimension {n}"), basis.dim()));
    }
    Ok(())
}

fn check_filter(basis: &EigenBasis, g: &[f64], op: &'static str) -> Result<()> {
    if g.len() != basis.dim() {
        return Err(Error::dims(op, format!("filter of length {}", basis.dim()), g.len()));
    }
    Ok(())
}

/// Dense `U diag(g) Uᵀ`.
pub fn spectral_operator(basis: &EigenBasis, g: &[f64]) -> Result<DenseMat> {
    check_filter(basis, g, "spectral_operator")?;
    let scaled = basis.u.transpose().scale_rows(g)?;
    basis.u.matmul(&scaled)
}

/// `Z = U diag(g) Uᵀ F`.
pub fn paradigm1(basis: &EigenBasis, f: &DenseMat, p: &FilterSingle) -> Result<DenseMat> {
    check_filter(basis, &p.g, "paradigm1")?;
    let fhat = gft(basis, f)?;
    igft(basis, &fhat.scale_rows(&p.g)?)
}

/// `Z = U diag(g) Uᵀ F R`.
pub fn paradigm2(basis: &EigenBasis, f: &DenseMat, p: &FilterSingle, r: &MixMatrix) -> Result<DenseMat> {
    if r.r.shape() != (f.cols(), f.cols()) {
        return Err(Error::dims(
            "paradigm2",
            format!("{0}x{0} mixing matrix", f.cols()),
            format!("{:?}", r.r.shape()),
        ));
    }
    paradigm1(basis, f, p)?.matmul(&r.r)
}

/// `Z[:, c] = U diag(g_c) Uᵀ F[:, c]`.
pub fn paradigm3(basis: &EigenBasis, f: &DenseMat, p: &FilterPerColumn) -> Result<DenseMat> {
    if p.gs.len() != f.cols() {
        return Err(Error::dims("paradigm3", f.cols(), p.gs.len()));
    }
    let fhat = gft(basis, f)?;
    let mut zhat = fhat.clone();
    for (c, g) in p.gs.iter().enumerate() {
        check_filter(basis, g, "paradigm3")?;
        for (n, &gn) in g.iter().enumerate() {
            zhat.set(n, c, gn * fhat.get(n, c));
        }
    }
    igft(basis, &zhat)
}

/// Sum of one paradigm-1, one paradigm-2 and one paradigm-3 term, each with
/// its own parameters.
pub fn combined_paradigm(
    basis: &EigenBasis,
    f: &DenseMat,
    p: &FilterSingle,
    q: &FilterSingle,
    w: &MixMatrix,
    pc: &FilterPerColumn,
) -> Result<DenseMat> {
    let mut z = paradigm1(basis, f, p)?;
    z.axpy(1.0, &paradigm2(basis, f, q, w)?)?;
    z.axpy(1.0, &paradigm3(basis, f, pc)?)?;
    Ok(z)
}

/// Element form `Z[i, j] = Σ_n Σ_c Ω[i, j, n, c] F[n, c]`, summed with `n`
/// in the outer loop and `c` in the inner loop.
pub fn conv2d_fcn(f: &DenseMat, w: &FcnCoeffs) -> Result<DenseMat> {
    if f.shape() != (w.n(), w.channels()) {
        return Err(Error::dims(
            "conv2d_fcn",
            format!("{:?}", (w.n(), w.channels())),
            format!("{:?}", f.shape()),
        ));
    }
    let (n, cc) = f.shape();
    let mut z = DenseMat::zeros(n, cc);
    for i in 0..n {
        for j in 0..cc {
            let mut acc = 0.0;
            for nn in 0..n {
                for c in 0..cc {
                    acc += w.at(i, j, nn, c) * f.get(nn, c);
                }
            }
            z.set(i, j, acc);
        }
    }
    Ok(z)
}

/// 2-D graph convolution `Z[:, j] = Σ_c Φ_(c,j) F[:, c]`, evaluated in the
/// frequency domain.
pub fn conv2d_block(basis: &EigenBasis, f: &DenseMat, grid: &FilterGrid) -> Result<DenseMat> {
    check_basis(basis, grid.n(), "conv2d_block")?;
    let fhat = gft(basis, f)?;
    igft(basis, &grid.apply_frequency(&fhat)?)
}

/// The same convolution through the explicit `NC × NC` block operator and
/// [`vec`] / [`unvec`]. Quadratic memory in `NC`; meant for small checks.
pub fn conv2d_vec(basis: &EigenBasis, f: &DenseMat, grid: &FilterGrid) -> Result<DenseMat> {
    if f.shape() != (grid.n(), grid.channels()) {
        return Err(Error::dims(
            "conv2d_vec",
            format!("{:?}", (grid.n(), grid.channels())),
            format!("{:?}", f.shape()),
        ));
    }
    let big = grid.block_matrix(basis)?;
    let z = big.matmul(&DenseMat::column_vector(&vec(f)))?;
    unvec(z.as_slice(), f.rows(), f.cols())
}

/// Parameters of a legacy paradigm, for [`specialize_grid`].
#[derive(Debug, Clone)]
pub enum Specialization {
    P1(FilterSingle),
    P2(FilterSingle, MixMatrix),
    P3(FilterPerColumn),
}

/// Expresses a legacy paradigm as a 2-D filter grid.
///
/// * P1: `g_(c,c) = g`, off-diagonal filters zero.
/// * P2: `g_(c,j) = R[c, j] · g`, so that `Z[:, j] = Σ_c R[c, j] Φ F[:, c]`,
///   which is column `j` of `Φ F R`.
/// * P3: `g_(c,c) = g_c`, off-diagonal filters zero.
pub fn specialize_grid(n_channels: usize, kind: &Specialization) -> Result<FilterGrid> {
    match kind {
        Specialization::P1(p) => {
            let mut grid = FilterGrid::zeros(p.g.len(), n_channels);
            for c in 0..n_channels {
                grid.set(c, c, &p.g)?;
            }
            Ok(grid)
        }
        Specialization::P2(p, r) => {
            if r.r.shape() != (n_channels, n_channels) {
                return Err(Error::dims(
                    "specialize_grid",
                    format!("{n_channels}x{n_channels} mixing matrix"),
                    format!("{:?}", r.r.shape()),
                ));
            }
            let mut grid = FilterGrid::zeros(p.g.len(), n_channels);
            for c in 0..n_channels {
                for j in 0..n_channels {
                    let w = r.r.get(c, j);
                    for (dst, &g) in grid.get_mut(c, j).iter_mut().zip(&p.g) {
                        *dst = w * g;
                    }
                }
            }
            Ok(grid)
        }
        Specialization::P3(p) => {
            if p.gs.len() != n_channels {
                return Err(Error::dims("specialize_grid", n_channels, p.gs.len()));
            }
            let n = p.gs.first().map_or(0, Vec::len);
            let mut grid = FilterGrid::zeros(n, n_channels);
            for (c, g) in p.gs.iter().enumerate() {
                grid.set(c, c, g)?;
            }
            Ok(grid)
        }
    }
}

/// Minimum-norm 2-D filter grid that maps `F` exactly onto `Z*`.
///
/// Row `n` of the frequency-domain equations reads
/// `Ẑ*[n, j] = Σ_c g_(c,j)[n] F̂[n, c]`: one equation per output channel
/// with `C` unknowns. Its minimum-norm solution is
/// `g_(c,j)[n] = F̂[n, c] Ẑ*[n, j] / ‖F̂[n, :]‖²`. A row of `F̂` whose largest
/// magnitude is at most [`FULL_SUPPORT_TOL`] has no solution and is
/// reported as [`Error::ZeroFrequencyRow`].
pub fn exact_construct(basis: &EigenBasis, f: &DenseMat, z_star: &DenseMat) -> Result<FilterGrid> {
    if f.shape() != z_star.shape() {
        return Err(Error::dims(
            "exact_construct",
            format!("{:?}", f.shape()),
            format!("{:?}", z_star.shape()),
        ));
    }
    let fhat = gft(basis, f)?;
    let zhat = gft(basis, z_star)?;
    exact_construct_frequency(&fhat, &zhat)
}

/// [`exact_construct`] on signals that are already in the frequency domain.
pub fn exact_construct_frequency(fhat: &DenseMat, zhat: &DenseMat) -> Result<FilterGrid> {
    let (n, cc) = fhat.shape();
    let mut grid = FilterGrid::zeros(n, cc);
    for row in 0..n {
        let fr = fhat.row(row);
        let max_abs = fr.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_abs <= FULL_SUPPORT_TOL {
            return Err(Error::ZeroFrequencyRow { row, max_abs });
        }
        let norm2: f64 = fr.iter().map(|v| v * v).sum();
        for j in 0..cc {
            let zj = zhat.get(row, j);
            for (c, &fc) in fr.iter().enumerate() {
                grid.get_mut(c, j)[row] = fc * zj / norm2;
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_is_column_major() {
        let m = DenseMat::from_rows(&[[1.0, 3.0], [2.0, 4.0]]).unwrap();
        assert_eq!(vec(&m), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(unvec(&vec(&m), 2, 2).unwrap(), m);
        assert_eq!(vec(&DenseMat::from_rows(&[[7.5]]).unwrap()), vec![7.5]);
        assert!(unvec(&[1.0, 2.0, 3.0], 2, 2).is_err());
    }

    #[test]
    fn diagonal_scaling_in_identity_basis() {
        let basis = EigenBasis::identity(2);
        let f = DenseMat::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let z = paradigm1(&basis, &f, &FilterSingle { g: vec![2.0, 3.0] }).unwrap();
        assert_eq!(z, DenseMat::from_rows(&[[2.0, 2.0], [3.0, 3.0]]).unwrap());
    }

    #[test]
    fn exact_construct_hand_example() {
        // One frequency row F̂ = [1, 0] with target row [3, 4].
        let basis = EigenBasis::identity(1);
        let f = DenseMat::from_rows(&[[1.0, 0.0]]).unwrap();
        let z = DenseMat::from_rows(&[[3.0, 4.0]]).unwrap();
        let grid = exact_construct(&basis, &f, &z).unwrap();
        // Output channel 0 draws 3 from input 0, output 1 draws 4 from input 0.
        assert_eq!(grid.get(0, 0), &[3.0]);
        assert_eq!(grid.get(0, 1), &[4.0]);
        assert_eq!(grid.get(1, 0), &[0.0]);
        assert_eq!(grid.get(1, 1), &[0.0]);
        assert_eq!(conv2d_block(&basis, &f, &grid).unwrap(), z);
    }

    #[test]
    fn exact_construct_names_zero_row() {
        let basis = EigenBasis::identity(3);
        let f = DenseMat::from_rows(&[[1.0, 2.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        let err = exact_construct(&basis, &f, &f).unwrap_err();
        assert!(matches!(err, Error::ZeroFrequencyRow { row: 1, .. }));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn identity_grid_and_kernel() {
        let basis = EigenBasis::identity(3);
        let f = DenseMat::from_rows(&[[1.0, -2.0], [0.5, 4.0], [3.0, 0.0]]).unwrap();
        assert_eq!(conv2d_block(&basis, &f, &FilterGrid::identity(3, 2)).unwrap(), f);
        let w = FcnCoeffs::from_fn(3, 2, |i, j, n, c| ((i == n) && (j == c)) as u8 as f64);
        assert_eq!(conv2d_fcn(&f, &w).unwrap(), f);
        assert_eq!(conv2d_fcn(&f, &FcnCoeffs::zeros(3, 2)).unwrap(), DenseMat::zeros(3, 2));
    }

    #[test]
    fn paradigm_labels_round_trip_through_serde() {
        for p in [Paradigm::P1, Paradigm::P2P2, Paradigm::Combined, Paradigm::TiedShared] {
            let s = serde_json::to_string(&p).unwrap();
            assert_eq!(s, format!("\"{}\"", p.label()));
            assert_eq!(serde_json::from_str::<Paradigm>(&s).unwrap(), p);
        }
    }
}
