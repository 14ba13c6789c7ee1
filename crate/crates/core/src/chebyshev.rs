//! Chebyshev nodes, interpolation and the Chebyshev-interpolated 2-D
//! convolution.
//!
//! The interpolation nodes are the `D + 1` zeros of `T_{D+1}`,
//! `x_b = cos((b + ½)π / (D + 1))`. Classical interpolation maps samples
//! `g(x_b)` to coefficients `θ_d = 2/(D+1) · Σ_b g(x_b) T_d(x_b)` with the
//! first coefficient halved ([`interpolate`]).
//!
//! The learnable convolution treats the samples themselves as parameters:
//! a [`CoeffTensor`] `Θ` of shape `C × C × (D+1)` holds one sample per node
//! for every channel pair, and
//!
//! ```text
//! Z = Σ_d T_d(L̂) F M_d,    M_d = Σ_b T_d(x_b) Θ[:, :, b]
//! ```
//!
//! The factor `2/(D+1)` of the classical map is absorbed into `Θ` and
//! appears nowhere in [`conv2d_cheb`] or [`grid_from_theta`]. With this
//! convention `Θ[:, :, b] = I` for every `b` gives `Z = (D+1) F`, because
//! the node sums `Σ_b T_d(x_b)` vanish for `1 ≤ d ≤ D`.
//!
//! `T_d(L̂) F` is produced by the three-term recurrence on `N × C` blocks;
//! the operator `T_d(L̂)` is never formed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::{spmm, spmm_into, SparseSym};
use crate::paradigms::FilterGrid;

/// The `D + 1` Chebyshev nodes of degree `D`, in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebNodes {
    pub degree: usize,
    pub nodes: Vec<f64>,
}

impl ChebNodes {
    /// `table[d][b] = T_d(x_b)` for `d, b ∈ 0..=D`.
    pub fn t_table(&self) -> Vec<Vec<f64>> {
        (0..=self.degree)
            .map(|d| self.nodes.iter().map(|&x| cheb_eval(d, x)).collect())
            .collect()
    }
}

/// Zeros of `T_{D+1}`.
pub fn cheb_nodes(d: usize) -> ChebNodes {
    let m = (d + 1) as f64;
    ChebNodes {
        degree: d,
        nodes: (0..=d).map(|b| ((b as f64 + 0.5) * PI / m).cos()).collect(),
    }
}

/// `T_d(x)` by the three-term recurrence.
pub fn cheb_eval(d: usize, x: f64) -> f64 {
    match d {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..d {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Evaluates `Σ_d c_d T_d(x)` by Clenshaw's recurrence.
pub fn cheb_series(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Classical interpolation coefficients from samples at [`cheb_nodes`].
///
/// Returns `θ'` with `θ'_0 = θ_0 / 2`, so that `Σ_d θ'_d T_d(x_b) = g(x_b)`
/// at every node.
pub fn interpolate(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("interpolate needs at least one sample".into()));
    }
    let d = samples.len() - 1;
    let nodes = cheb_nodes(d);
    let scale = 2.0 / (d + 1) as f64;
    let mut theta: Vec<f64> = (0..=d)
        .map(|k| {
            scale
                * samples
                    .iter()
                    .zip(&nodes.nodes)
                    .map(|(&g, &x)| g * cheb_eval(k, x))
                    .sum::<f64>()
        })
        .collect();
    theta[0] *= 0.5;
    Ok(theta)
}

/// Node samples that make the absorbed-constant convolution reproduce the
/// polynomial `Σ_k c_k T_k` exactly.
///
/// Under the absorbed convention the effective filter coefficient of `T_d`
/// is `Σ_b T_d(x_b) θ_b`. Discrete orthogonality of `T_d` on the nodes
/// gives `θ_b = Σ_k c_k w_k T_k(x_b)` with `w_0 = 1/(D+1)` and
/// `w_k = 2/(D+1)` otherwise. `coeffs.len()` must not exceed `d + 1`.
pub fn samples_for_polynomial(coeffs: &[f64], d: usize) -> Result<Vec<f64>> {
    if coeffs.len() > d + 1 {
        return Err(Error::InvalidInput(format!(
            "polynomial of degree {} cannot be reproduced at degree {d}",
            coeffs.len() - 1
        )));
    }
    let m = (d + 1) as f64;
    let nodes = cheb_nodes(d);
    Ok(nodes
        .nodes
        .iter()
        .map(|&x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let w = if k == 0 { 1.0 / m } else { 2.0 / m };
                    c * w * cheb_eval(k, x)
                })
                .sum()
        })
        .collect())
}

/// `Θ` with entry `(c, j, b)` the node-`b` sample of the filter from input
/// channel `c` to output channel `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTensor {
    channels: usize,
    degree: usize,
    data: Vec<f64>,
}

impl CoeffTensor {
    pub fn zeros(channels: usize, degree: usize) -> Self {
        CoeffTensor {
            channels,
            degree,
            data: vec![0.0; channels * channels * (degree + 1)],
        }
    }

    /// `Θ[:, :, b] = I` for every `b`.
    pub fn identity(channels: usize, degree: usize) -> Self {
        let mut t = Self::zeros(channels, degree);
        for c in 0..channels {
            for b in 0..=degree {
                t.set(c, c, b, 1.0);
            }
        }
        t
    }

    pub fn from_fn(channels: usize, degree: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(channels, degree);
        for c in 0..channels {
            for j in 0..channels {
                for b in 0..=degree {
                    t.set(c, j, b, f(c, j, b));
                }
            }
        }
        t
    }

    /// Wraps a flat buffer laid out as `((c · C) + j) · (D+1) + b`.
    pub fn from_vec(channels: usize, degree: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * channels * (degree + 1) {
            return Err(Error::dims(
                "CoeffTensor::from_vec",
                channels * channels * (degree + 1),
                data.len(),
            ));
        }
        Ok(CoeffTensor { channels, degree, data })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn idx(&self, c: usize, j: usize, b: usize) -> usize {
        (c * self.channels + j) * (self.degree + 1) + b
    }

    pub fn get(&self, c: usize, j: usize, b: usize) -> f64 {
        self.data[self.idx(c, j, b)]
    }

    pub fn set(&mut self, c: usize, j: usize, b: usize, v: f64) {
        let i = self.idx(c, j, b);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `M_d = Σ_b T_d(x_b) Θ[:, :, b]` for `d = 0..=D`.
    pub fn mixing_matrices(&self) -> Vec<DenseMat> {
        let table = cheb_nodes(self.degree).t_table();
        table
            .iter()
            .map(|td| {
                DenseMat::from_fn(self.channels, self.channels, |c, j| {
                    td.iter().enumerate().map(|(b, &t)| t * self.get(c, j, b)).sum()
                })
            })
            .collect()
    }
}

/// `[T_0(L̂)F, …, T_{d_max}(L̂)F]` by the three-term recurrence.
pub fn cheb_basis_mats(lhat: &SparseSym, f: &DenseMat, d_max: usize) -> Result<Vec<DenseMat>> {
    if lhat.dim() != f.rows() {
        return Err(Error::dims("cheb_basis_mats", lhat.dim(), f.rows()));
    }
    let mut out = Vec::with_capacity(d_max + 1);
    out.push(f.clone());
    if d_max == 0 {
        return Ok(out);
    }
    out.push(spmm(lhat, f)?);
    let mut scratch = DenseMat::zeros(f.rows(), f.cols());
    for d in 1..d_max {
        spmm_into(lhat, &out[d], &mut scratch)?;
        let prev = out[d - 1].as_slice();
        let next: Vec<f64> = scratch
            .as_slice()
            .iter()
            .zip(prev)
            .map(|(&lb, &p)| 2.0 * lb - p)
            .collect();
        out.push(DenseMat::from_vec(f.rows(), f.cols(), next)?);
    }
    Ok(out)
}

/// `Σ_d T_d(L̂) Y_d` by the matrix Clenshaw recurrence, using `len − 1`
/// sparse products.
pub fn cheb_series_apply(lhat: &SparseSym, ys: &[DenseMat]) -> Result<DenseMat> {
    let Some(first) = ys.first() else {
        return Err(Error::InvalidInput("empty Chebyshev series".into()));
    };
    let shape = first.shape();
    if lhat.dim() != shape.0 {
        return Err(Error::dims("cheb_series_apply", lhat.dim(), shape.0));
    }
    if let Some(bad) = ys.iter().find(|y| y.shape() != shape) {
        return Err(Error::dims(
            "cheb_series_apply",
            format!("{shape:?}"),
            format!("{:?}", bad.shape()),
        ));
    }
    let mut b1 = DenseMat::zeros(shape.0, shape.1);
    let mut b2 = DenseMat::zeros(shape.0, shape.1);
    let mut lb = DenseMat::zeros(shape.0, shape.1);
    for y in ys.iter().skip(1).rev() {
        spmm_into(lhat, &b1, &mut lb)?;
        let b0: Vec<f64> = y
            .as_slice()
            .iter()
            .zip(lb.as_slice())
            .zip(b2.as_slice())
            .map(|((&yv, &l), &p)| yv + 2.0 * l - p)
            .collect();
        b2 = std::mem::replace(&mut b1, DenseMat::from_vec(shape.0, shape.1, b0)?);
    }
    spmm_into(lhat, &b1, &mut lb)?;
    let out: Vec<f64> = first
        .as_slice()
        .iter()
        .zip(lb.as_slice())
        .zip(b2.as_slice())
        .map(|((&yv, &l), &p)| yv + l - p)
        .collect();
    DenseMat::from_vec(shape.0, shape.1, out)
}

fn check_theta(f: &DenseMat, theta: &CoeffTensor, op: &'static str) -> Result<()> {
    if theta.channels() != f.cols() {
        return Err(Error::dims(op, format!("{} channels", f.cols()), theta.channels()));
    }
    Ok(())
}

/// `Z = Σ_d T_d(L̂) F M_d` with the interpolation constant absorbed into `Θ`.
pub fn conv2d_cheb(lhat: &SparseSym, f: &DenseMat, theta: &CoeffTensor) -> Result<DenseMat> {
    check_theta(f, theta, "conv2d_cheb")?;
    let basis = cheb_basis_mats(lhat, f, theta.degree())?;
    combine_basis(&basis, &theta.mixing_matrices())
}

/// `Σ_d B_d M_d`, accumulated in ascending `d`.
pub fn combine_basis(basis: &[DenseMat], mixing: &[DenseMat]) -> Result<DenseMat> {
    if basis.len() != mixing.len() || basis.is_empty() {
        return Err(Error::dims("combine_basis", basis.len(), mixing.len()));
    }
    let mut z = basis[0].matmul(&mixing[0])?;
    for (b, m) in basis.iter().zip(mixing).skip(1) {
        z.axpy(1.0, &b.matmul(m)?)?;
    }
    Ok(z)
}

/// The spectral filter grid realized by `Θ` on eigenvalues `lambda_hat` of
/// `L̂`: `g_(c,j)(λ̂) = Σ_d Σ_b Θ[c, j, b] T_d(x_b) T_d(λ̂)`.
pub fn grid_from_theta(theta: &CoeffTensor, lambda_hat: &[f64]) -> FilterGrid {
    let mixing = theta.mixing_matrices();
    let n = lambda_hat.len();
    let c = theta.channels();
    let mut grid = FilterGrid::zeros(n, c);
    let tl: Vec<Vec<f64>> = (0..=theta.degree())
        .map(|d| lambda_hat.iter().map(|&l| cheb_eval(d, l)).collect())
        .collect();
    for ci in 0..c {
        for j in 0..c {
            let g = grid.get_mut(ci, j);
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = mixing.iter().zip(&tl).map(|(m, t)| m.get(ci, j) * t[k]).sum();
            }
        }
    }
    grid
}
