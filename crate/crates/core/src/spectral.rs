//! Symmetric eigendecomposition and the graph Fourier transform.
//!
//! The eigensolver is a cyclic Jacobi method: sweeps visit the pairs
//! `(p, q)` with `p < q` in lexicographic order, each rotation annihilates
//! `a_pq`, and the accumulated rotations form the eigenvector matrix. The
//! method is `O(N³)` per sweep and intended for verification-scale inputs
//! (a few hundred nodes). Output is deterministic: eigenvalues ascend, and
//! each eigenvector is sign-fixed so that its first entry with magnitude
//! above `1e-12` is positive.
//!
//! With the basis in hand the graph Fourier transform is `f̂ = Uᵀ f`, its
//! inverse is `f = U f̂`, and a spectral filter `g` acts as `U diag(g) Uᵀ f`.

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, Graph};

/// Default off-diagonal tolerance for [`eig_sym`].
pub const DEFAULT_EIG_TOL: f64 = 1e-12;

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

const SYMMETRY_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-12;

/// Orthonormal eigenvectors (columns of `u`) with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub u: DenseMat,
    pub lambda: Vec<f64>,
}

impl EigenBasis {
    /// The standard basis with all eigenvalues zero. Frequency-domain
    /// experiments use it so that `F̂ = F`.
    pub fn identity(n: usize) -> Self {
        EigenBasis {
            u: DenseMat::identity(n),
            lambda: vec![0.0; n],
        }
    }

    /// Number of nodes.
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Eigendecomposition of the normalized Laplacian of `g`.
    pub fn of_graph(g: &Graph) -> Result<Self> {
        eig_sym(&normalized_laplacian(g).to_dense(), DEFAULT_EIG_TOL)
    }

    /// Rebuilds `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> DenseMat {
        let scaled = self
            .u
            .transpose()
            .scale_rows(&self.lambda)
            .expect("lambda length matches U");
        self.u.matmul(&scaled).expect("square factors")
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Terminates once the off-diagonal Frobenius norm drops below
/// `tol · max(1, ‖m‖_F)`. Inputs whose norm is at most one therefore meet
/// the absolute bound `tol`.
pub fn eig_sym(m: &DenseMat, tol: f64) -> Result<EigenBasis> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::dims("eig_sym", "square matrix", format!("{:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eig_sym input"));
    }
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let dev = (m.get(i, j) - m.get(j, i)).abs();
            if dev > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    deviation: dev,
                });
            }
        }
    }

    // Work on the exactly symmetrized copy.
    let mut a = DenseMat::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    // Rows of `vt` accumulate the eigenvectors.
    let mut vt = DenseMat::identity(n);
    let threshold = tol * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // Rutishauser's rule: once the element no longer perturbs
                // either diagonal entry, drop it instead of rotating.
                let small = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + small == app.abs() && aqq.abs() + small == aqq.abs() {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                rotate(&mut a, &mut vt, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)).then(i.cmp(&j)));
    let lambda: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut u = DenseMat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = vt.row(src);
        let flip = v.iter().find(|x| x.abs() > SIGN_TOL).is_some_and(|&x| x < 0.0);
        for (row, &x) in v.iter().enumerate() {
            u.set(row, col, if flip { -x } else { x });
        }
    }
    Ok(EigenBasis { u, lambda })
}

fn off_diagonal_norm(a: &DenseMat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for (j, v) in a.row(i).iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`, applied on both sides of `a` and
/// accumulated into the rows of `vt`.
fn rotate(a: &mut DenseMat, vt: &mut DenseMat, p: usize, q: usize) {
    let n = a.rows();
    let apq = a.get(p, q);
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a.set(p, p, a.get(p, p) - t * apq);
    a.set(q, q, a.get(q, q) + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let g = a.get(k, p);
        let h = a.get(k, q);
        let new_p = g - s * (h + g * tau);
        let new_q = h + s * (g - h * tau);
        a.set(k, p, new_p);
        a.set(p, k, new_p);
        a.set(k, q, new_q);
        a.set(q, k, new_q);
    }
    let cols = vt.cols();
    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * cols);
    let row_p = &mut lo[p * cols..(p + 1) * cols];
    let row_q = &mut hi[..cols];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let g = *vp;
        let h = *vq;
        *vp = g - s * (h + g * tau);
        *vq = h + s * (g - h * tau);
    }
}

/// Graph Fourier transform `Uᵀ f`, column by column.
pub fn gft(basis: &EigenBasis, f: &DenseMat) -> Result<DenseMat> {
    if basis.u.rows() != f.rows() {
        return Err(Error::dims("gft", basis.u.rows(), f.rows()));
    }
    basis.u.t_matmul(f)
}

/// Inverse transform `U f̂`.
pub fn igft(basis: &EigenBasis, fhat: &DenseMat) -> Result<DenseMat> {
    if basis.u.cols() != fhat.rows() {
        return Err(Error::dims("igft", basis.u.cols(), fhat.rows()));
    }
    basis.u.matmul(fhat)
}

/// Spectral filtering `U diag(g) Uᵀ f`.
pub fn apply_operator(basis: &EigenBasis, g: &[f64], f: &DenseMat) -> Result<DenseMat> {
    if g.len() != basis.dim() {
        return Err(Error::dims("apply_operator", basis.dim(), g.len()));
    }
    let fhat = gft(basis, f)?;
    igft(basis, &fhat.scale_rows(g)?)
}

/// Singular values of `m` in descending order.
///
/// They are read off the eigenvalues of the symmetric Jordan–Wielandt
/// matrix `[[0, m], [mᵀ, 0]]`, whose spectrum is `±σ_i` padded with zeros.
/// Unlike the Gram matrix `mᵀm`, this keeps small singular values at full
/// relative accuracy instead of squaring them below machine precision.
pub fn singular_values(m: &DenseMat) -> Result<Vec<f64>> {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut jw = DenseMat::zeros(r + c, r + c);
    for i in 0..r {
        for j in 0..c {
            let v = m.get(i, j);
            jw.set(i, r + j, v);
            jw.set(r + j, i, v);
        }
    }
    let eig = eig_sym(&jw, DEFAULT_EIG_TOL)?;
    let mut sv: Vec<f64> = eig.lambda.iter().rev().take(k).map(|&v| v.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DenseMat, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let Some(&smax) = sv.first() else {
        return Ok(0);
    };
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * smax).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_sorts_and_permutes() {
        let e = eig_sym(&DenseMat::from_diag(&[3.0, 1.0, 2.0]), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.lambda, vec![1.0, 2.0, 3.0]);
        let want = DenseMat::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(e.u, want);
    }

    #[test]
    fn k2_laplacian() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let e = EigenBasis::of_graph(&g).unwrap();
        assert!((e.lambda[0]).abs() < 1e-15 && (e.lambda[1] - 2.0).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        let want = DenseMat::from_rows(&[[h, h], [h, -h]]).unwrap();
        assert!(e.u.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn p3_spectrum() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let e = EigenBasis::of_graph(&g).unwrap();
        for (got, want) in e.lambda.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DenseMat::from_rows(&[[1.0, 2.0], [2.5, 1.0]]).unwrap();
        assert!(matches!(eig_sym(&m, DEFAULT_EIG_TOL), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // diag(3, 2) padded with a zero row.
        let m = DenseMat::from_rows(&[[0.0, 2.0], [3.0, 0.0], [0.0, 0.0]]).unwrap();
        let sv = singular_values(&m).unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        assert_eq!(numerical_rank(&m, 1e-8).unwrap(), 2);
        assert_eq!(numerical_rank(&DenseMat::zeros(3, 2), 1e-8).unwrap(), 0);
    }
}
