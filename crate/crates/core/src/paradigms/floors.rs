//! Error floors and infeasibility certificates for the legacy paradigms.
//!
//! All functions work on frequency-domain signals `F̂`, `Ẑ*` (`N × C`).
//! For paradigm 1 the best filter value is a per-row scalar projection, and
//! for paradigm 3 every entry with nonzero support has its own free
//! coefficient. Both floors are therefore exact closed forms. Paradigm 2 is
//! bilinear in `(g, R)`: [`min_error_p2`] runs alternating least squares and
//! reports an upper bound, while [`rank_floor`] gives a certified lower
//! bound from the rank of `F̂`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Paradigm;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::spectral::{eig_sym, gft, singular_values, EigenBasis, DEFAULT_EIG_TOL};

/// A frequency row (or entry) with magnitude at most this is treated as zero.
pub const FULL_SUPPORT_TOL: f64 = 1e-9;

/// Target entries above this magnitude count as support violations when the
/// matching input entry is zero.
pub const VIOLATION_TARGET_TOL: f64 = 1e-6;

/// Singular values above `RANK_REL_TOL · σ_max` count toward numerical rank.
pub const RANK_REL_TOL: f64 = 1e-8;

const P2_SEED: u64 = 0x5EED_0002;

fn check_pair(fhat: &DenseMat, zhat: &DenseMat) {
    assert_eq!(
        fhat.shape(),
        zhat.shape(),
        "frequency-domain input and target must have the same shape"
    );
}

/// Exact minimum of `‖diag(g) F̂ − Ẑ‖_F` over `g`.
///
/// # Panics
/// If the two matrices differ in shape.
pub fn min_error_p1(fhat: &DenseMat, zhat: &DenseMat) -> f64 {
    check_pair(fhat, zhat);
    let mut total = 0.0;
    for n in 0..fhat.rows() {
        let f = fhat.row(n);
        let z = zhat.row(n);
        let ff: f64 = f.iter().map(|v| v * v).sum();
        let zz: f64 = z.iter().map(|v| v * v).sum();
        let fz: f64 = f.iter().zip(z).map(|(a, b)| a * b).sum();
        let g = if ff > 0.0 { fz / ff } else { 0.0 };
        // Residual computed directly rather than as zz - fz²/ff, which
        // cancels catastrophically when the row is nearly feasible.
        let res: f64 = f.iter().zip(z).map(|(a, b)| (g * a - b).powi(2)).sum();
        total += if ff > 0.0 { res } else { zz };
    }
    total.sqrt()
}

/// Exact minimum of `‖[g_c[n] F̂[n, c]] − Ẑ‖_F` over per-channel filters.
///
/// Entries of `F̂` below [`FULL_SUPPORT_TOL`] in magnitude count as zero,
/// matching the support test of the certificates.
///
/// # Panics
/// If the two matrices differ in shape.
pub fn min_error_p3(fhat: &DenseMat, zhat: &DenseMat) -> f64 {
    check_pair(fhat, zhat);
    fhat.as_slice()
        .iter()
        .zip(zhat.as_slice())
        .filter(|(f, _)| f.abs() < FULL_SUPPORT_TOL)
        .fold(0.0, |acc, (_, z)| acc + z * z)
        .sqrt()
}

/// Upper bound on `min ‖diag(g) F̂ R − Ẑ‖_F` by alternating least squares.
///
/// Each restart alternates an exact solve for `R` (pseudo-inverse normal
/// equations) with an exact per-row solve for `g`, so the error never
/// increases within a restart. Restart 0 starts from `g = 1`, later ones
/// from seeded Gaussian draws. Returns the best error seen.
///
/// # Panics
/// If the two matrices differ in shape.
pub fn min_error_p2(fhat: &DenseMat, zhat: &DenseMat, restarts: usize, iters: usize) -> f64 {
    check_pair(fhat, zhat);
    let n = fhat.rows();
    let mut best = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let mut g: Vec<f64> = if r == 0 {
            vec![1.0; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(P2_SEED.wrapping_add(r as u64));
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        for _ in 0..iters.max(1) {
            let y = fhat.scale_rows(&g).expect("row count matches");
            let Some(mix) = least_squares(&y, zhat) else {
                break;
            };
            let p = fhat.matmul(&mix).expect("square mixing matrix");
            for (k, gk) in g.iter_mut().enumerate() {
                let pr = p.row(k);
                let pp: f64 = pr.iter().map(|v| v * v).sum();
                let pz: f64 = pr.iter().zip(zhat.row(k)).map(|(a, b)| a * b).sum();
                *gk = if pp > 0.0 { pz / pp } else { 0.0 };
            }
            let err = p
                .scale_rows(&g)
                .expect("row count matches")
                .sub(zhat)
                .expect("same shape")
                .frobenius_norm();
            best = best.min(err);
        }
    }
    best
}

/// Minimum-norm least-squares solution of `y · X ≈ z` through the
/// pseudo-inverse of `yᵀy`.
fn least_squares(y: &DenseMat, z: &DenseMat) -> Option<DenseMat> {
    let gram = y.t_matmul(y).ok()?;
    let rhs = y.t_matmul(z).ok()?;
    let eig = eig_sym(&gram, DEFAULT_EIG_TOL).ok()?;
    let top = eig.lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let inv: Vec<f64> = eig
        .lambda
        .iter()
        .map(|&l| if top > 0.0 && l > 1e-12 * top { 1.0 / l } else { 0.0 })
        .collect();
    let proj = eig.u.t_matmul(&rhs).ok()?.scale_rows(&inv).ok()?;
    eig.u.matmul(&proj).ok()
}

/// Certified lower bound on the error of any sum of `terms` paradigm-2
/// outputs.
///
/// Each term `diag(g) F̂ R` has rank at most `rank(F̂)`, so the sum has rank
/// at most `terms · rank(F̂)`. By the Eckart–Young theorem the error is at
/// least the norm of the singular values of `Ẑ` beyond that rank.
pub fn rank_floor(fhat: &DenseMat, zhat: &DenseMat, terms: usize) -> Result<f64> {
    if fhat.shape() != zhat.shape() {
        return Err(Error::dims(
            "rank_floor",
            format!("{:?}", fhat.shape()),
            format!("{:?}", zhat.shape()),
        ));
    }
    let r = rank_of(fhat)?;
    let sv = singular_values(zhat)?;
    Ok(sv.iter().skip(terms * r).fold(0.0, |acc, s| acc + s * s).sqrt())
}

fn rank_of(m: &DenseMat) -> Result<usize> {
    let sv = singular_values(m)?;
    let Some(&top) = sv.first() else {
        return Ok(0);
    };
    Ok(sv.iter().filter(|&&s| top > 0.0 && s > RANK_REL_TOL * top).count())
}

/// Outcome of [`infeasibility_certificates`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificates {
    pub rank_f: usize,
    pub rank_z: usize,
    /// Entries `(n, c)` where `F̂` vanishes but `Ẑ*` does not.
    pub violations: Vec<(usize, usize)>,
    /// Paradigms proven unable to reach the target, in ascending order.
    pub infeasible: Vec<Paradigm>,
}

impl Certificates {
    pub fn flags(&self, p: Paradigm) -> bool {
        self.infeasible.contains(&p)
    }
}

/// Rank and support certificates for the pair `(F, Z*)`.
///
/// * P1 is infeasible if `rank Z* > rank F` or the violation set is nonempty.
/// * P2 is infeasible if `rank Z* > rank F`.
/// * P3 is infeasible if the violation set is nonempty.
/// * P2+P2 is infeasible if `rank Z* > 2 · rank F`.
pub fn infeasibility_certificates(f: &DenseMat, z_star: &DenseMat, basis: &EigenBasis) -> Result<Certificates> {
    if f.shape() != z_star.shape() {
        return Err(Error::dims(
            "infeasibility_certificates",
            format!("{:?}", f.shape()),
            format!("{:?}", z_star.shape()),
        ));
    }
    let fhat = gft(basis, f)?;
    let zhat = gft(basis, z_star)?;
    certificates_frequency(&fhat, &zhat)
}

/// [`infeasibility_certificates`] on frequency-domain signals.
pub fn certificates_frequency(fhat: &DenseMat, zhat: &DenseMat) -> Result<Certificates> {
    let rank_f = rank_of(fhat)?;
    let rank_z = rank_of(zhat)?;
    let mut violations = Vec::new();
    for n in 0..fhat.rows() {
        for c in 0..fhat.cols() {
            if fhat.get(n, c).abs() < FULL_SUPPORT_TOL && zhat.get(n, c).abs() > VIOLATION_TARGET_TOL {
                violations.push((n, c));
            }
        }
    }
    let rank_gap = rank_z > rank_f;
    let mut infeasible = Vec::new();
    if rank_gap || !violations.is_empty() {
        infeasible.push(Paradigm::P1);
    }
    if rank_gap {
        infeasible.push(Paradigm::P2);
    }
    if !violations.is_empty() {
        infeasible.push(Paradigm::P3);
    }
    if rank_z > 2 * rank_f {
        infeasible.push(Paradigm::P2P2);
    }
    Ok(Certificates {
        rank_f,
        rank_z,
        violations,
        infeasible,
    })
}
