//! Runtime self-checks behind `spectral2d verify`.
//!
//! Each check draws seeded random instances and compares two independent
//! routes to the same quantity. The suites are small enough to run in a few
//! seconds and are meant for checking a build on a new machine.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chebyshev::{
    cheb_eval, cheb_nodes, cheb_series_apply, conv2d_cheb, grid_from_theta, interpolate, CoeffTensor,
};
use crate::data_io::gnm_graph;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, shifted_laplacian, Graph};
use crate::model::{backward, init_params_with, ConvKind, Mode, ThetaInit};
use crate::paradigms::{
    conv2d_block, conv2d_fcn, conv2d_vec, exact_construct, paradigm1, paradigm2, paradigm3, specialize_grid, FcnCoeffs,
    FilterGrid, FilterPerColumn, FilterSingle, MixMatrix, Specialization,
};
use crate::spectral::{eig_sym, gft, igft, EigenBasis, DEFAULT_EIG_TOL};

/// Which suites to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Spectral,
    Paradigms,
    Chebyshev,
    Model,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Scope::All),
            "spectral" => Ok(Scope::Spectral),
            "paradigms" => Ok(Scope::Paradigms),
            "chebyshev" => Ok(Scope::Chebyshev),
            "model" => Ok(Scope::Model),
            other => Err(Error::InvalidInput(format!(
                "unknown verify scope '{other}' (expected all, spectral, paradigms, chebyshev or model)"
            ))),
        }
    }
}

/// Outcome of one check: the worst observed error against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst.is_finite() && self.worst < self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<10} {:<34} worst {:.3e}  tol {:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

/// Runs the suites selected by `scope`.
pub fn run_checks(scope: Scope, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    if matches!(scope, Scope::All | Scope::Spectral) {
        out.extend(spectral_suite(seed)?);
    }
    if matches!(scope, Scope::All | Scope::Paradigms) {
        out.extend(paradigm_suite(seed)?);
    }
    if matches!(scope, Scope::All | Scope::Chebyshev) {
        out.extend(chebyshev_suite(seed)?);
    }
    if matches!(scope, Scope::All | Scope::Model) {
        out.extend(model_suite(seed)?);
    }
    Ok(out)
}

fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMat {
    DenseMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Result<Graph> {
    let max = n * (n - 1) / 2;
    let m = rng.gen_range(n.min(max)..=max);
    gnm_graph(n, m, rng.gen())
}

fn random_basis(rng: &mut ChaCha8Rng, n: usize) -> Result<EigenBasis> {
    EigenBasis::of_graph(&random_graph(rng, n)?)
}

fn random_grid(rng: &mut ChaCha8Rng, n: usize, c: usize) -> FilterGrid {
    let mut grid = FilterGrid::zeros(n, c);
    for ci in 0..c {
        for j in 0..c {
            for v in grid.get_mut(ci, j) {
                *v = rng.sample(StandardNormal);
            }
        }
    }
    grid
}

fn spectral_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut recon, mut ortho, mut range, mut round) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let n = rng.gen_range(2..=12);
        let a = gauss(&mut rng, n, n);
        let sym = a.add(&a.transpose())?;
        let eig = eig_sym(&sym, DEFAULT_EIG_TOL)?;
        recon = recon.max(eig.reconstruct().max_abs_diff(&sym) / sym.max_abs().max(1.0));
        ortho = ortho.max(eig.u.t_matmul(&eig.u)?.max_abs_diff(&DenseMat::identity(n)));

        let basis = random_basis(&mut rng, n)?;
        let lo = basis.lambda.first().copied().unwrap_or(0.0);
        let hi = basis.lambda.last().copied().unwrap_or(0.0);
        range = range.max((-lo).max(0.0)).max((hi - 2.0).max(0.0));
        let f = gauss(&mut rng, n, 3);
        round = round.max(igft(&basis, &gft(&basis, &f)?)?.max_abs_diff(&f));
    }
    Ok(vec![
        Check {
            suite: "spectral",
            name: "eigen reconstruction",
            worst: recon,
            tolerance: 1e-10,
        },
        Check {
            suite: "spectral",
            name: "eigenvector orthonormality",
            worst: ortho,
            tolerance: 1e-10,
        },
        Check {
            suite: "spectral",
            name: "laplacian spectrum in [0, 2]",
            worst: range,
            tolerance: 1e-10,
        },
        Check {
            suite: "spectral",
            name: "gft round trip",
            worst: round,
            tolerance: 1e-10,
        },
    ])
}

fn paradigm_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    let (mut fcn, mut vecr, mut spec, mut exact) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let c = rng.gen_range(1..=4);
        let basis = random_basis(&mut rng, n)?;
        let f = gauss(&mut rng, n, c);
        let grid = random_grid(&mut rng, n, c);
        let block = conv2d_block(&basis, &f, &grid)?;
        fcn = fcn.max(conv2d_fcn(&f, &FcnCoeffs::from_grid(&basis, &grid)?)?.max_abs_diff(&block));
        vecr = vecr.max(conv2d_vec(&basis, &f, &grid)?.max_abs_diff(&block));

        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let p = FilterSingle { g };
        let r = MixMatrix {
            r: gauss(&mut rng, c, c),
        };
        let pc = FilterPerColumn {
            gs: (0..c)
                .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
                .collect(),
        };
        let pairs = [
            (Specialization::P1(p.clone()), paradigm1(&basis, &f, &p)?),
            (Specialization::P2(p.clone(), r.clone()), paradigm2(&basis, &f, &p, &r)?),
            (Specialization::P3(pc.clone()), paradigm3(&basis, &f, &pc)?),
        ];
        for (kind, native) in pairs {
            let via_grid = conv2d_block(&basis, &f, &specialize_grid(c, &kind)?)?;
            spec = spec.max(via_grid.max_abs_diff(&native));
        }

        let z = gauss(&mut rng, n, c);
        let built = exact_construct(&basis, &f, &z)?;
        exact = exact.max(conv2d_block(&basis, &f, &built)?.sub(&z)?.frobenius_norm());
    }
    Ok(vec![
        Check {
            suite: "paradigms",
            name: "fcn and block routes agree",
            worst: fcn,
            tolerance: 1e-10,
        },
        Check {
            suite: "paradigms",
            name: "vec and block routes agree",
            worst: vecr,
            tolerance: 1e-10,
        },
        Check {
            suite: "paradigms",
            name: "specializations match natives",
            worst: spec,
            tolerance: 1e-10,
        },
        Check {
            suite: "paradigms",
            name: "exact construction residual",
            worst: exact,
            tolerance: 1e-8,
        },
    ])
}

fn chebyshev_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
    let mut interp = 0.0_f64;
    for d in 0..=16 {
        let nodes = cheb_nodes(d);
        for k in 0..=d {
            let samples: Vec<f64> = nodes.nodes.iter().map(|&x| cheb_eval(k, x)).collect();
            let coeffs = interpolate(&samples)?;
            for (i, &a) in coeffs.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                interp = interp.max((a - want).abs());
            }
        }
    }
    let (mut path, mut clenshaw) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let n = rng.gen_range(3..=16);
        let c = rng.gen_range(1..=3);
        let d = rng.gen_range(0..=6);
        let graph = random_graph(&mut rng, n)?;
        let lhat = shifted_laplacian(&normalized_laplacian(&graph));
        let basis = EigenBasis::of_graph(&graph)?;
        let lambda_hat: Vec<f64> = basis.lambda.iter().map(|l| l - 1.0).collect();
        let theta = CoeffTensor::from_fn(c, d, |_, _, _| rng.sample(StandardNormal));
        let f = gauss(&mut rng, n, c);
        let fast = conv2d_cheb(&lhat, &f, &theta)?;
        let slow = conv2d_block(&basis, &f, &grid_from_theta(&theta, &lambda_hat))?;
        path = path.max(fast.max_abs_diff(&slow));

        let ys: Vec<DenseMat> = (0..=d).map(|_| gauss(&mut rng, n, c)).collect();
        let mut direct = DenseMat::zeros(n, c);
        for (k, y) in ys.iter().enumerate() {
            let tk: Vec<f64> = lambda_hat.iter().map(|&l| cheb_eval(k, l)).collect();
            direct.axpy(1.0, &igft(&basis, &gft(&basis, y)?.scale_rows(&tk)?)?)?;
        }
        clenshaw = clenshaw.max(cheb_series_apply(&lhat, &ys)?.max_abs_diff(&direct));
    }
    Ok(vec![
        Check {
            suite: "chebyshev",
            name: "interpolation reproduces T_k",
            worst: interp,
            tolerance: 1e-10,
        },
        Check {
            suite: "chebyshev",
            name: "recurrence matches spectral path",
            worst: path,
            tolerance: 1e-8,
        },
        Check {
            suite: "chebyshev",
            name: "clenshaw matches eigen sum",
            worst: clenshaw,
            tolerance: 1e-8,
        },
    ])
}

fn model_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x33);
    let mut worst = 0.0_f64;
    for inst in 0..5 {
        let n = 8;
        let (k, h, c, d) = (3, 5, 3, 3);
        let graph = random_graph(&mut rng, n)?;
        let lhat = shifted_laplacian(&normalized_laplacian(&graph));
        let x = gauss(&mut rng, n, k);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let mask: Vec<bool> = (0..n).map(|i| i % 3 != 2).collect();
        let mut params = init_params_with(k, h, c, d, seed + inst, ThetaInit::Random, ConvKind::TwoD)?;
        for v in params.mlp.b1.iter_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
        let mode = Mode::Train {
            seed: inst,
            epoch: 1,
            dropout: 0.3,
        };
        let (_, grads) = backward(&params, &lhat, &x, &labels, &mask, mode)?;
        let analytic: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();
        let mut idx = 0;
        for block in 0..5 {
            let len = params.slices()[block].len();
            for i in 0..len {
                let step = 1e-5;
                let orig = params.slices()[block][i];
                params.slices_mut()[block][i] = orig + step;
                let up = crate::model::loss_ce(&crate::model::forward(&params, &lhat, &x, mode)?, &labels, &mask)?;
                params.slices_mut()[block][i] = orig - step;
                let down = crate::model::loss_ce(&crate::model::forward(&params, &lhat, &x, mode)?, &labels, &mask)?;
                params.slices_mut()[block][i] = orig;
                let numeric = (up - down) / (2.0 * step);
                let diff = (analytic[idx] - numeric).abs();
                worst = worst.max(diff / analytic[idx].abs().max(numeric.abs()).max(1e-7));
                idx += 1;
            }
        }
    }
    Ok(vec![Check {
        suite: "model",
        name: "gradient matches differences",
        worst,
        tolerance: 1e-4,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        let checks = run_checks(Scope::All, 7).unwrap();
        assert_eq!(checks.len(), 12);
        for c in &checks {
            assert!(c.passed(), "{c}");
        }
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("model".parse::<Scope>().unwrap(), Scope::Model);
        assert!("everything".parse::<Scope>().is_err());
    }
}
