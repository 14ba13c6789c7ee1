//! Frequency-domain construction problems and a multi-start Adam optimizer.
//!
//! Every paradigm is expressed as a map from a flat parameter vector to a
//! predicted `Ẑ` given a fixed `F̂`. The optimizer minimizes `½‖Ẑ' − Ẑ*‖²_F`
//! and reports the smallest Frobenius error seen.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::paradigms::Paradigm;
use crate::spectral::{eig_sym, DEFAULT_EIG_TOL};

/// One filter value `g_(input, output)[n]` of a 2-D filter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPos {
    pub n: usize,
    pub input: usize,
    pub output: usize,
}

/// Restrictions on a 2-D filter grid: positions pinned to constants and
/// groups of positions forced to share one value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ties {
    pub constants: Vec<(GridPos, f64)>,
    pub shared: Vec<Vec<GridPos>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Free(usize),
    Const(f64),
}

/// Grid positions mapped onto free parameters or constants.
#[derive(Debug, Clone)]
struct GridLayout {
    slots: Vec<Slot>,
    n_free: usize,
}

impl GridLayout {
    fn new(n: usize, c: usize, ties: &Ties) -> Result<Self> {
        let idx = |p: &GridPos| -> Result<usize> {
            if p.n >= n || p.input >= c || p.output >= c {
                return Err(Error::InvalidInput(format!(
                    "tie position {p:?} outside an {n}x{c} grid"
                )));
            }
            Ok((p.n * c + p.input) * c + p.output)
        };
        let mut slots = vec![None; n * c * c];
        let mut next = 0;
        for (p, v) in &ties.constants {
            slots[idx(p)?] = Some(Slot::Const(*v));
        }
        for group in &ties.shared {
            for p in group {
                let i = idx(p)?;
                if slots[i].is_some() {
                    return Err(Error::InvalidInput(format!("grid position {p:?} tied twice")));
                }
                slots[i] = Some(Slot::Free(next));
            }
            next += 1;
        }
        let slots = slots
            .into_iter()
            .map(|s| {
                s.unwrap_or_else(|| {
                    next += 1;
                    Slot::Free(next - 1)
                })
            })
            .collect();
        Ok(GridLayout { slots, n_free: next })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    P1,
    P2,
    P3,
    P2P2,
    Combined,
    Grid(GridLayout),
}

/// A paradigm's parameterization over a fixed `F̂`.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    fhat: &'a DenseMat,
    kind: Kind,
}

impl<'a> Problem<'a> {
    /// `ties` is consulted only by the tied grid paradigms and the plain
    /// 2-D grid (which ignores it).
    pub fn new(paradigm: Paradigm, fhat: &'a DenseMat, ties: Option<&Ties>) -> Result<Self> {
        let (n, c) = fhat.shape();
        let kind = match paradigm {
            Paradigm::P1 => Kind::P1,
            Paradigm::P2 => Kind::P2,
            Paradigm::P3 => Kind::P3,
            Paradigm::P2P2 => Kind::P2P2,
            Paradigm::Combined => Kind::Combined,
            Paradigm::TwoD => Kind::Grid(GridLayout::new(n, c, &Ties::default())?),
            Paradigm::TiedConstant | Paradigm::TiedShared => {
                let ties =
                    ties.ok_or_else(|| Error::InvalidInput(format!("paradigm {paradigm} needs a tie specification")))?;
                Kind::Grid(GridLayout::new(n, c, ties)?)
            }
        };
        Ok(Problem { fhat, kind })
    }

    pub fn n_params(&self) -> usize {
        let (n, c) = self.fhat.shape();
        match &self.kind {
            Kind::P1 => n,
            Kind::P2 => n + c * c,
            Kind::P3 => n * c,
            Kind::P2P2 => 2 * (n + c * c),
            Kind::Combined => 2 * n + c * c + n * c,
            Kind::Grid(l) => l.n_free,
        }
    }

    /// Predicted frequency-domain output.
    pub fn predict(&self, p: &[f64]) -> DenseMat {
        let f = self.fhat;
        let (n, c) = f.shape();
        let mut z = DenseMat::zeros(n, c);
        match &self.kind {
            Kind::P1 => add_shared(&mut z, f, &p[..n]),
            Kind::P2 => add_mixed(&mut z, f, &p[..n], &p[n..n + c * c]),
            Kind::P3 => add_percol(&mut z, f, &p[..n * c]),
            Kind::P2P2 => {
                let h = n + c * c;
                add_mixed(&mut z, f, &p[..n], &p[n..h]);
                add_mixed(&mut z, f, &p[h..h + n], &p[h + n..2 * h]);
            }
            Kind::Combined => {
                add_shared(&mut z, f, &p[..n]);
                add_mixed(&mut z, f, &p[n..2 * n], &p[2 * n..2 * n + c * c]);
                add_percol(&mut z, f, &p[2 * n + c * c..]);
            }
            Kind::Grid(l) => {
                for row in 0..n {
                    for out in 0..c {
                        let mut acc = 0.0;
                        for inp in 0..c {
                            let v = match l.slots[(row * c + inp) * c + out] {
                                Slot::Free(k) => p[k],
                                Slot::Const(v) => v,
                            };
                            acc += v * f.get(row, inp);
                        }
                        z.set(row, out, acc);
                    }
                }
            }
        }
        z
    }

    /// Gradient of `½‖E‖²` given the residual `E = predict(p) − Ẑ*`.
    pub fn gradient(&self, p: &[f64], e: &DenseMat) -> Vec<f64> {
        let f = self.fhat;
        let (n, c) = f.shape();
        let mut g = vec![0.0; p.len()];
        match &self.kind {
            Kind::P1 => grad_shared(&mut g[..n], f, e),
            Kind::P2 => {
                let (gg, gr) = g.split_at_mut(n);
                grad_mixed(gg, gr, f, &p[..n], &p[n..], e);
            }
            Kind::P3 => grad_percol(&mut g, f, e),
            Kind::P2P2 => {
                let h = n + c * c;
                let (first, second) = g.split_at_mut(h);
                let (g1, r1) = first.split_at_mut(n);
                grad_mixed(g1, r1, f, &p[..n], &p[n..h], e);
                let (g2, r2) = second.split_at_mut(n);
                grad_mixed(g2, r2, f, &p[h..h + n], &p[h + n..], e);
            }
            Kind::Combined => {
                let (gs, rest) = g.split_at_mut(n);
                grad_shared(gs, f, e);
                let (gq, rest) = rest.split_at_mut(n);
                let (gw, gp) = rest.split_at_mut(c * c);
                grad_mixed(gq, gw, f, &p[n..2 * n], &p[2 * n..2 * n + c * c], e);
                grad_percol(gp, f, e);
            }
            Kind::Grid(l) => {
                for row in 0..n {
                    for inp in 0..c {
                        for out in 0..c {
                            if let Slot::Free(k) = l.slots[(row * c + inp) * c + out] {
                                g[k] += e.get(row, out) * f.get(row, inp);
                            }
                        }
                    }
                }
            }
        }
        g
    }
}

fn add_shared(z: &mut DenseMat, f: &DenseMat, g: &[f64]) {
    for (row, &gn) in g.iter().enumerate() {
        for j in 0..f.cols() {
            z[(row, j)] += gn * f.get(row, j);
        }
    }
}

fn add_mixed(z: &mut DenseMat, f: &DenseMat, g: &[f64], r: &[f64]) {
    let c = f.cols();
    for (row, &gn) in g.iter().enumerate() {
        for j in 0..c {
            let fr: f64 = (0..c).map(|k| f.get(row, k) * r[k * c + j]).sum();
            z[(row, j)] += gn * fr;
        }
    }
}

fn add_percol(z: &mut DenseMat, f: &DenseMat, p: &[f64]) {
    for (k, (zv, fv)) in z.as_mut_slice().iter_mut().zip(f.as_slice()).enumerate() {
        *zv += p[k] * fv;
    }
}

fn grad_shared(g: &mut [f64], f: &DenseMat, e: &DenseMat) {
    for (row, gn) in g.iter_mut().enumerate() {
        *gn += f.row(row).iter().zip(e.row(row)).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn grad_mixed(gg: &mut [f64], gr: &mut [f64], f: &DenseMat, g: &[f64], r: &[f64], e: &DenseMat) {
    let c = f.cols();
    for row in 0..f.rows() {
        for j in 0..c {
            let fr: f64 = (0..c).map(|k| f.get(row, k) * r[k * c + j]).sum();
            gg[row] += e.get(row, j) * fr;
            for k in 0..c {
                gr[k * c + j] += g[row] * f.get(row, k) * e.get(row, j);
            }
        }
    }
}

fn grad_percol(g: &mut [f64], f: &DenseMat, e: &DenseMat) {
    for ((gv, fv), ev) in g.iter_mut().zip(f.as_slice()).zip(e.as_slice()) {
        *gv += fv * ev;
    }
}

/// Multi-start optimization budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub steps: usize,
    /// Peak Adam learning rate; it decays to zero on a cosine schedule.
    pub learning_rate: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            restarts: 50,
            steps: 2000,
            learning_rate: 0.05,
        }
    }
}

/// Best Frobenius error of one Adam run from the seeded start.
fn single_run(problem: &Problem, zhat: &DenseMat, budget: &Budget, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = problem.n_params();
    let mut p: Vec<f64> = (0..np).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut m = vec![0.0; np];
    let mut v = vec![0.0; np];
    let (b1, b2, eps) = (0.9_f64, 0.999_f64, 1e-8);
    let mut best = f64::INFINITY;
    let steps = budget.steps.max(1);
    for t in 0..steps {
        let mut e = problem.predict(&p);
        e.axpy(-1.0, zhat).expect("prediction matches target shape");
        best = best.min(e.frobenius_norm());
        let g = problem.gradient(&p, &e);
        let lr = 0.5 * budget.learning_rate * (1.0 + (PI * t as f64 / steps as f64).cos());
        let step = (t + 1) as i32;
        let c1 = 1.0 - b1.powi(step);
        let c2 = 1.0 - b2.powi(step);
        for i in 0..np {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    }
    let mut e = problem.predict(&p);
    e.axpy(-1.0, zhat).expect("prediction matches target shape");
    best.min(e.frobenius_norm())
}

/// Seed of restart `r` for a problem keyed by `key`.
fn restart_seed(key: u64, r: usize) -> u64 {
    key.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (r as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Smallest error over all restarts, plus the per-restart errors in restart
/// order. Restarts run on the current rayon pool; the result does not depend
/// on scheduling.
pub fn multi_start(problem: &Problem, zhat: &DenseMat, budget: &Budget, key: u64) -> (f64, Vec<f64>) {
    let runs: Vec<f64> = (0..budget.restarts.max(1))
        .into_par_iter()
        .map(|r| single_run(problem, zhat, budget, restart_seed(key, r)))
        .collect();
    let best = runs.iter().copied().fold(f64::INFINITY, f64::min);
    (best, runs)
}

/// Exact minimum error of a (possibly tied) 2-D grid, by linear least
/// squares over its free parameters.
pub fn grid_floor(fhat: &DenseMat, zhat: &DenseMat, ties: &Ties) -> Result<f64> {
    let (n, c) = fhat.shape();
    let layout = GridLayout::new(n, c, ties)?;
    let k = layout.n_free;
    // Rows of the design matrix are output entries (row, out).
    let mut a = DenseMat::zeros(n * c, k);
    let mut rhs = vec![0.0; n * c];
    for row in 0..n {
        for out in 0..c {
            let r = row * c + out;
            rhs[r] = zhat.get(row, out);
            for inp in 0..c {
                match layout.slots[(row * c + inp) * c + out] {
                    Slot::Free(j) => a[(r, j)] += fhat.get(row, inp),
                    Slot::Const(v) => rhs[r] -= v * fhat.get(row, inp),
                }
            }
        }
    }
    let b = DenseMat::column_vector(&rhs);
    let gram = a.t_matmul(&a)?;
    let eig = eig_sym(&gram, DEFAULT_EIG_TOL)?;
    let top = eig.lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let inv: Vec<f64> = eig
        .lambda
        .iter()
        .map(|&l| if top > 0.0 && l > 1e-12 * top { 1.0 / l } else { 0.0 })
        .collect();
    let coef = eig.u.t_matmul(&a.t_matmul(&b)?)?.scale_rows(&inv)?;
    let theta = eig.u.matmul(&coef)?;
    let fit = a.matmul(&theta)?;
    Ok(fit.sub(&b)?.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_grad(problem: &Problem, zhat: &DenseMat, p: &[f64]) -> Vec<f64> {
        let obj = |q: &[f64]| {
            let mut e = problem.predict(q);
            e.axpy(-1.0, zhat).unwrap();
            0.5 * e.frobenius_norm().powi(2)
        };
        (0..p.len())
            .map(|i| {
                let h = 1e-6;
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[i] += h;
                b[i] -= h;
                (obj(&a) - obj(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let f = DenseMat::from_rows(&[[1.0, -2.0, 0.5], [0.0, 3.0, 1.0], [2.0, 1.0, -1.0]]).unwrap();
        let z = DenseMat::from_rows(&[[0.3, 1.0, -2.0], [1.5, 0.0, 0.7], [-1.0, 2.0, 0.2]]).unwrap();
        let ties = Ties {
            constants: vec![(
                GridPos {
                    n: 0,
                    input: 2,
                    output: 0,
                },
                0.25,
            )],
            shared: vec![vec![
                GridPos {
                    n: 1,
                    input: 1,
                    output: 1,
                },
                GridPos {
                    n: 2,
                    input: 1,
                    output: 1,
                },
            ]],
        };
        for par in [
            Paradigm::P1,
            Paradigm::P2,
            Paradigm::P3,
            Paradigm::P2P2,
            Paradigm::Combined,
            Paradigm::TwoD,
            Paradigm::TiedShared,
        ] {
            let prob = Problem::new(par, &f, Some(&ties)).unwrap();
            let p: Vec<f64> = (0..prob.n_params())
                .map(|i| ((i * 7 % 11) as f64 - 5.0) / 4.0)
                .collect();
            let mut e = prob.predict(&p);
            e.axpy(-1.0, &z).unwrap();
            let ga = prob.gradient(&p, &e);
            let gn = numeric_grad(&prob, &z, &p);
            for (a, b) in ga.iter().zip(&gn) {
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{par}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn untied_grid_floor_is_zero_for_nonzero_rows() {
        let f = DenseMat::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let z = DenseMat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(grid_floor(&f, &z, &Ties::default()).unwrap() < 1e-12);
    }

    #[test]
    fn double_tie_rejected() {
        let p = GridPos {
            n: 0,
            input: 0,
            output: 0,
        };
        let ties = Ties {
            constants: vec![(p, 1.0)],
            shared: vec![vec![p]],
        };
        assert!(GridLayout::new(1, 1, &ties).is_err());
    }
}
