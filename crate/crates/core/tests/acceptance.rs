//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails. Oracles here are computed from first
//! principles (explicit sums, cosines, elimination) rather than through
//! the library routes under test.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spectral2d::chebyshev::{cheb_nodes, conv2d_cheb, grid_from_theta, interpolate, CoeffTensor};
use spectral2d::data_io::{gen_synthetic, gnm_graph, SyntheticSpec};
use spectral2d::failure_lab::{
    case_combined, case_rank_deficit, case_swap, case_tied_constant, case_tied_shared, run_case, Budget,
};
use spectral2d::graph::{normalized_laplacian, shifted_laplacian};
use spectral2d::model::{backward, forward, init_params_with, loss_ce, train, ConvKind, Mode, Splits, ThetaInit};
use spectral2d::model::{TrainConfig, Trainer};
use spectral2d::paradigms::{
    conv2d_block, conv2d_fcn, exact_construct, paradigm1, paradigm2, paradigm3, specialize_grid, FcnCoeffs, FilterGrid,
    FilterPerColumn, FilterSingle, MixMatrix, Paradigm, Specialization,
};
use spectral2d::spectral::EigenBasis;
use spectral2d::DenseMat;

// Pinned tolerances.
const EQUIV_TOL: f64 = 1e-10;
const SPECIALIZE_TOL: f64 = 1e-10;
const CONSTRUCT_TOL: f64 = 1e-8;
const FLOOR_EXACT_TOL: f64 = 1e-12;
const FLOOR_UNDERCUT_TOL: f64 = 1e-6;
const SWAP_RESIDUAL_TOL: f64 = 1e-10;
const INFEASIBLE_MARGIN: f64 = 0.05;
const TIED_REACH_TOL: f64 = 1e-3;
const UNTIED_RESIDUAL_TOL: f64 = 1e-10;
const CHEB_COEFF_TOL: f64 = 1e-10;
const CHEB_PATH_TOL: f64 = 1e-8;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_ABS_FLOOR: f64 = 1e-7;
const GRAD_STEP: f64 = 1e-5;
const ACC_2D_MIN: f64 = 0.90;
const ACC_P1_MAX: f64 = 0.75;
const ACC_GAP_MIN: f64 = 0.15;
const EDGE_RATIO_RANGE: (f64, f64) = (1.3, 2.7);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

// ---------------------------------------------------------------------------
// Independent oracles

fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMat {
    DenseMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthogonal matrix by Gram–Schmidt on Gaussian columns.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for q in &cols {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    DenseMat::from_fn(n, n, |i, j| cols[j][i])
}

fn random_basis(rng: &mut ChaCha8Rng, n: usize) -> EigenBasis {
    EigenBasis {
        u: random_orthogonal(rng, n),
        lambda: (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
    }
}

/// `U diag(g) Uᵀ` by explicit triple sum.
fn phi(u: &DenseMat, g: &[f64]) -> Vec<Vec<f64>> {
    let n = g.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| (0..n).map(|m| u.get(i, m) * g[m] * u.get(k, m)).sum())
                .collect()
        })
        .collect()
}

/// `Z[:, j] = Σ_c Φ_(c,j) F[:, c]` with each `Φ` built by [`phi`].
fn block_oracle(u: &DenseMat, f: &DenseMat, filter: impl Fn(usize, usize) -> Vec<f64>) -> DenseMat {
    let (n, c) = f.shape();
    let mut z = DenseMat::zeros(n, c);
    for ci in 0..c {
        for j in 0..c {
            let p = phi(u, &filter(ci, j));
            for i in 0..n {
                let s: f64 = (0..n).map(|k| p[i][k] * f.get(k, ci)).sum();
                z.set(i, j, z.get(i, j) + s);
            }
        }
    }
    z
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

/// Rank by Gaussian elimination with partial pivoting.
fn elimination_rank(m: &DenseMat, tol: f64) -> usize {
    let mut a = m.to_rows();
    let (rows, cols) = m.shape();
    let scale = m.max_abs().max(1e-300);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())) else {
            break;
        };
        if a[p][col].abs() <= tol * scale {
            continue;
        }
        a.swap(rank, p);
        for r in rank + 1..rows {
            let factor = a[r][col] / a[rank][col];
            for k in col..cols {
                a[r][k] -= factor * a[rank][k];
            }
        }
        rank += 1;
    }
    rank
}

fn cheb_t(d: usize, x: f64) -> f64 {
    (d as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// ---------------------------------------------------------------------------
// Criteria

fn c1_fcn_block() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let c = rng.gen_range(1..=4);
        let basis = random_basis(&mut rng, n);
        let grid = random_grid(&mut rng, n, c);
        let f = gauss(&mut rng, n, c);
        let phis: Vec<Vec<Vec<Vec<f64>>>> = (0..c)
            .map(|ci| (0..c).map(|j| phi(&basis.u, grid.get(ci, j))).collect())
            .collect();
        // Ω[i, j, n, c] = Φ_(c,j)[i, n]
        let omega = FcnCoeffs::from_fn(n, c, |i, j, nn, ci| phis[ci][j][i][nn]);
        let fcn = conv2d_fcn(&f, &omega).unwrap();
        let block = conv2d_block(&basis, &f, &grid).unwrap();
        worst = worst.max(fcn.max_abs_diff(&block));
    }
    outcome(worst < EQUIV_TOL, format!("max |fcn - block| = {worst:.3e}"))
}

fn c2_specialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = [0.0_f64; 3];
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let c = rng.gen_range(1..=4);
        let basis = random_basis(&mut rng, n);
        let f = gauss(&mut rng, n, c);
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = gauss(&mut rng, c, c);
        let gs: Vec<Vec<f64>> = (0..c)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let p = FilterSingle { g: g.clone() };
        let mix = MixMatrix { r: r.clone() };
        let pc = FilterPerColumn { gs: gs.clone() };

        // Native outputs from first principles.
        let zero = vec![0.0; n];
        let p1 = block_oracle(&basis.u, &f, |ci, j| if ci == j { g.clone() } else { zero.clone() });
        // Φ F R, reusing Φ F from the diagonal oracle.
        let p2 = p1.matmul(&r).unwrap();
        let p3 = block_oracle(
            &basis.u,
            &f,
            |ci, j| if ci == j { gs[ci].clone() } else { zero.clone() },
        );

        let cases = [
            (Specialization::P1(p.clone()), paradigm1(&basis, &f, &p).unwrap(), p1),
            (
                Specialization::P2(p.clone(), mix.clone()),
                paradigm2(&basis, &f, &p, &mix).unwrap(),
                p2,
            ),
            (Specialization::P3(pc.clone()), paradigm3(&basis, &f, &pc).unwrap(), p3),
        ];
        for (k, (spec, native, oracle)) in cases.into_iter().enumerate() {
            let via_grid = conv2d_block(&basis, &f, &specialize_grid(c, &spec).unwrap()).unwrap();
            worst[k] = worst[k]
                .max(via_grid.max_abs_diff(&native))
                .max(native.max_abs_diff(&oracle));
        }
    }
    let ok = worst.iter().all(|&w| w < SPECIALIZE_TOL);
    outcome(
        ok,
        format!("max dev P1 {:.3e}, P2 {:.3e}, P3 {:.3e}", worst[0], worst[1], worst[2]),
    )
}

fn c3_exact_construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0_f64;
    let mut count = 0;
    while count < 50 {
        let n = rng.gen_range(1..=32);
        let c = rng.gen_range(1..=4);
        let basis = random_basis(&mut rng, n);
        let f = gauss(&mut rng, n, c);
        let z = gauss(&mut rng, n, c);
        let fhat = basis.u.t_matmul(&f).unwrap();
        let min_row = (0..n)
            .map(|i| fhat.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        if min_row < 1e-3 {
            continue;
        }
        let grid = exact_construct(&basis, &f, &z).unwrap();
        let built = block_oracle(&basis.u, &f, |ci, j| grid.get(ci, j).to_vec());
        worst = worst.max(built.sub(&z).unwrap().frobenius_norm());
        count += 1;
    }
    outcome(
        worst < CONSTRUCT_TOL,
        format!("max residual over 50 instances = {worst:.3e}"),
    )
}

fn c4_zero_support_and_rank() -> Outcome {
    let budget = Budget::default();
    let swap = case_swap().unwrap();
    let r2 = 2f64.sqrt();
    // Per-row projection oracle: each row of I₂ can only scale its own
    // entry, so the off-diagonal target 1 in each row is left over.
    let oracle = (0..2)
        .map(|i| {
            let f = swap.f.row(i);
            let z = swap.z_star.row(i);
            let ff: f64 = f.iter().map(|v| v * v).sum();
            let g = f.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / ff;
            f.iter().zip(z).map(|(a, b)| (g * a - b).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    let p1 = swap.analytic_floor[&Paradigm::P1];
    let p3 = swap.analytic_floor[&Paradigm::P3];
    let report = run_case(&swap, &budget).unwrap();
    let a1 = report.achieved[&Paradigm::P1];
    let a3 = report.achieved[&Paradigm::P3];
    let res = report.residual2d.unwrap_or(f64::INFINITY);

    let deficit = case_rank_deficit(6, 4, 2, 3, 22).unwrap();
    let rf = elimination_rank(&deficit.f, 1e-9);
    let rz = elimination_rank(&deficit.z_star, 1e-9);
    let dr = run_case(&deficit, &budget).unwrap();
    let p2 = dr.achieved[&Paradigm::P2];

    let ok = (p1 - r2).abs() <= FLOOR_EXACT_TOL
        && (p3 - r2).abs() <= FLOOR_EXACT_TOL
        && (oracle - r2).abs() <= FLOOR_EXACT_TOL
        && a1 >= p1 - FLOOR_UNDERCUT_TOL
        && a3 >= p3 - FLOOR_UNDERCUT_TOL
        && res < SWAP_RESIDUAL_TOL
        && rz > rf
        && dr.flags.contains(&Paradigm::P2)
        && p2 > INFEASIBLE_MARGIN;
    outcome(
        ok,
        format!(
            "swap floors P1 {p1:.15} P3 {p3:.15}, optimized {a1:.6}/{a3:.6}, 2-D residual {res:.1e}; \
             rank {rf}->{rz}: P2 flagged {}, optimized {p2:.4}",
            dr.flags.contains(&Paradigm::P2)
        ),
    )
}

fn c5_sum_of_mixers() -> Outcome {
    let budget = Budget::default();
    let case = case_rank_deficit(6, 4, 1, 3, 21).unwrap();
    let rf = elimination_rank(&case.f, 1e-9);
    let rz = elimination_rank(&case.z_star, 1e-9);
    let r = run_case(&case, &budget).unwrap();
    let p2p2 = r.achieved[&Paradigm::P2P2];
    let flagged = r.flags.contains(&Paradigm::P2P2);
    let mut combined = Vec::new();
    for mismatch in [true, false] {
        let c = case_combined(mismatch).unwrap();
        let rep = run_case(&c, &budget).unwrap();
        combined.push(format!("{} {:.3e}", rep.name, rep.achieved[&Paradigm::Combined]));
    }
    outcome(
        rz > 2 * rf && flagged && p2p2 > INFEASIBLE_MARGIN,
        format!(
            "rank {rf}->{rz}: P2+P2 flagged {flagged}, optimized {p2p2:.4}; combined (reported only): {}",
            combined.join(", ")
        ),
    )
}

fn c6_tied() -> Outcome {
    let budget = Budget::default();
    let mut ok = true;
    let mut parts = Vec::new();
    // Pinned filter value 0 against target 5 on an input of 2: |5 - 0·2|.
    let constant = case_tied_constant().unwrap();
    let rc = run_case(&constant, &budget).unwrap();
    let got = rc.achieved[&Paradigm::TiedConstant];
    let res = rc.residual2d.unwrap_or(f64::INFINITY);
    ok &= (got - 5.0).abs() <= TIED_REACH_TOL && res < UNTIED_RESIDUAL_TOL;
    parts.push(format!("constant {got:.6} vs 5, untied {res:.1e}"));
    for scale in [1.0_f64, 2.0] {
        // One shared value g against targets 3s and 4s: best g = 3.5s.
        let want = ((3.0 * scale - 3.5 * scale).powi(2) + (4.0 * scale - 3.5 * scale).powi(2)).sqrt();
        let shared = case_tied_shared(scale).unwrap();
        let rs = run_case(&shared, &budget).unwrap();
        let got = rs.achieved[&Paradigm::TiedShared];
        let res = rs.residual2d.unwrap_or(f64::INFINITY);
        ok &= (got - want).abs() <= TIED_REACH_TOL && res < UNTIED_RESIDUAL_TOL;
        parts.push(format!("shared x{scale} {got:.6} vs {want:.6}, untied {res:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

fn c7_chebyshev() -> Outcome {
    let mut coeff_err = 0.0_f64;
    let mut node_sum_err = 0.0_f64;
    for d in 0..=16 {
        let nodes = cheb_nodes(d);
        for (b, &x) in nodes.nodes.iter().enumerate() {
            let want = ((b as f64 + 0.5) * std::f64::consts::PI / (d + 1) as f64).cos();
            node_sum_err = node_sum_err.max((x - want).abs());
        }
        for k in 0..=d {
            let samples: Vec<f64> = nodes.nodes.iter().map(|&x| cheb_t(k, x)).collect();
            let coeffs = interpolate(&samples).unwrap();
            for (i, &a) in coeffs.iter().enumerate() {
                coeff_err = coeff_err.max((a - if i == k { 1.0 } else { 0.0 }).abs());
            }
        }
        for k in 0..=2 * d + 1 {
            let s: f64 = nodes.nodes.iter().map(|&x| cheb_t(k, x)).sum();
            let want = if k == 0 { (d + 1) as f64 } else { 0.0 };
            node_sum_err = node_sum_err.max((s - want).abs());
        }
    }
    let mut abs_err = Vec::new();
    for d in [4usize, 8, 16] {
        let nodes = cheb_nodes(d);
        let coeffs = interpolate(&nodes.nodes.iter().map(|x| x.abs()).collect::<Vec<_>>()).unwrap();
        let err = (0..=2000)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|x| {
                let p: f64 = coeffs.iter().enumerate().map(|(k, a)| a * cheb_t(k, x)).sum();
                (p - x.abs()).abs()
            })
            .fold(0.0, f64::max);
        abs_err.push(err);
    }
    let decreasing = abs_err.windows(2).all(|w| w[1] < w[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut path_err = 0.0_f64;
    for _ in 0..20 {
        let n = rng.gen_range(3..=32);
        let c = rng.gen_range(1..=3);
        let d = rng.gen_range(0..=8);
        let max_m = n * (n - 1) / 2;
        let graph = gnm_graph(n, rng.gen_range(n.min(max_m)..=max_m.min(4 * n)), rng.gen()).unwrap();
        let basis = EigenBasis::of_graph(&graph).unwrap();
        let lhat = shifted_laplacian(&normalized_laplacian(&graph));
        let lambda_hat: Vec<f64> = basis.lambda.iter().map(|l| l - 1.0).collect();
        let theta = CoeffTensor::from_fn(c, d, |_, _, _| rng.sample(StandardNormal));
        let f = gauss(&mut rng, n, c);
        let fast = conv2d_cheb(&lhat, &f, &theta).unwrap();
        let via_grid = conv2d_block(&basis, &f, &grid_from_theta(&theta, &lambda_hat)).unwrap();
        let nodes = cheb_nodes(d).nodes;
        let oracle = block_oracle(&basis.u, &f, |ci, j| {
            lambda_hat
                .iter()
                .map(|&l| {
                    (0..=d)
                        .map(|dd| {
                            (0..=d).map(|b| theta.get(ci, j, b) * cheb_t(dd, nodes[b])).sum::<f64>() * cheb_t(dd, l)
                        })
                        .sum()
                })
                .collect()
        });
        path_err = path_err
            .max(fast.max_abs_diff(&via_grid))
            .max(fast.max_abs_diff(&oracle));
    }
    let ok = coeff_err < CHEB_COEFF_TOL && node_sum_err < CHEB_COEFF_TOL && decreasing && path_err < CHEB_PATH_TOL;
    outcome(
        ok,
        format!(
            "T_k coeff err {coeff_err:.2e}, node sums {node_sum_err:.2e}, |x| err D=4/8/16 {:.4}/{:.4}/{:.4}, \
             recurrence vs spectral {path_err:.2e}",
            abs_err[0], abs_err[1], abs_err[2]
        ),
    )
}

fn c8_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0_f64;
    let mut checked = 0usize;
    for inst in 0..20u64 {
        let n = rng.gen_range(5..=10);
        let (k, h, c, d) = (
            rng.gen_range(2..=4),
            rng.gen_range(3..=6),
            rng.gen_range(2..=4),
            rng.gen_range(1..=5),
        );
        let max_m = n * (n - 1) / 2;
        let graph = gnm_graph(n, rng.gen_range(n..=max_m), rng.gen()).unwrap();
        let lhat = shifted_laplacian(&normalized_laplacian(&graph));
        let x = gauss(&mut rng, n, k);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        let mask = if mask.iter().any(|&m| m) { mask } else { vec![true; n] };
        let conv = if inst % 2 == 0 {
            ConvKind::TwoD
        } else {
            ConvKind::SharedDiagonal
        };
        let mut params = init_params_with(k, h, c, d, inst, ThetaInit::Random, conv).unwrap();
        for v in params.mlp.b1.iter_mut() {
            *v = rng.gen_range(-0.2..0.2);
        }
        let mode = Mode::Train {
            seed: inst,
            epoch: 3,
            dropout: 0.25,
        };
        let (_, grads) = backward(&params, &lhat, &x, &labels, &mask, mode).unwrap();
        let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
        for (block, ga) in analytic.iter().enumerate() {
            for (i, &a) in ga.iter().enumerate() {
                let orig = params.slices()[block][i];
                params.slices_mut()[block][i] = orig + GRAD_STEP;
                let up = loss_ce(&forward(&params, &lhat, &x, mode).unwrap(), &labels, &mask).unwrap();
                params.slices_mut()[block][i] = orig - GRAD_STEP;
                let down = loss_ce(&forward(&params, &lhat, &x, mode).unwrap(), &labels, &mask).unwrap();
                params.slices_mut()[block][i] = orig;
                let num = (up - down) / (2.0 * GRAD_STEP);
                let rel = (a - num).abs() / a.abs().max(num.abs()).max(GRAD_ABS_FLOOR);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    outcome(
        worst < GRAD_REL_TOL,
        format!("{checked} partials, max relative error {worst:.3e}"),
    )
}

fn c9_directional() -> Outcome {
    let mut acc2d = Vec::new();
    let mut acc1 = Vec::new();
    for seed in 0..5u64 {
        let ds = gen_synthetic(&SyntheticSpec::cross_channel(400, seed)).unwrap();
        for conv in [ConvKind::TwoD, ConvKind::SharedDiagonal] {
            let config = TrainConfig {
                degree: 4,
                hidden: 32,
                weight_decay: 1e-3,
                max_epochs: 1000,
                patience: 200,
                seed,
                conv,
                ..TrainConfig::default()
            };
            let out = train(&config, &ds.graph, &ds.x, &ds.labels, &ds.splits).unwrap();
            match conv {
                ConvKind::TwoD => acc2d.push(out.test_acc),
                ConvKind::SharedDiagonal => acc1.push(out.test_acc),
            }
        }
    }
    let m2 = acc2d.iter().sum::<f64>() / 5.0;
    let m1 = acc1.iter().sum::<f64>() / 5.0;
    outcome(
        m2 >= ACC_2D_MIN && m1 <= ACC_P1_MAX && m2 - m1 >= ACC_GAP_MIN,
        format!("mean test acc 2-D {m2:.4} {acc2d:?}, shared-diagonal {m1:.4} {acc1:?}"),
    )
}

fn c10_edge_scaling() -> Outcome {
    let (n, k, c) = (2000, 8, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let x = gauss(&mut rng, n, k);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
    let idx: Vec<usize> = (0..n).collect();
    let splits = Splits::from_indices(n, &idx[..1200], &idx[1200..1600], &idx[1600..]).unwrap();
    let config = TrainConfig {
        degree: 10,
        hidden: 16,
        ..TrainConfig::default()
    };
    let g1 = gnm_graph(n, 30_000, 1).unwrap();
    let g2 = gnm_graph(n, 60_000, 2).unwrap();
    let mut t1 = Trainer::new(&config, &g1, &x, &labels, &splits).unwrap();
    let mut t2 = Trainer::new(&config, &g2, &x, &labels, &splits).unwrap();
    for e in 0..3 {
        t1.epoch(e).unwrap();
        t2.epoch(e).unwrap();
    }
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for e in 3..34 {
        let t = Instant::now();
        t1.epoch(e).unwrap();
        s1.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        t2.epoch(e).unwrap();
        s2.push(t.elapsed().as_secs_f64());
    }
    let (m1, m2) = (median(s1), median(s2));
    let ratio = m2 / m1;
    outcome(
        (EDGE_RATIO_RANGE.0..=EDGE_RATIO_RANGE.1).contains(&ratio),
        format!(
            "median epoch {:.2} ms at 30000 edges, {:.2} ms at 60000 edges, ratio {ratio:.3}",
            m1 * 1e3,
            m2 * 1e3
        ),
    )
}

fn run_bin(args: &[&str], threads: &str) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_spectral2d"))
        .args(args)
        .env("SPECTRAL2D_THREADS", threads)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => !x.is_empty() && x == y,
        _ => false,
    }
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s);
    let mut codes = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "4")] {
        let out = p(&format!("train_{run}"));
        codes.push(run_bin(
            &[
                "train",
                "--gen-kind",
                "cross_channel",
                "--nodes",
                "200",
                "--seed",
                "3",
                "--degree",
                "4",
                "--hidden",
                "16",
                "--epochs",
                "150",
                "--patience",
                "50",
                "--out",
                out.to_str().unwrap(),
            ],
            threads,
        ));
        let lab = p(&format!("lab_{run}"));
        codes.push(run_bin(
            &[
                "lab",
                "--restarts",
                "12",
                "--steps",
                "2000",
                "--out",
                lab.to_str().unwrap(),
            ],
            threads,
        ));
    }
    let files = [
        ("train", "checkpoint.json"),
        ("train", "metrics.json"),
        ("lab", "report.json"),
        ("lab", "report.csv"),
    ];
    let identical: Vec<bool> = files
        .iter()
        .map(|(d, f)| same_bytes(&p(&format!("{d}_a")).join(f), &p(&format!("{d}_b")).join(f)))
        .collect();
    outcome(
        codes.iter().all(|&c| c == 0) && identical.iter().all(|&s| s),
        format!(
            "exit codes {codes:?}; identical checkpoint/metrics/report.json/report.csv {identical:?} (threads 1 vs 4)"
        ),
    )
}

fn main() {
    type Criterion = (u8, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "FCN and block-matrix routes agree", 5, c1_fcn_block),
        (2, "grid specializations reproduce P1/P2/P3", 5, c2_specialization),
        (3, "exact 2-D construction", 10, c3_exact_construction),
        (
            4,
            "zero-support floors and rank certificate",
            120,
            c4_zero_support_and_rank,
        ),
        (5, "sum-of-mixers rank certificate", 180, c5_sum_of_mixers),
        (6, "tied-parameter floors", 60, c6_tied),
        (7, "Chebyshev machinery", 10, c7_chebyshev),
        (8, "analytic gradients", 30, c8_gradients),
        (
            9,
            "cross-channel task separates 2-D from shared filters",
            300,
            c9_directional,
        ),
        (10, "per-epoch time scales with edge count", 120, c10_edge_scaling),
        (11, "train and lab outputs are byte-identical", 600, c11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let passed = out.passed && in_time;
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {} [{:.1}s of {limit}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
