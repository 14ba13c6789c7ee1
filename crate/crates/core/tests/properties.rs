use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spectral2d::chebyshev::{
    cheb_eval, cheb_nodes, cheb_series, conv2d_cheb, interpolate, samples_for_polynomial, CoeffTensor,
};
use spectral2d::data_io::CheckpointMetrics;
use spectral2d::data_io::{gnm_graph, load_checkpoint, save_checkpoint, to_canonical_string, Checkpoint};
use spectral2d::graph::{normalized_laplacian, shifted_laplacian, spmm};
use spectral2d::model::{init_params_with, ConvKind, ThetaInit, TrainConfig};
use spectral2d::paradigms::{
    conv2d_block, conv2d_vec, exact_construct_frequency, min_error_p1, min_error_p3, rank_floor, FilterGrid,
};
use spectral2d::spectral::EigenBasis;
use spectral2d::DenseMat;

fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMat {
    DenseMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn grid(rng: &mut ChaCha8Rng, n: usize, c: usize) -> FilterGrid {
    let mut g = FilterGrid::zeros(n, c);
    for ci in 0..c {
        for j in 0..c {
            for v in g.get_mut(ci, j) {
                *v = rng.sample(StandardNormal);
            }
        }
    }
    g
}

fn graph_basis(n: usize, seed: u64) -> (EigenBasis, spectral2d::graph::SparseSym) {
    let max_m = n * (n - 1) / 2;
    let g = gnm_graph(n, (2 * n).min(max_m), seed).unwrap();
    let lhat = shifted_laplacian(&normalized_laplacian(&g));
    (EigenBasis::of_graph(&g).unwrap(), lhat)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_conv_is_linear_in_signal(n in 2usize..10, c in 1usize..4, seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (basis, _) = graph_basis(n, seed);
        let g = grid(&mut rng, n, c);
        let f1 = gauss(&mut rng, n, c);
        let f2 = gauss(&mut rng, n, c);
        let lhs = conv2d_block(&basis, &f1.scale(a).add(&f2).unwrap(), &g).unwrap();
        let rhs = conv2d_block(&basis, &f1, &g).unwrap().scale(a).add(&conv2d_block(&basis, &f2, &g).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn vectorized_and_block_forms_agree(n in 1usize..9, c in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = EigenBasis::identity(n);
        let g = grid(&mut rng, n, c);
        let f = gauss(&mut rng, n, c);
        let a = conv2d_block(&basis, &f, &g).unwrap();
        let b = conv2d_vec(&basis, &f, &g).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn floors_scale_with_the_target(n in 2usize..8, c in 1usize..4, seed in any::<u64>(), s in prop::sample::select(vec![2.0f64, 10.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fhat = gauss(&mut rng, n, c);
        let zhat = gauss(&mut rng, n, c);
        let zs = zhat.scale(s);
        prop_assert!(close(min_error_p1(&fhat, &zs), s * min_error_p1(&fhat, &zhat), 1e-9));
        prop_assert!(close(min_error_p3(&fhat, &zs), s * min_error_p3(&fhat, &zhat), 1e-9));
        prop_assert!(close(rank_floor(&fhat, &zs, 1).unwrap(), s * rank_floor(&fhat, &zhat, 1).unwrap(), 1e-9));
    }

    #[test]
    fn richer_families_have_lower_floors(n in 2usize..8, c in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fhat = gauss(&mut rng, n, c);
        let zhat = gauss(&mut rng, n, c);
        prop_assert!(min_error_p3(&fhat, &zhat) <= min_error_p1(&fhat, &zhat) + 1e-12);
        prop_assert!(rank_floor(&fhat, &zhat, 2).unwrap() <= rank_floor(&fhat, &zhat, 1).unwrap() + 1e-12);
        prop_assert!(min_error_p1(&fhat, &zhat) <= zhat.frobenius_norm() + 1e-12);
    }

    #[test]
    fn exact_construction_hits_any_target(n in 1usize..10, c in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fhat = gauss(&mut rng, n, c);
        let zhat = gauss(&mut rng, n, c);
        let g = exact_construct_frequency(&fhat, &zhat).unwrap();
        let basis = EigenBasis::identity(n);
        let z = conv2d_block(&basis, &fhat, &g).unwrap();
        prop_assert!(z.max_abs_diff(&zhat) < 1e-8 * (1.0 + zhat.max_abs()));
    }

    #[test]
    fn shifted_laplacian_spectrum_is_in_unit_interval(n in 2usize..20, seed in any::<u64>()) {
        let (basis, lhat) = graph_basis(n, seed);
        for &l in &basis.lambda {
            prop_assert!((-1e-10..=2.0 + 1e-10).contains(&l));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = gauss(&mut rng, n, 3);
        let sparse = spmm(&lhat, &x).unwrap();
        let dense = lhat.to_dense().matmul(&x).unwrap();
        prop_assert!(sparse.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn interpolation_recovers_polynomial_coefficients(d in 0usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        let samples: Vec<f64> = cheb_nodes(d).nodes.iter().map(|&x| cheb_series(&coeffs, x)).collect();
        let back = interpolate(&samples).unwrap();
        for (a, b) in back.iter().zip(&coeffs) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn polynomial_samples_give_the_requested_effective_coefficients(d in 0usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..=d);
        let coeffs: Vec<f64> = (0..=k).map(|_| rng.sample(StandardNormal)).collect();
        let theta = samples_for_polynomial(&coeffs, d).unwrap();
        let nodes = cheb_nodes(d).nodes;
        for dd in 0..=d {
            let effective: f64 = nodes.iter().zip(&theta).map(|(&x, t)| cheb_eval(dd, x) * t).sum();
            let want = coeffs.get(dd).copied().unwrap_or(0.0);
            prop_assert!((effective - want).abs() < 1e-10);
        }
    }

    #[test]
    fn cheb_conv_is_linear_in_theta(n in 3usize..12, c in 1usize..3, d in 0usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, lhat) = graph_basis(n, seed);
        let t1 = CoeffTensor::from_fn(c, d, |_, _, _| rng.sample(StandardNormal));
        let t2 = CoeffTensor::from_fn(c, d, |_, _, _| rng.sample(StandardNormal));
        let sum = CoeffTensor::from_fn(c, d, |a, b, k| t1.get(a, b, k) + t2.get(a, b, k));
        let f = gauss(&mut rng, n, c);
        let lhs = conv2d_cheb(&lhat, &f, &sum).unwrap();
        let rhs = conv2d_cheb(&lhat, &f, &t1).unwrap().add(&conv2d_cheb(&lhat, &f, &t2).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn checkpoint_roundtrip_is_canonical(seed in any::<u64>(), random in any::<bool>(), shared in any::<bool>()) {
        let conv = if shared { ConvKind::SharedDiagonal } else { ConvKind::TwoD };
        let init = if random { ThetaInit::Random } else { ThetaInit::Identity };
        let params = init_params_with(5, 7, 3, 4, seed, init, conv).unwrap();
        let ckpt = Checkpoint::new(&params, &TrainConfig::default(), CheckpointMetrics { best_epoch: 3, best_valid_acc: 0.5, test_acc: 1.0 / 3.0 });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        prop_assert_eq!(back.params().unwrap(), params);
        prop_assert_eq!(to_canonical_string(&back).unwrap(), std::fs::read_to_string(&path).unwrap());
    }
}
