//! Chebyshev interpolation of |x| at increasing degree, and a check that the
//! polynomial 2-D convolution agrees with its spectral counterpart.
//!
//! ```text
//! cargo run --example chebyshev_filters
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral2d::chebyshev::{cheb_nodes, cheb_series, conv2d_cheb, grid_from_theta, interpolate, CoeffTensor};
use spectral2d::data_io::gnm_graph;
use spectral2d::graph::{normalized_laplacian, shifted_laplacian};
use spectral2d::paradigms::conv2d_block;
use spectral2d::spectral::EigenBasis;
use spectral2d::DenseMat;

fn main() -> spectral2d::Result<()> {
    for d in [2, 4, 8, 16, 32] {
        let samples: Vec<f64> = cheb_nodes(d).nodes.iter().map(|x| x.abs()).collect();
        let coeffs = interpolate(&samples)?;
        let err = (0..=1000)
            .map(|i| -1.0 + i as f64 / 500.0)
            .map(|x| (cheb_series(&coeffs, x) - x.abs()).abs())
            .fold(0.0, f64::max);
        println!("D = {d:>2}: max interpolation error of |x| = {err:.4}");
    }

    let (n, c, d) = (30, 3, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let graph = gnm_graph(n, 80, 11)?;
    let lhat = shifted_laplacian(&normalized_laplacian(&graph));
    let basis = EigenBasis::of_graph(&graph)?;
    let lambda_hat: Vec<f64> = basis.lambda.iter().map(|l| l - 1.0).collect();
    let theta = CoeffTensor::from_fn(c, d, |_, _, _| rng.gen_range(-1.0..1.0));
    let f = DenseMat::from_fn(n, c, |_, _| rng.gen_range(-1.0..1.0));

    let recurrence = conv2d_cheb(&lhat, &f, &theta)?;
    let spectral = conv2d_block(&basis, &f, &grid_from_theta(&theta, &lambda_hat))?;
    println!(
        "recurrence vs eigenbasis: max difference {:.2e}",
        recurrence.max_abs_diff(&spectral)
    );
    Ok(())
}
