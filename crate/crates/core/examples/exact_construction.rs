//! The 2-D filter grid reaches any target signal once every frequency row of
//! the input is nonzero. The input here has a silent first channel. Filters
//! that only act within a channel cannot produce anything in that output
//! column, but the grid routes the other channels into it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral2d::data_io::gnm_graph;
use spectral2d::paradigms::{conv2d_block, exact_construct, min_error_p1, min_error_p3};
use spectral2d::spectral::{gft, EigenBasis};
use spectral2d::DenseMat;

fn main() -> spectral2d::Result<()> {
    let (n, c) = (20, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basis = EigenBasis::of_graph(&gnm_graph(n, 45, 3)?)?;
    let f = DenseMat::from_fn(n, c, |_, j| if j == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) });
    let z_star = DenseMat::from_fn(n, c, |_, _| rng.gen_range(-1.0..1.0));

    let grid = exact_construct(&basis, &f, &z_star)?;
    let z = conv2d_block(&basis, &f, &grid)?;
    println!("2-D grid residual       {:.3e}", z.sub(&z_star)?.frobenius_norm());

    let fhat = gft(&basis, &f)?;
    let zhat = gft(&basis, &z_star)?;
    println!("single-filter floor     {:.4}", min_error_p1(&fhat, &zhat));
    println!("per-channel floor       {:.4}", min_error_p3(&fhat, &zhat));
    println!(
        "target norm, column 0   {:.4}",
        zhat.column(0).iter().map(|v| v * v).sum::<f64>().sqrt()
    );
    Ok(())
}
