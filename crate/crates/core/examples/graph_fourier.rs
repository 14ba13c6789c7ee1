//! Eigendecomposition of a normalized Laplacian and a round trip through the
//! graph Fourier transform on a 6-cycle.

use spectral2d::graph::{normalized_laplacian, Graph};
use spectral2d::spectral::{apply_operator, gft, igft, EigenBasis};
use spectral2d::DenseMat;

fn main() -> spectral2d::Result<()> {
    let n = 6;
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let graph = Graph::new(n, &edges)?;
    let basis = EigenBasis::of_graph(&graph)?;
    println!("eigenvalues of L: {:.4?}", basis.lambda);

    let l = normalized_laplacian(&graph).to_dense();
    println!(
        "|L - U diag(lambda) U^T|_max = {:.2e}",
        l.max_abs_diff(&basis.reconstruct())
    );

    // A delta at node 0, its spectrum, and its reconstruction.
    let f = DenseMat::from_fn(n, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let fhat = gft(&basis, &f)?;
    println!("spectrum of delta_0: {:.4?}", fhat.column(0));
    println!("round trip error: {:.2e}", igft(&basis, &fhat)?.max_abs_diff(&f));

    // Low-pass filter: keep the two smoothest frequencies.
    let g: Vec<f64> = (0..n).map(|k| if k < 2 { 1.0 } else { 0.0 }).collect();
    println!("low-passed delta_0: {:.4?}", apply_operator(&basis, &g, &f)?.column(0));
    Ok(())
}
