//! Each classical spectral convolution is a special filter grid. This
//! example builds a single filter, a mixed filter and per-channel filters,
//! embeds each into a grid, and compares the outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral2d::data_io::gnm_graph;
use spectral2d::paradigms::{
    conv2d_block, paradigm1, paradigm2, paradigm3, specialize_grid, FilterPerColumn, FilterSingle, MixMatrix,
    Specialization,
};
use spectral2d::spectral::EigenBasis;
use spectral2d::DenseMat;

fn main() -> spectral2d::Result<()> {
    let (n, c) = (12, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let basis = EigenBasis::of_graph(&gnm_graph(n, 24, 7)?)?;
    let f = DenseMat::from_fn(n, c, |_, _| rng.gen_range(-1.0..1.0));

    // Heat kernel exp(-lambda) as the shared filter.
    let single = FilterSingle {
        g: basis.lambda.iter().map(|l| (-l).exp()).collect(),
    };
    let mix = MixMatrix {
        r: DenseMat::from_fn(c, c, |_, _| rng.gen_range(-1.0..1.0)),
    };
    let per_column = FilterPerColumn {
        gs: (0..c)
            .map(|j| basis.lambda.iter().map(|l| (-(j as f64 + 1.0) * l).exp()).collect())
            .collect(),
    };

    let rows = [
        (
            "single filter",
            Specialization::P1(single.clone()),
            paradigm1(&basis, &f, &single)?,
        ),
        (
            "mixed filter",
            Specialization::P2(single.clone(), mix.clone()),
            paradigm2(&basis, &f, &single, &mix)?,
        ),
        (
            "per-channel",
            Specialization::P3(per_column.clone()),
            paradigm3(&basis, &f, &per_column)?,
        ),
    ];
    for (name, spec, native) in rows {
        let grid = specialize_grid(c, &spec)?;
        let via_grid = conv2d_block(&basis, &f, &grid)?;
        println!(
            "{name:<14} max |native - grid| = {:.2e}",
            native.max_abs_diff(&via_grid)
        );
    }
    Ok(())
}
