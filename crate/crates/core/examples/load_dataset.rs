//! Loads a dataset directory (edges.tsv, features.csv, labels.csv,
//! splits.json) and prints a summary. Without an argument it first writes a
//! small synthetic dataset to a temporary directory and loads that.
//!
//! ```text
//! cargo run --example load_dataset -- path/to/dir [index_base]
//! ```

use std::path::PathBuf;

use spectral2d::data_io::{gen_synthetic, load_dataset, save_dataset, SyntheticSpec};

fn main() -> spectral2d::Result<()> {
    let mut args = std::env::args().skip(1);
    let (dir, base) = match args.next() {
        Some(d) => (PathBuf::from(d), args.next().and_then(|b| b.parse().ok()).unwrap_or(0)),
        None => {
            let dir = std::env::temp_dir().join("spectral2d_example_dataset");
            let ds = gen_synthetic(&SyntheticSpec::separable(50, 3, 1))?;
            for p in save_dataset(&dir, &ds)? {
                println!("wrote {}", p.display());
            }
            (dir, 0)
        }
    };
    let ds = load_dataset(&dir, base)?;
    let count = |m: &[bool]| m.iter().filter(|&&b| b).count();
    println!(
        "{} nodes, {} edges, {} features, {} classes",
        ds.graph.n_nodes(),
        ds.graph.n_edges(),
        ds.x.cols(),
        ds.n_classes
    );
    println!(
        "splits: {} train, {} valid, {} test",
        count(&ds.splits.train),
        count(&ds.splits.valid),
        count(&ds.splits.test)
    );
    Ok(())
}
