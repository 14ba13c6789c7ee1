//! Runs the standard adversarial suite and prints one line per case and
//! paradigm. Pass an output directory to also write `report.json` and
//! `report.csv`.
//!
//! ```text
//! cargo run --release --example failure_lab -- /tmp/lab
//! ```

use std::path::PathBuf;

use spectral2d::failure_lab::{run_lab, standard_suite, write_lab_outputs, Budget};

fn main() -> spectral2d::Result<()> {
    let cases = standard_suite()?;
    let report = run_lab(&cases, &Budget::default())?;
    for case in &report.cases {
        println!("{} [{:?}] flags {:?}", case.name, case.verdict, case.flags);
        for (p, got) in &case.achieved {
            let floor = case
                .floors
                .get(p)
                .map(|f| format!("{f:.6}"))
                .unwrap_or_else(|| "-".into());
            println!("    {:<10} floor {:>10}  achieved {:.6}", p.label(), floor, got);
        }
        if let Some(r) = case.residual2d {
            println!("    2D         residual {r:.3e}");
        }
        for f in &case.failures {
            println!("    FAILURE: {f}");
        }
    }
    if let Some(dir) = std::env::args().nth(1) {
        let (json, csv) = write_lab_outputs(&report, &PathBuf::from(dir))?;
        println!("wrote {} and {}", json.display(), csv.display());
    }
    Ok(())
}
