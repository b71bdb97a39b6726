//! Run a parameter sweep from a JSON config and write CSV/JSON reports.
//!
//! cargo run --release --example sweep [config.json] [out_dir]

use std::path::{Path, PathBuf};

use mldanet::workbench::{load_experiment_config, run_experiment};

fn main() -> mldanet::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/sweep.json"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("mldanet-sweep"), PathBuf::from);

    let cfg = load_experiment_config(&config)?;
    let report = run_experiment(&cfg, config.parent().unwrap_or(Path::new(".")))?;
    report.write(&out)?;
    for r in report.mean_rows() {
        println!(
            "{}-{}  patch {}x{}  block {}x{}  train {:.3}  test {:.3}",
            r.variant, r.stages, r.k1, r.k2, r.block_rows, r.block_cols, r.train_accuracy, r.test_accuracy
        );
    }
    println!("reports in {}", out.display());
    Ok(())
}
