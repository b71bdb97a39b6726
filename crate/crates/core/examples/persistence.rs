//! Save and reload datasets, tensors and trained models.
//!
//! cargo run --release --example persistence [dir]

use std::path::PathBuf;

use mldanet::workbench::{gen_synthetic, load_model, read_dataset, read_tbin, save_model, write_dataset, write_tbin, SyntheticSpec};
use mldanet::{train_network, NetworkConfig, PatchSpec};

fn main() -> mldanet::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("mldanet-persistence"), PathBuf::from);
    let ds = gen_synthetic(&SyntheticSpec {
        per_class: 6,
        dims: [10, 10, 3],
        ..SyntheticSpec::default()
    })?;
    write_dataset(&ds, dir.join("data"))?;
    let back = read_dataset(dir.join("data"))?;
    println!("dataset: {} samples written and read, identical: {}", back.len(), back.samples == ds.samples);

    write_tbin(&ds.samples[0], dir.join("one.tbin"))?;
    println!("tensor round trip identical: {}", read_tbin(dir.join("one.tbin"))? == ds.samples[0]);

    let cfg = NetworkConfig {
        patch: PatchSpec::new(3, 3)?,
        l1: 4,
        l2: 4,
        ..NetworkConfig::default()
    };
    let model = train_network(&ds, &cfg)?;
    save_model(&model, dir.join("model"))?;
    let loaded = load_model(dir.join("model"))?;
    println!("model round trip identical: {}", loaded == model);
    println!("files under {}", dir.display());
    Ok(())
}
