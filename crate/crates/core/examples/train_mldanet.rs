//! Train a two-stage MLDANet on a synthetic dataset and report accuracy.
//!
//! cargo run --release --example train_mldanet [noise_sigma]

use std::time::Instant;

use mldanet::svm::train_linear_svm;
use mldanet::workbench::{gen_synthetic, split_dataset, SyntheticSpec};
use mldanet::{train_network, NetworkConfig};

fn main() -> mldanet::Result<()> {
    let noise_sigma = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("noise_sigma"));
    let spec = SyntheticSpec {
        per_class: 40,
        noise_sigma,
        seed: 1,
        ..SyntheticSpec::default()
    };
    let ds = gen_synthetic(&spec)?;
    let (train, test) = split_dataset(&ds, 0.5, 0)?;

    // Reference: a linear SVM directly on the vectorized tensors.
    let flat = |d: &mldanet::LabeledDataset| d.samples.iter().map(|x| x.data().to_vec()).collect::<Vec<_>>();
    let cfg = NetworkConfig::default();
    let direct = train_linear_svm(&flat(&train), &train.labels, &cfg.svm, cfg.seed)?;
    println!("direct linear SVM test accuracy {:.3}", direct.accuracy(&flat(&test), &test.labels)?);

    let start = Instant::now();
    let model = train_network(&train, &cfg)?;
    println!(
        "MLDANet-2: train {:.3}, test {:.3}, feature length {}, {:.1}s",
        model.accuracy(&train)?,
        model.accuracy(&test)?,
        model.classifier.dim(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
