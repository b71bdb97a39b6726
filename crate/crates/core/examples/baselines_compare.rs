//! Compare MLDANet, LDANet and PCANet with one and two stages on the same
//! synthetic split.
//!
//! cargo run --release --example baselines_compare [noise_sigma]

use mldanet::workbench::{gen_synthetic, split_dataset, SyntheticSpec};
use mldanet::{train_network, NetworkConfig, Variant};

fn main() -> mldanet::Result<()> {
    let noise_sigma = std::env::args().nth(1).map_or(1.5, |s| s.parse().expect("noise_sigma"));
    let ds = gen_synthetic(&SyntheticSpec {
        per_class: 40,
        noise_sigma,
        seed: 1,
        ..SyntheticSpec::default()
    })?;
    let (train, test) = split_dataset(&ds, 0.5, 0)?;
    println!("noise_sigma {noise_sigma}: {} train / {} test", train.len(), test.len());
    for variant in Variant::ALL {
        for stages in [1, 2] {
            let cfg = NetworkConfig {
                variant,
                stages,
                ..NetworkConfig::default()
            };
            let model = train_network(&train, &cfg)?;
            println!(
                "{variant}-{stages}: train {:.3}  test {:.3}  (D = {})",
                model.accuracy(&train)?,
                model.accuracy(&test)?,
                model.classifier.dim()
            );
        }
    }
    Ok(())
}
