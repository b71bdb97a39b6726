//! Binary hashing and block histograms of feature maps.
//!
//! cargo run --example pooling

use mldanet::pooling::{binarize, block_histograms, block_partition, feature_len, hash_stack, pool_features, PoolingConfig};
use mldanet::DenseTensor;

fn main() -> mldanet::Result<()> {
    // Three 6 x 8 maps with different sign patterns.
    let maps: Vec<DenseTensor> = (0..3)
        .map(|h| DenseTensor::from_fn(&[6, 8], |i| ((i[0] + 2 * i[1] + h) % 3) as f64 - 1.0))
        .collect();
    let bits = maps.iter().map(binarize).collect::<mldanet::Result<Vec<_>>>()?;
    let hashed = hash_stack(&bits)?;
    println!("hashed row 0: {:?}", &hashed.entries[..8]);

    let cfg = PoolingConfig {
        block_rows: 4,
        block_cols: 4,
        overlap: 0.5,
    };
    let blocks = block_partition(6, 8, &cfg)?;
    println!("stride {:?}, {} blocks", cfg.stride(), blocks.len());
    for (b, h) in blocks.iter().zip(block_histograms(&hashed, &blocks, 8)?).take(3) {
        println!("  block at ({}, {}): {:?}", b.row, b.col, h);
    }

    let f = pool_features(&maps, 3, &cfg)?;
    println!("feature length {} = {}", f.len(), feature_len(1, 3, blocks.len()));
    Ok(())
}
