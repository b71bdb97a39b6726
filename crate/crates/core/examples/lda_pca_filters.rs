//! Learn 2D LDA and PCA filter banks from mean-removed patch matrices.
//!
//! cargo run --release --example lda_pca_filters

use mldanet::filters::{class_means, scatter_matrices, solve_lda_filters, solve_pca_filters};
use mldanet::tensor::extract_map_patches;
use mldanet::workbench::{gen_synthetic, SyntheticSpec};
use mldanet::{DenseTensor, PatchSpec};
use nalgebra::DMatrix;

fn main() -> mldanet::Result<()> {
    let ds = gen_synthetic(&SyntheticSpec {
        dims: [12, 12, 1],
        ..SyntheticSpec::default()
    })?;
    let spec = PatchSpec::new(3, 3)?;

    // Each single-channel sample becomes one 9 x 144 patch matrix.
    let mut units = Vec::new();
    let mut all_patches = Vec::new();
    for (x, &label) in ds.samples.iter().zip(&ds.labels) {
        let map = DenseTensor::new(vec![12, 12], x.data().to_vec())?;
        let patches = extract_map_patches(&map, spec, true)?;
        units.push((DMatrix::from_fn(9, patches.len(), |i, j| patches[j][i]), label));
        all_patches.extend(patches);
    }

    let scatters = scatter_matrices(&units, &class_means(&units)?)?;
    let lda = solve_lda_filters(&scatters, 4, &[3, 3], 1e-3)?;
    let pca = solve_pca_filters(&all_patches, 4, &[3, 3])?;
    for (name, bank) in [("LDA", &lda), ("PCA", &pca)] {
        println!("{name} eigenvalues {:?}", bank.eigenvalues);
        println!("{name} leading filter {:?}", bank.filters[0].data());
        println!("{name} orthonormality error {:.1e}", bank.orthonormality_error());
    }
    Ok(())
}
