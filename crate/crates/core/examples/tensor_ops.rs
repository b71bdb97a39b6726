//! Mode products, elementary multilinear projections and patch extraction.
//!
//! cargo run --example tensor_ops

use mldanet::mlda::{Emp, EmpSet};
use mldanet::{conv2d_same, emp_project, extract_tensor_patches, mode_product, tvp_project, DenseTensor, PatchSpec};
use nalgebra::DMatrix;

fn main() -> mldanet::Result<()> {
    // A 4 x 5 x 3 tensor holding its own flat index.
    let x = DenseTensor::from_fn(&[4, 5, 3], |i| (i[0] * 15 + i[1] * 3 + i[2]) as f64);

    // Sum out the depth mode with a 1 x 3 matrix of ones.
    let summed = mode_product(&x, &DMatrix::from_element(1, 3, 1.0), 2)?;
    println!("x x_3 [1 1 1] has dims {:?}, entry (0,0) = {}", summed.dims(), summed.get(&[0, 0, 0]));

    // One unit vector per mode gives a scalar.
    let u1 = vec![0.5; 4];
    let u2 = vec![1.0 / 5f64.sqrt(); 5];
    let u3 = vec![0.0, 1.0, 0.0];
    let y = emp_project(&x, &[&u1, &u2, &u3])?;
    println!("EMP of x = {y:.4}");

    // Several EMPs stacked give a vector.
    let set = EmpSet::new(vec![
        Emp::new(vec![u1.clone(), u2.clone(), u3])?,
        Emp::new(vec![u1, u2, vec![1.0, 0.0, 0.0]])?,
    ])?;
    println!("TVP of x = {:?}", tvp_project(&x, &set)?);

    // Same-size 3 x 3 patches: one per spatial position.
    let patches = extract_tensor_patches(&x, PatchSpec::new(3, 3)?)?;
    println!("{} patches of dims {:?}", patches.len(), patches.patches[0].dims());

    // 2D same-size cross-correlation with zero padding.
    let f = DenseTensor::from_fn(&[3, 3], |i| (i[0] * 3 + i[1]) as f64);
    let box3 = DenseTensor::filled(&[3, 3], 1.0);
    println!("box filter of a 3x3 ramp: {:?}", conv2d_same(&f, &box3)?.data());
    Ok(())
}
