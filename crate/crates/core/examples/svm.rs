//! One-vs-rest linear SVM on toy clusters.
//!
//! cargo run --release --example svm

use mldanet::svm::{train_linear_svm_traced, SvmConfig};

fn main() -> mldanet::Result<()> {
    let centers = [[3.0, 0.0], [-2.0, 2.0], [-1.0, -3.0]];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for k in 0..15 {
            let t = k as f64 / 15.0 * std::f64::consts::TAU;
            xs.push(vec![center[0] + t.cos(), center[1] + t.sin()]);
            ys.push(c);
        }
    }
    let (model, traces) = train_linear_svm_traced(&xs, &ys, &SvmConfig::default(), 7)?;
    for (k, t) in traces.iter().enumerate() {
        println!("class {k}: objective {:.4} -> {:.4}", t[0], t[t.len() - 1]);
    }
    println!("training accuracy {:.3}", model.accuracy(&xs, &ys)?);
    println!("(0.5, -2.5) -> class {}", model.predict(&[0.5, -2.5])?);
    Ok(())
}
