//! Learn EMPs by multilinear discriminant analysis on whole tensors.
//!
//! cargo run --release --example mlda_filters

use mldanet::mlda::{fisher_value, regularizer, solve_emp, solve_mlda, TensorSamples};
use mldanet::workbench::{gen_synthetic, SyntheticSpec};
use mldanet::MldaConfig;

fn main() -> mldanet::Result<()> {
    let ds = gen_synthetic(&SyntheticSpec {
        dims: [10, 8, 3],
        ..SyntheticSpec::default()
    })?;
    let cfg = MldaConfig {
        num_emps: 4,
        ..MldaConfig::default()
    };

    let (first, trace) = solve_emp(&ds.samples, &ds.labels, &cfg, &[])?;
    println!("first EMP: Fisher ratio per sweep");
    for (i, s) in trace.iter().enumerate() {
        println!("  sweep {i}: {:.4} (s_b {:.3}, s_w {:.3})", s.f, s.s_b, s.s_w);
    }
    println!("  mode-3 vector {:?}", first.vectors[2]);

    let set = solve_mlda(&ds.samples, &ds.labels, &cfg)?;
    let eta = regularizer(&TensorSamples::new(&ds.samples)?, &ds.labels, cfg.eta_scale)?;
    for (p, emp) in set.emps.iter().enumerate() {
        println!("EMP {p}: Fisher {:.4}", fisher_value(&ds.samples, &ds.labels, emp, eta)?.f);
    }
    println!("largest |<U_p, U_q>| between EMPs: {:.2e}", set.max_cross_inner());
    Ok(())
}
