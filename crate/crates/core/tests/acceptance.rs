//! Acceptance run: one PASS/FAIL line per criterion. Built without the
//! default test harness so the lines always show up in `cargo test` output.

mod common;

use std::time::{Duration, Instant};

use common::*;
use mldanet::filters::{class_means, scatter_matrices, solve_lda_filters};
use mldanet::mlda::{mode_scatters, solve_emp};
use mldanet::network::NetworkModel;
use mldanet::pooling::{binarize, block_histograms, block_partition, feature_len, hash_stack, pool_features, PoolingConfig};
use mldanet::svm::{train_linear_svm, SvmConfig};
use mldanet::workbench::{
    decode_tbin, encode_tbin, gen_synthetic, load_model, read_tbin, run_experiment, save_model, split_dataset,
    write_tbin, DatasetSource, ExperimentConfig, GridConfig, SyntheticSpec,
};
use mldanet::{
    conv2d_same, emp_project, mode_product, train_network, DenseTensor, Error, LabeledDataset, MldaConfig,
    NetworkConfig, PatchSpec, Variant,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type FileBytes = Vec<(String, Vec<u8>)>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ---------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 5];
    let mut r = rng(0x0AC1E);
    for _ in 0..100 {
        let order = r.random_range(1..5);
        let dims: Vec<usize> = (0..order).map(|_| r.random_range(1..6)).collect();
        let mode = r.random_range(0..order);
        let x = random_tensor(&mut r, &dims);
        let j = r.random_range(1..5);
        let u = DMatrix::from_vec(j, dims[mode], uniform_vec(&mut r, j * dims[mode]));
        worst[0] = worst[0].max(mode_product(&x, &u, mode).unwrap().max_abs_diff(&common::mode_product(&x, &u, mode)));

        let vs: Vec<Vec<f64>> = dims.iter().map(|&d| unit_vec(&mut r, d)).collect();
        let refs: Vec<&[f64]> = vs.iter().map(Vec::as_slice).collect();
        worst[1] = worst[1].max((emp_project(&x, &refs).unwrap() - common::emp(&x, &vs)).abs());

        let fdims = [r.random_range(1..12), r.random_range(1..12)];
        let f = random_tensor(&mut r, &fdims);
        let kdims = [2 * r.random_range(1..4) + 1, 2 * r.random_range(1..4) + 1];
        let v = random_tensor(&mut r, &kdims);
        worst[2] = worst[2].max(conv2d_same(&f, &v).unwrap().max_abs_diff(&conv2d(&f, &v)));

        let m = r.random_range(6..20);
        let d = r.random_range(1..6);
        let ys: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(&mut r, d)).collect();
        let labels: Vec<usize> = (0..m).map(|i| i % 3).collect();
        let (b, w) = mode_scatters(&ys, &labels).unwrap();
        let (b0, w0) = common::mode_scatters(&ys, &labels);
        worst[3] = worst[3].max(max_abs_diff(&b, &b0)).max(max_abs_diff(&w, &w0));

        let (rows, cols) = (r.random_range(1..6), r.random_range(1..6));
        let units: Vec<(DMatrix<f64>, usize)> = (0..m)
            .map(|i| (DMatrix::from_vec(rows, cols, uniform_vec(&mut r, rows * cols)), i % 3))
            .collect();
        let s = scatter_matrices(&units, &class_means(&units).unwrap()).unwrap();
        let (b1, w1) = patch_scatters(&units);
        worst[4] = worst[4].max(max_abs_diff(&s.s_b, &b1)).max(max_abs_diff(&s.s_w, &w1));
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        max <= 1e-10 && elapsed < Duration::from_secs(10),
        format!(
            "max abs diff mode_product {:.1e}, emp {:.1e}, conv {:.1e}, mode_scatters {:.1e}, scatter_matrices {:.1e}; {:.2}s",
            worst[0], worst[1], worst[2], worst[3], worst[4], elapsed.as_secs_f64()
        ),
    )
}

// 2 ---------------------------------------------------------------------

fn fisher_monotonicity() -> Outcome {
    let mut worst_drop = 0.0f64;
    let mut sweeps = 0;
    for seed in 0..20 {
        let ds = gen_synthetic(&SyntheticSpec {
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let cfg = MldaConfig::default();
        let (first, t1) = solve_emp(&ds.samples, &ds.labels, &cfg, &[]).unwrap();
        let (_, t2) = solve_emp(&ds.samples, &ds.labels, &cfg, &[first]).unwrap();
        for trace in [t1, t2] {
            sweeps += trace.len();
            for w in trace.windows(2) {
                let drop = (w[0].f - w[1].f) / w[0].f.abs().max(1.0);
                worst_drop = worst_drop.max(drop);
            }
        }
    }
    check(
        worst_drop <= 1e-9,
        format!("20 datasets, {sweeps} sweeps, largest relative decrease {worst_drop:.1e} (tolerance 1e-9)"),
    )
}

// 3 ---------------------------------------------------------------------

fn planted_recovery() -> Outcome {
    let dims = [8, 6, 3];
    let shift = 4.0;
    let sigma = 0.1 * shift;
    let mut worst_emp = f64::INFINITY;
    for seed in 0..10u64 {
        let mut r = rng(1000 + seed);
        let planted: Vec<Vec<f64>> = dims.iter().map(|&d| unit_vec(&mut r, d)).collect();
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..1000 {
                let x = DenseTensor::from_fn(&dims, |i| {
                    let mean = c as f64 * shift * planted[0][i[0]] * planted[1][i[1]] * planted[2][i[2]];
                    let z: f64 = r.sample(StandardNormal);
                    mean + sigma * z
                });
                samples.push(x);
                labels.push(c);
            }
        }
        let (emp, _) = solve_emp(&samples, &labels, &MldaConfig::default(), &[]).unwrap();
        for (u, p) in emp.vectors.iter().zip(&planted) {
            worst_emp = worst_emp.min(abs_cosine(u, p));
        }
    }

    let d = 6;
    let mut worst_lda = f64::INFINITY;
    for seed in 0..10u64 {
        let mut r = rng(2000 + seed);
        let mix = DMatrix::from_vec(d, d, uniform_vec(&mut r, d * d)) * 0.5 + DMatrix::identity(d, d);
        let delta = uniform_vec(&mut r, d);
        let mut units = Vec::new();
        for c in 0..2 {
            for _ in 0..200 {
                let z: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
                let x = &mix * nalgebra::DVector::from_vec(z);
                let v: Vec<f64> = (0..d).map(|i| x[i] + c as f64 * delta[i]).collect();
                units.push((DMatrix::from_vec(d, 1, v), c));
            }
        }
        let bank = solve_lda_filters(&scatter_matrices(&units, &class_means(&units).unwrap()).unwrap(), 1, &[d], 1e-3)
            .unwrap();
        let (_, s_w) = patch_scatters(&units);
        let mean = |c: usize| -> Vec<f64> {
            let m: Vec<&DMatrix<f64>> = units.iter().filter(|u| u.1 == c).map(|u| &u.0).collect();
            (0..d).map(|i| m.iter().map(|x| x[(i, 0)]).sum::<f64>() / m.len() as f64).collect()
        };
        let (m0, m1) = (mean(0), mean(1));
        let dmu: Vec<f64> = m1.iter().zip(&m0).map(|(a, b)| a - b).collect();
        let closed = solve(&s_w, &dmu);
        worst_lda = worst_lda.min(abs_cosine(bank.filters[0].data(), &closed));
    }
    check(
        worst_emp >= 0.99 && worst_lda >= 0.999,
        format!("min per-mode EMP cosine {worst_emp:.5} (10 datasets, 2x1000 samples), min LDA cosine vs S_W^-1 dmu {worst_lda:.6} (10 toys)"),
    )
}

// 4 ---------------------------------------------------------------------

fn pooling_invariants() -> Outcome {
    let mut r = rng(44);
    let (rows, cols) = (48, 64);
    let mut configs = 0;
    for (l1, l2) in [(8, 8), (2, 3), (4, 1), (3, 5)] {
        for (br, bc) in [(6, 8), (12, 16), (24, 32), (7, 9)] {
            for overlap in [0.5, 0.0, 0.25] {
                configs += 1;
                let cfg = PoolingConfig {
                    block_rows: br,
                    block_cols: bc,
                    overlap,
                };
                let maps: Vec<DenseTensor> = (0..l1 * l2).map(|_| random_tensor(&mut r, &[rows, cols])).collect();
                let blocks = block_partition(rows, cols, &cfg).unwrap();
                for group in maps.chunks(l2) {
                    let bins: Vec<_> = group.iter().map(|m| binarize(m).unwrap()).collect();
                    let w = hash_stack(&bins).unwrap();
                    if w.entries.iter().any(|&v| v as usize > (1 << l2) - 1) {
                        return Err(format!("hash out of range for L2={l2}"));
                    }
                    for (blk, h) in blocks.iter().zip(block_histograms(&w, &blocks, 1 << l2).unwrap()) {
                        if h.iter().map(|&c| c as usize).sum::<usize>() != blk.area() {
                            return Err(format!("histogram mass lost in block {blk:?}"));
                        }
                    }
                }
                let f = pool_features(&maps, l2, &cfg).unwrap();
                if f.len() != l1 * blocks.len() * (1 << l2) || f.len() != feature_len(l1, l2, blocks.len()) {
                    return Err(format!("feature length {} for L1={l1} L2={l2} B={}", f.len(), blocks.len()));
                }
                let scaled: Vec<DenseTensor> = maps.iter().map(|m| m.scaled(3.7)).collect();
                let g = pool_features(&scaled, l2, &cfg).unwrap();
                if f.iter().zip(&g).any(|(a, b)| a.to_bits() != b.to_bits()) {
                    return Err("positive rescaling changed the features".into());
                }
            }
        }
    }
    Ok(format!("{configs} configs on 48x64 maps incl. L1=L2=8 with 6x8/12x16/24x32 blocks at 50% overlap"))
}

// 5, 6, 7 -----------------------------------------------------------------

fn synthetic_split(noise_sigma: f64) -> (LabeledDataset, LabeledDataset) {
    let ds = gen_synthetic(&SyntheticSpec {
        classes: 3,
        per_class: 40,
        dims: [16, 16, 4],
        signal_rank: 2,
        noise_sigma,
        seed: 1,
    })
    .unwrap();
    split_dataset(&ds, 0.5, 0).unwrap()
}

fn separable_data() -> (LabeledDataset, LabeledDataset) {
    synthetic_split(1.0)
}

fn flat(ds: &LabeledDataset) -> Vec<Vec<f64>> {
    ds.samples.iter().map(|x| x.data().to_vec()).collect()
}

fn end_to_end() -> Outcome {
    let (train, test) = separable_data();
    let direct = train_linear_svm(&flat(&train), &train.labels, &SvmConfig::default(), 0).unwrap();
    let base = direct.accuracy(&flat(&test), &test.labels).unwrap();
    if base < 0.95 {
        return Err(format!("direct linear baseline only {base:.3}; dataset not separable enough"));
    }
    let start = Instant::now();
    let model = train_network(&train, &NetworkConfig::default()).unwrap();
    let tr = model.accuracy(&train).unwrap();
    let te = model.accuracy(&test).unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        tr == 1.0 && te >= 0.90 && secs < 120.0,
        format!(
            "{}+{} samples, direct linear baseline {base:.3}; MLDANet-2 train {tr:.3}, test {te:.3}, {secs:.1}s",
            train.len(),
            test.len()
        ),
    )
}

fn table_echo() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for sigma in [1.0, 1.5, 2.0] {
        let (train, test) = synthetic_split(sigma);
        let mut acc = Vec::new();
        for variant in Variant::ALL {
            let mut pair = [0.0; 2];
            for stages in [1, 2] {
                let cfg = NetworkConfig {
                    variant,
                    stages,
                    ..NetworkConfig::default()
                };
                pair[stages - 1] = train_network(&train, &cfg).unwrap().accuracy(&test).unwrap();
            }
            acc.push((variant, pair));
        }
        ok &= acc.iter().all(|(_, [one, two])| *two >= one - 0.05);
        let best = acc.iter().max_by(|a, b| a.1[1].total_cmp(&b.1[1])).unwrap().0;
        let cells: Vec<String> = acc.iter().map(|(v, [a, b])| format!("{v} {a:.3}->{b:.3}")).collect();
        lines.push(format!("sigma {sigma}: {} (best two-stage {best})", cells.join(", ")));
    }
    check(ok, format!("test accuracy one->two stages; {}", lines.join("; ")))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn model_bytes(model: &NetworkModel) -> FileBytes {
    let dir = tempfile::tempdir().unwrap();
    save_model(model, dir.path()).unwrap();
    dir_bytes(dir.path())
}

fn determinism() -> Outcome {
    let (train, test) = separable_data();
    for variant in Variant::ALL {
        for stages in [1, 2] {
            let cfg = NetworkConfig {
                variant,
                stages,
                ..NetworkConfig::default()
            };
            let runs: Vec<(FileBytes, Vec<Vec<f64>>)> = [1, 4, 4]
                .iter()
                .map(|&t| {
                    in_pool(t, || {
                        let m = train_network(&train, &cfg).unwrap();
                        (model_bytes(&m), m.extract_all(&test.samples).unwrap())
                    })
                })
                .collect();
            let bits = |f: &Vec<Vec<f64>>| f.iter().flatten().map(|v| v.to_bits()).collect::<Vec<u64>>();
            if runs[0].0 != runs[1].0 || runs[1].0 != runs[2].0 {
                return Err(format!("{variant}-{stages}: model bytes differ"));
            }
            if bits(&runs[0].1) != bits(&runs[1].1) || bits(&runs[1].1) != bits(&runs[2].1) {
                return Err(format!("{variant}-{stages}: features differ"));
            }
        }
    }
    let exp = |workers| ExperimentConfig {
        dataset: DatasetSource::Synthetic(SyntheticSpec {
            per_class: 8,
            dims: [10, 10, 3],
            ..SyntheticSpec::default()
        }),
        splits: 2,
        train_fraction: 0.5,
        split_seed: 3,
        base: NetworkConfig {
            l1: 4,
            l2: 4,
            pooling: PoolingConfig {
                block_rows: 5,
                block_cols: 5,
                overlap: 0.5,
            },
            ..NetworkConfig::default()
        },
        grid: GridConfig::default(),
        workers: Some(workers),
    };
    let reports: Vec<(String, String)> = [1, 4, 4]
        .iter()
        .map(|&w| {
            let rep = run_experiment(&exp(w), std::path::Path::new(".")).unwrap();
            (rep.to_csv().unwrap(), rep.to_json().unwrap())
        })
        .collect();
    check(
        reports[0] == reports[1] && reports[1] == reports[2],
        "6 networks x 3 runs (1, 4, 4 threads): model files and features byte-identical; sweep reports identical".into(),
    )
}

// 8 ---------------------------------------------------------------------

fn tiny_model(i: usize) -> (NetworkModel, LabeledDataset) {
    let ds = gen_synthetic(&SyntheticSpec {
        classes: 2 + i % 3,
        per_class: 4,
        dims: [6, 5, 1 + i % 3],
        signal_rank: 1,
        noise_sigma: 0.5,
        seed: i as u64,
    })
    .unwrap();
    let cfg = NetworkConfig {
        variant: Variant::ALL[i % 3],
        stages: 1 + (i / 3) % 2,
        patch: PatchSpec::new(3, 3 + 2 * (i % 2)).unwrap(),
        l1: 2 + i % 2,
        l2: 2,
        pooling: PoolingConfig {
            block_rows: 3,
            block_cols: 3,
            overlap: 0.5,
        },
        svm: SvmConfig { c: 1.0, epochs: 10 },
        seed: i as u64,
        ..NetworkConfig::default()
    };
    (train_network(&ds, &cfg).unwrap(), ds)
}

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(88);
    for i in 0..50 {
        let order = r.random_range(1..5);
        let dims: Vec<usize> = (0..order).map(|_| r.random_range(1..6)).collect();
        let mut t = random_tensor(&mut r, &dims);
        t.data_mut()[0] = f64::from_bits(r.random());
        let p = dir.path().join(format!("t{i}.tbin"));
        write_tbin(&t, &p).unwrap();
        let back = read_tbin(&p).unwrap();
        if back.dims() != t.dims() || back.data().iter().zip(t.data()).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(format!("TBIN artifact {i} changed on round trip"));
        }
    }
    for i in 0..50 {
        let (model, ds) = tiny_model(i);
        let mdir = dir.path().join(format!("m{i}"));
        save_model(&model, &mdir).unwrap();
        let back = load_model(&mdir).unwrap();
        if back != model {
            return Err(format!("model {i} changed on round trip"));
        }
        for x in &ds.samples {
            let (a, b) = (model.extract_features(x).unwrap(), back.extract_features(x).unwrap());
            if a != b || model.predict(x).unwrap() != back.predict(x).unwrap() {
                return Err(format!("model {i} predicts differently after reload"));
            }
        }
        if model_bytes(&back) != dir_bytes(&mdir) {
            return Err(format!("model {i} re-saves to different bytes"));
        }
    }

    let good = encode_tbin(&DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap());
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let mut cases = vec![
        ("bad magic", matches!(decode_tbin(&bad_magic), Err(Error::BadMagic { .. }))),
        ("short header", matches!(decode_tbin(&good[..10]), Err(Error::MalformedHeader(_)))),
        ("zero order", matches!(decode_tbin(b"TBN1\0\0\0\0"), Err(Error::MalformedHeader(_)))),
        ("truncated payload", matches!(decode_tbin(&good[..good.len() - 1]), Err(Error::TruncatedPayload { .. }))),
        ("trailing bytes", matches!(decode_tbin(&[good.as_slice(), &[0]].concat()), Err(Error::TruncatedPayload { .. }))),
    ];

    let (model, _) = tiny_model(4);
    let mdir = dir.path().join("broken");
    save_model(&model, &mdir).unwrap();
    let meta = std::fs::read_to_string(mdir.join("model.json")).unwrap();
    std::fs::write(mdir.join("model.json"), meta.replace("\"format_version\": 1", "\"format_version\": 2")).unwrap();
    cases.push((
        "future format version",
        matches!(load_model(&mdir), Err(Error::VersionMismatch { found: 2, expected: 1 })),
    ));
    std::fs::write(mdir.join("model.json"), &meta).unwrap();
    let filter = mdir.join("stage2/filter_001.tbin");
    let bytes = std::fs::read(&filter).unwrap();
    std::fs::write(&filter, &bytes[..bytes.len() - 8]).unwrap();
    cases.push((
        "truncated stage-2 filter",
        matches!(load_model(&mdir), Err(Error::CorruptedSection { .. })),
    ));
    std::fs::write(&filter, &bytes).unwrap();
    std::fs::remove_file(mdir.join("svm/biases.tbin")).unwrap();
    cases.push(("missing biases", matches!(load_model(&mdir), Err(Error::CorruptedSection { .. }))));

    let failed: Vec<&str> = cases.iter().filter(|c| !c.1).map(|c| c.0).collect();
    check(
        failed.is_empty(),
        if failed.is_empty() {
            format!("50 TBIN + 50 model round trips bitwise; {} error cases map to their errors", cases.len())
        } else {
            format!("wrong error for: {}", failed.join(", "))
        },
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("Fisher monotonicity", fisher_monotonicity),
        ("planted-direction recovery", planted_recovery),
        ("pooling invariants", pooling_invariants),
        ("end-to-end separable accuracy", end_to_end),
        ("two-stage vs one-stage", table_echo),
        ("determinism", determinism),
        ("persistence", persistence),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("acceptance {}: {name}: PASS ({d})", i + 1),
            Err(d) => {
                failures += 1;
                println!("acceptance {}: {name}: FAIL ({d})", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
