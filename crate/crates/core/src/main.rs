use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mldanet::network::{NetworkConfig, Stage1Bank};
use mldanet::workbench::{
    gen_synthetic, load_experiment_config, load_model, read_dataset, run_experiment, save_model, write_dataset,
    write_tbin, SyntheticSpec,
};
use mldanet::{DenseTensor, Error, Result};

#[derive(Parser)]
#[command(name = "mldanet", version, about = "Tensor feature networks: train, extract, evaluate, sweep")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset from a JSON spec (defaults if omitted).
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a dataset and save the model directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the M × D feature matrix of a dataset as TBIN.
    Features {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the accuracy of a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run a parameter sweep and write report.csv, report.json, timing.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump learned filters as CSV, one row per filter.
    InspectFilters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn filter_rows(model: &mldanet::NetworkModel) -> Vec<(String, usize, Vec<f64>)> {
    let mut rows = Vec::new();
    match &model.stage1 {
        Stage1Bank::Emp(set) => {
            for (p, emp) in set.emps.iter().enumerate() {
                for (n, v) in emp.vectors.iter().enumerate() {
                    rows.push((format!("stage1_mode{n}"), p, v.clone()));
                }
            }
        }
        Stage1Bank::Vectorized(bank) => {
            for (l, f) in bank.filters.iter().enumerate() {
                rows.push(("stage1".into(), l, f.data().to_vec()));
            }
        }
    }
    if let Some(bank) = &model.stage2 {
        for (h, f) in bank.filters.iter().enumerate() {
            rows.push(("stage2".into(), h, f.data().to_vec()));
        }
    }
    rows
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { spec, out } => {
            let spec: SyntheticSpec = match spec {
                Some(p) => read_json(&p)?,
                None => SyntheticSpec::default(),
            };
            let ds = gen_synthetic(&spec)?;
            write_dataset(&ds, &out)?;
            println!("wrote {} samples to {}", ds.len(), out.display());
        }
        Cmd::Train { data, config, out } => {
            let cfg: NetworkConfig = match config {
                Some(p) => read_json(&p)?,
                None => NetworkConfig::default(),
            };
            let ds = read_dataset(&data)?;
            let model = mldanet::train_network(&ds, &cfg)?;
            save_model(&model, &out)?;
            println!(
                "trained {} ({} stages), train accuracy {:.4}",
                cfg.variant,
                cfg.stages,
                model.accuracy(&ds)?
            );
        }
        Cmd::Features { model, data, out } => {
            let model = load_model(&model)?;
            let ds = read_dataset(&data)?;
            let feats = model.extract_all(&ds.samples)?;
            let d = feats.first().map_or(0, Vec::len);
            let flat: Vec<f64> = feats.into_iter().flatten().collect();
            write_tbin(&DenseTensor::new(vec![ds.len(), d], flat)?, &out)?;
            println!("wrote {}x{d} features to {}", ds.len(), out.display());
        }
        Cmd::Eval { model, data } => {
            let model = load_model(&model)?;
            let ds = read_dataset(&data)?;
            println!("accuracy {:.6}", model.accuracy(&ds)?);
        }
        Cmd::Sweep { config, out } => {
            let cfg = load_experiment_config(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let report = run_experiment(&cfg, base)?;
            report.write(&out)?;
            for r in report.mean_rows() {
                println!(
                    "{}-{} {}x{} block {}x{}: train {:.4} test {:.4}",
                    r.variant, r.stages, r.k1, r.k2, r.block_rows, r.block_cols, r.train_accuracy, r.test_accuracy
                );
            }
        }
        Cmd::InspectFilters { model, out } => {
            let model = load_model(&model)?;
            let mut text = String::from("bank,index,values\n");
            for (bank, i, v) in filter_rows(&model) {
                let vals: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
                text.push_str(&format!("{bank},{i},{}\n", vals.join(" ")));
            }
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Error::Io { path: p.clone(), source: e })?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
