//! Seeded train/evaluate sweeps over a parameter grid.
//!
//! For every grid point (patch size × block size × variant × stage count) and
//! every one of `splits` stratified random splits, a network is trained and
//! scored. The report holds one row per split plus one `mean` row per grid
//! point and is a pure function of the configuration. Wall-clock timings are
//! kept apart so they never perturb it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{gen_synthetic, read_dataset, split_dataset, LabeledDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::network::{train_network, NetworkConfig, Variant};
use crate::pooling::PoolingConfig;
use crate::tensor::PatchSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    /// Manifest file or dataset directory, relative to the config file.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub variants: Vec<Variant>,
    pub stages: Vec<usize>,
    /// `[k1, k2]` pairs; empty means the base config's patch.
    pub patch_sizes: Vec<[usize; 2]>,
    /// `[rows, cols]` pairs; empty means the base config's block.
    pub block_sizes: Vec<[usize; 2]>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            stages: vec![1, 2],
            patch_sizes: Vec::new(),
            block_sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_splits")]
    pub splits: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub base: NetworkConfig,
    #[serde(default)]
    pub grid: GridConfig,
    /// Thread count; `None` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_splits() -> usize {
    5
}

fn default_fraction() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.splits == 0 {
            return Err(Error::InvalidConfig("splits must be at least 1".into()));
        }
        if self.grid.variants.is_empty() || self.grid.stages.is_empty() {
            return Err(Error::InvalidConfig("grid.variants and grid.stages must be non-empty".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        for point in self.points() {
            point.validate()?;
        }
        Ok(())
    }

    /// Grid points in report order: patch, then block, then variant, then stages.
    pub fn points(&self) -> Vec<NetworkConfig> {
        let patches: Vec<PatchSpec> = if self.grid.patch_sizes.is_empty() {
            vec![self.base.patch]
        } else {
            self.grid.patch_sizes.iter().map(|&[k1, k2]| PatchSpec { k1, k2 }).collect()
        };
        let blocks: Vec<PoolingConfig> = if self.grid.block_sizes.is_empty() {
            vec![self.base.pooling]
        } else {
            self.grid
                .block_sizes
                .iter()
                .map(|&[block_rows, block_cols]| PoolingConfig {
                    block_rows,
                    block_cols,
                    ..self.base.pooling
                })
                .collect()
        };
        let mut out = Vec::new();
        for &patch in &patches {
            for &pooling in &blocks {
                for &variant in &self.grid.variants {
                    for &stages in &self.grid.stages {
                        out.push(NetworkConfig {
                            variant,
                            stages,
                            patch,
                            pooling,
                            ..self.base
                        });
                    }
                }
            }
        }
        out
    }
}

pub fn load_experiment_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub point: usize,
    pub variant: Variant,
    pub stages: usize,
    pub k1: usize,
    pub k2: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    /// Split index, or `mean`.
    pub split: String,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub point: usize,
    pub split: usize,
    pub seconds: f64,
}

/// Published best accuracies on the full video benchmark, kept in reports as
/// context only.
pub const REFERENCE_ACCURACY: [(&str, f64); 8] = [
    ("MLDANet-1", 64.55),
    ("MLDANet-2", 78.93),
    ("LDANet-1", 73.58),
    ("LDANet-2", 76.59),
    ("PCANet-1", 58.68),
    ("PCANet-2", 76.92),
    ("MPCA+LDA", 45.15),
    ("MLDA", 38.46),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub reference_accuracy: Vec<(String, f64)>,
    #[serde(skip)]
    pub timings: Vec<TimingRow>,
}

impl ExperimentReport {
    pub fn mean_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.split == "mean")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn timings_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.timings {
            w.serialize(t)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `report.csv`, `report.json` and `timing.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("report.csv", self.to_csv()?),
            ("report.json", self.to_json()?),
            ("timing.csv", self.timings_csv()?),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn load_source(source: &DatasetSource, base_dir: &Path) -> Result<LabeledDataset> {
    match source {
        DatasetSource::Synthetic(spec) => gen_synthetic(spec),
        DatasetSource::Manifest(p) => read_dataset(base_dir.join(p)),
    }
}

struct Cell {
    train: f64,
    test: f64,
    seconds: f64,
}

/// Runs the sweep. Relative manifest paths resolve against `base_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ds = load_source(&cfg.dataset, base_dir)?;
    let body = || -> Result<ExperimentReport> {
        let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..cfg.splits)
            .map(|r| split_dataset(&ds, cfg.train_fraction, cfg.split_seed.wrapping_add(r as u64)))
            .collect::<Result<_>>()?;
        let points = cfg.points();
        let jobs: Vec<(usize, usize)> = (0..points.len())
            .flat_map(|p| (0..cfg.splits).map(move |r| (p, r)))
            .collect();
        let cells: Vec<Cell> = jobs
            .par_iter()
            .map(|&(p, r)| {
                let start = Instant::now();
                let (train, test) = &splits[r];
                let model = train_network(train, &points[p])?;
                let cell = Cell {
                    train: model.accuracy(train)?,
                    test: model.accuracy(test)?,
                    seconds: start.elapsed().as_secs_f64(),
                };
                Ok(cell)
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        let mut timings = Vec::new();
        for (p, point) in points.iter().enumerate() {
            let row = |split: String, train_accuracy: f64, test_accuracy: f64| ReportRow {
                point: p,
                variant: point.variant,
                stages: point.stages,
                k1: point.patch.k1,
                k2: point.patch.k2,
                block_rows: point.pooling.block_rows,
                block_cols: point.pooling.block_cols,
                split,
                train_accuracy,
                test_accuracy,
            };
            let mine = &cells[p * cfg.splits..(p + 1) * cfg.splits];
            for (r, c) in mine.iter().enumerate() {
                rows.push(row(r.to_string(), c.train, c.test));
                timings.push(TimingRow {
                    point: p,
                    split: r,
                    seconds: c.seconds,
                });
            }
            let n = cfg.splits as f64;
            let mean_train = mine.iter().map(|c| c.train).sum::<f64>() / n;
            let mean_test = mine.iter().map(|c| c.test).sum::<f64>() / n;
            rows.push(row("mean".into(), mean_train, mean_test));
        }
        Ok(ExperimentReport {
            // The thread count never changes results, so it is left out.
            config: ExperimentConfig {
                workers: None,
                ..cfg.clone()
            },
            rows,
            reference_accuracy: REFERENCE_ACCURACY.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            timings,
        })
    };
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}
