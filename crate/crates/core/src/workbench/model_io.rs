//! Model container: a directory holding `model.json` metadata plus one TBIN
//! per learned vector/filter and the classifier weights.
//!
//! ```text
//! model.json
//! stage1/emp_PPP_mode_N.tbin   (MLDANet)   or   stage1/filter_LLL.tbin
//! stage2/filter_HHH.tbin                   (two-stage only)
//! svm/weights.tbin   C × D
//! svm/biases.tbin    C
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tbin::{read_tbin, write_tbin};
use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::mlda::{Emp, EmpSet};
use crate::network::{NetworkConfig, NetworkModel, SolverConfig, Stage1Bank, Variant};
use crate::pooling::PoolingConfig;
use crate::svm::{LinearSvmModel, SvmConfig};
use crate::tensor::{DenseTensor, PatchSpec};

pub const FORMAT_VERSION: u64 = 1;
pub const METADATA: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Kind {
    Emp,
    Vectorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub format_version: u64,
    pub variant: Variant,
    pub stages: usize,
    pub patch: PatchSpec,
    pub l1: usize,
    pub l2: usize,
    pub pooling: PoolingConfig,
    pub seed: u64,
    pub solver: SolverConfig,
    pub svm: SvmConfig,
    pub input_dims: Vec<usize>,
    pub class_names: Vec<String>,
    /// Label id scored by each classifier row.
    pub classes: Vec<usize>,
    pub feature_len: usize,
    pub stage1_kind: Stage1Kind,
    pub stage1_shape: Vec<usize>,
    pub stage1_eigenvalues: Option<Vec<f64>>,
    pub stage2_eigenvalues: Option<Vec<f64>>,
}

impl ModelMetadata {
    pub fn config(&self) -> NetworkConfig {
        NetworkConfig {
            variant: self.variant,
            stages: self.stages,
            patch: self.patch,
            l1: self.l1,
            l2: self.l2,
            pooling: self.pooling,
            solver: self.solver,
            svm: self.svm,
            seed: self.seed,
        }
    }
}

fn emp_file(p: usize, n: usize) -> String {
    format!("stage1/emp_{p:03}_mode_{n}.tbin")
}

fn filter_file(stage: usize, i: usize) -> String {
    format!("stage{stage}/filter_{i:03}.tbin")
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &NetworkModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for sub in ["stage1", "stage2", "svm"] {
        let p = dir.join(sub);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    ensure_dir(&dir.join("stage1"))?;
    ensure_dir(&dir.join("svm"))?;

    let cfg = &model.config;
    let (stage1_kind, stage1_shape, stage1_eigenvalues) = match &model.stage1 {
        Stage1Bank::Emp(set) => {
            for (p, emp) in set.emps.iter().enumerate() {
                for (n, v) in emp.vectors.iter().enumerate() {
                    write_tbin(&DenseTensor::new(vec![v.len()], v.clone())?, dir.join(emp_file(p, n)))?;
                }
            }
            (Stage1Kind::Emp, set.dims(), None)
        }
        Stage1Bank::Vectorized(bank) => {
            for (l, f) in bank.filters.iter().enumerate() {
                write_tbin(f, dir.join(filter_file(1, l)))?;
            }
            (Stage1Kind::Vectorized, bank.shape.clone(), Some(bank.eigenvalues.clone()))
        }
    };
    let stage2_eigenvalues = match &model.stage2 {
        Some(bank) => {
            ensure_dir(&dir.join("stage2"))?;
            for (h, f) in bank.filters.iter().enumerate() {
                write_tbin(f, dir.join(filter_file(2, h)))?;
            }
            Some(bank.eigenvalues.clone())
        }
        None => None,
    };

    let svm = &model.classifier;
    let d = svm.dim();
    let flat: Vec<f64> = svm.weights.iter().flatten().copied().collect();
    write_tbin(&DenseTensor::new(vec![svm.weights.len(), d], flat)?, dir.join("svm/weights.tbin"))?;
    write_tbin(
        &DenseTensor::new(vec![svm.biases.len()], svm.biases.clone())?,
        dir.join("svm/biases.tbin"),
    )?;

    let meta = ModelMetadata {
        format_version: FORMAT_VERSION,
        variant: cfg.variant,
        stages: cfg.stages,
        patch: cfg.patch,
        l1: cfg.l1,
        l2: cfg.l2,
        pooling: cfg.pooling,
        seed: cfg.seed,
        solver: cfg.solver,
        svm: svm.config,
        input_dims: model.input_dims.clone(),
        class_names: model.class_names.clone(),
        classes: svm.classes.clone(),
        feature_len: d,
        stage1_kind,
        stage1_shape,
        stage1_eigenvalues,
        stage2_eigenvalues,
    };
    let path = dir.join(METADATA);
    let json = serde_json::to_string_pretty(&meta)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

fn corrupted(section: impl Into<String>, reason: impl ToString) -> Error {
    Error::CorruptedSection {
        section: section.into(),
        reason: reason.to_string(),
    }
}

fn read_section(dir: &Path, rel: &str) -> Result<DenseTensor> {
    read_tbin(dir.join(rel)).map_err(|e| corrupted(rel, e))
}

fn read_vector(dir: &Path, rel: &str, len: usize) -> Result<Vec<f64>> {
    let t = read_section(dir, rel)?;
    if t.dims() != [len] {
        return Err(corrupted(rel, format!("expected a length-{len} vector, found dims {:?}", t.dims())));
    }
    Ok(t.into_data())
}

fn read_bank(dir: &Path, stage: usize, count: usize, shape: &[usize], eigenvalues: Option<Vec<f64>>) -> Result<FilterBank> {
    let mut filters = Vec::with_capacity(count);
    for i in 0..count {
        let rel = filter_file(stage, i);
        let f = read_section(dir, &rel)?;
        if f.dims() != shape {
            return Err(corrupted(rel, format!("expected shape {shape:?}, found {:?}", f.dims())));
        }
        filters.push(f);
    }
    let eigenvalues = eigenvalues.ok_or_else(|| corrupted(METADATA, format!("stage {stage} eigenvalues missing")))?;
    FilterBank::new(shape.to_vec(), filters, eigenvalues).map_err(|e| corrupted(format!("stage{stage}"), e))
}

pub fn read_metadata(dir: impl AsRef<Path>) -> Result<ModelMetadata> {
    let path = dir.as_ref().join(METADATA);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupted(METADATA, e))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupted(METADATA, "missing format_version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| corrupted(METADATA, e))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<NetworkModel> {
    let dir = dir.as_ref();
    let meta = read_metadata(dir)?;
    let config = meta.config();
    config.validate().map_err(|e| corrupted(METADATA, e))?;

    let stage1 = match meta.stage1_kind {
        Stage1Kind::Emp => {
            let mut emps = Vec::with_capacity(meta.l1);
            for p in 0..meta.l1 {
                let vectors = meta
                    .stage1_shape
                    .iter()
                    .enumerate()
                    .map(|(n, &len)| read_vector(dir, &emp_file(p, n), len))
                    .collect::<Result<Vec<_>>>()?;
                emps.push(Emp::new(vectors).map_err(|e| corrupted(emp_file(p, 0), e))?);
            }
            Stage1Bank::Emp(EmpSet::new(emps).map_err(|e| corrupted("stage1", e))?)
        }
        Stage1Kind::Vectorized => Stage1Bank::Vectorized(read_bank(
            dir,
            1,
            meta.l1,
            &meta.stage1_shape,
            meta.stage1_eigenvalues.clone(),
        )?),
    };
    let stage2 = if meta.stages == 2 {
        let shape = [meta.patch.k1, meta.patch.k2];
        Some(read_bank(dir, 2, meta.l2, &shape, meta.stage2_eigenvalues.clone())?)
    } else {
        None
    };

    let classes = meta.classes.len();
    let w = read_section(dir, "svm/weights.tbin")?;
    if w.dims() != [classes, meta.feature_len] {
        return Err(corrupted(
            "svm/weights.tbin",
            format!("expected {classes}x{}, found {:?}", meta.feature_len, w.dims()),
        ));
    }
    let weights = w.data().chunks(meta.feature_len).map(<[f64]>::to_vec).collect();
    let biases = read_vector(dir, "svm/biases.tbin", classes)?;

    Ok(NetworkModel {
        config,
        input_dims: meta.input_dims,
        class_names: meta.class_names,
        stage1,
        stage2,
        classifier: LinearSvmModel {
            classes: meta.classes,
            weights,
            biases,
            config: meta.svm,
            seed: meta.seed,
        },
    })
}
