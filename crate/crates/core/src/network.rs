//! Two-stage convolutional feature networks: MLDANet (EMP filters in stage 1,
//! LDA filters in stage 2) and the LDANet / PCANet baselines (filters learned
//! on vectorized patches in both stages), followed by hash/histogram pooling
//! and a linear SVM.
//!
//! Stage 1 produces `L1` maps of size `I1 × I2` per sample. Stage 2 filters
//! each of them with `L2` learned kernels (same-size cross-correlation),
//! giving `L1·L2` maps grouped by their stage-1 parent. Pooling hashes each
//! group; a one-stage network hashes its `L1` stage-1 maps as a single group.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    means_from_units, pca_from_second_moment, scatters_from_units, second_moment_from_units, solve_lda_filters,
    FilterBank,
};
use crate::linalg::dot;
use crate::mlda::{class_indices, solve_mlda_with, EmpSet, MldaConfig, PatchGrid};
use crate::pooling::{block_partition, feature_len, pool_features, PoolingConfig, MAX_HASH_BITS};
use crate::svm::{train_linear_svm, LinearSvmModel, SvmConfig};
use crate::tensor::{
    conv2d_same, emp_project, extract_map_patches, extract_tensor_patches, fill_tensor_patch,
    require_order3, reshape_to_map, DenseTensor, PatchSpec,
};
use crate::workbench::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    MLDANet,
    LDANet,
    PCANet,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::MLDANet, Variant::LDANet, Variant::PCANet];

    pub fn name(self) -> &'static str {
        match self {
            Variant::MLDANet => "MLDANet",
            Variant::LDANet => "LDANet",
            Variant::PCANet => "PCANet",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

/// Alternating-solver settings for the EMP stage; the EMP count comes from `l1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub eta_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let m = MldaConfig::default();
        Self {
            max_iters: m.max_iters,
            tol: m.tol,
            eta_scale: m.eta_scale,
        }
    }
}

impl SolverConfig {
    pub fn mlda(&self, num_emps: usize) -> MldaConfig {
        MldaConfig {
            num_emps,
            max_iters: self.max_iters,
            tol: self.tol,
            eta_scale: self.eta_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub stages: usize,
    pub patch: PatchSpec,
    pub l1: usize,
    pub l2: usize,
    pub pooling: PoolingConfig,
    pub solver: SolverConfig,
    pub svm: SvmConfig,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            variant: Variant::MLDANet,
            stages: 2,
            patch: PatchSpec { k1: 3, k2: 3 },
            l1: 8,
            l2: 8,
            pooling: PoolingConfig::default(),
            solver: SolverConfig::default(),
            svm: SvmConfig::default(),
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.stages) {
            return Err(Error::InvalidConfig(format!(
                "stages must be 1 or 2, got {}",
                self.stages
            )));
        }
        if self.l1 == 0 || self.l2 == 0 {
            return Err(Error::InvalidConfig("l1 and l2 must be at least 1".into()));
        }
        let hashed = self.maps_per_group();
        if hashed > MAX_HASH_BITS {
            return Err(Error::InvalidConfig(format!(
                "cannot hash {hashed} maps (limit {MAX_HASH_BITS})"
            )));
        }
        self.patch.validate()?;
        self.pooling.validate()?;
        self.solver.mlda(self.l1).validate()?;
        self.svm.validate()
    }

    /// Maps hashed together into one integer map.
    pub fn maps_per_group(&self) -> usize {
        if self.stages == 2 {
            self.l2
        } else {
            self.l1
        }
    }

    pub fn groups(&self) -> usize {
        if self.stages == 2 {
            self.l1
        } else {
            1
        }
    }

    /// Pooled feature length for `rows × cols` maps.
    pub fn feature_len(&self, rows: usize, cols: usize) -> Result<usize> {
        let blocks = block_partition(rows, cols, &self.pooling)?.len();
        Ok(feature_len(self.groups(), self.maps_per_group(), blocks))
    }
}

/// Feature maps of one sample, grouped in consecutive runs of `maps_per_group`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapStack {
    pub maps: Vec<DenseTensor>,
    pub maps_per_group: usize,
}

impl FeatureMapStack {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn groups(&self) -> usize {
        self.maps.len() / self.maps_per_group
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage1Bank {
    /// MLDANet: one EMP per filter.
    Emp(EmpSet),
    /// LDANet / PCANet: `k1 × k2 × I3` filters applied by inner product.
    Vectorized(FilterBank),
}

impl Stage1Bank {
    pub fn len(&self) -> usize {
        match self {
            Stage1Bank::Emp(e) => e.len(),
            Stage1Bank::Vectorized(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, x: &DenseTensor) -> Result<FeatureMapStack> {
        match self {
            Stage1Bank::Emp(e) => apply_stage1(x, e),
            Stage1Bank::Vectorized(b) => apply_stage1_vectorized(x, b),
        }
    }
}

fn sample_dims(samples: &[DenseTensor]) -> Result<&[usize]> {
    let first = samples.first().ok_or_else(|| Error::Empty("no training samples".into()))?;
    require_order3(first)?;
    if samples.iter().any(|s| s.dims() != first.dims()) {
        return Err(Error::dims("training samples must share dims"));
    }
    Ok(first.dims())
}

fn check_labels(samples: &[DenseTensor], labels: &[usize]) -> Result<()> {
    if samples.len() != labels.len() {
        return Err(Error::dims(format!(
            "{} samples, {} labels",
            samples.len(),
            labels.len()
        )));
    }
    if class_indices(labels).0.len() < 2 {
        return Err(Error::DegenerateClasses("need at least 2 classes".into()));
    }
    Ok(())
}

/// Learns `l1` EMPs from every tensor patch of every training sample; each
/// patch carries its sample's label.
pub fn train_stage1_mlda(samples: &[DenseTensor], labels: &[usize], cfg: &NetworkConfig) -> Result<EmpSet> {
    check_labels(samples, labels)?;
    sample_dims(samples)?;
    let grid = PatchGrid::new(samples, cfg.patch)?;
    let patch_labels = grid.expand_labels(labels);
    solve_mlda_with(&grid, &patch_labels, &cfg.solver.mlda(cfg.l1))
}

fn check_emp_bank(x: &DenseTensor, bank: &EmpSet) -> Result<PatchSpec> {
    require_order3(x)?;
    let d = bank.dims();
    if d.len() != 3 || d[2] != x.dims()[2] {
        return Err(Error::dims(format!(
            "EMP dims {d:?} do not fit sample dims {:?}",
            x.dims()
        )));
    }
    PatchSpec::new(d[0], d[1])
}

/// Stage-1 MLDANet maps: `F_l(i1, i2)` is the `l`-th EMP of the patch centered
/// at `(i1, i2)`. Evaluated separably: contract the depth mode first, then
/// cross-correlate with the rank-1 kernel `u⁽¹⁾u⁽²⁾ᵀ`.
pub fn apply_stage1(x: &DenseTensor, bank: &EmpSet) -> Result<FeatureMapStack> {
    check_emp_bank(x, bank)?;
    let (rows, cols) = (x.dims()[0], x.dims()[1]);
    let mut maps = Vec::with_capacity(bank.len());
    for emp in &bank.emps {
        let u3 = emp.vectors[2].as_slice();
        let plane: Vec<f64> = x.data().chunks(u3.len()).map(|fiber| dot(fiber, u3)).collect();
        let plane = DenseTensor::new(vec![rows, cols], plane)?;
        let (u1, u2) = (&emp.vectors[0], &emp.vectors[1]);
        let kernel = DenseTensor::from_fn(&[u1.len(), u2.len()], |i| u1[i[0]] * u2[i[1]]);
        maps.push(conv2d_same(&plane, &kernel)?);
    }
    Ok(FeatureMapStack {
        maps,
        maps_per_group: bank.len(),
    })
}

/// Same maps as [`apply_stage1`], evaluated literally: one EMP per extracted patch.
pub fn apply_stage1_by_patches(x: &DenseTensor, bank: &EmpSet) -> Result<FeatureMapStack> {
    let spec = check_emp_bank(x, bank)?;
    let patches = extract_tensor_patches(x, spec)?;
    let (rows, cols) = (x.dims()[0], x.dims()[1]);
    let mut maps = Vec::with_capacity(bank.len());
    for emp in &bank.emps {
        let refs = emp.as_refs();
        let ys = patches
            .patches
            .iter()
            .map(|p| emp_project(p, &refs))
            .collect::<Result<Vec<f64>>>()?;
        maps.push(reshape_to_map(&ys, rows, cols)?);
    }
    Ok(FeatureMapStack {
        maps,
        maps_per_group: bank.len(),
    })
}

fn mean_removed_tensor_patches(x: &DenseTensor, spec: PatchSpec) -> DMatrix<f64> {
    let (rows, cols, depth) = (x.dims()[0], x.dims()[1], x.dims()[2]);
    let d = spec.area() * depth;
    let mut out = DMatrix::<f64>::zeros(d, rows * cols);
    let mut buf = vec![0.0; d];
    for q in 0..rows * cols {
        fill_tensor_patch(x, spec, q / cols, q % cols, &mut buf);
        let mean = buf.iter().sum::<f64>() / d as f64;
        for (dst, v) in out.column_mut(q).iter_mut().zip(&buf) {
            *dst = v - mean;
        }
    }
    out
}

/// LDANet / PCANet stage 1: filters learned on mean-removed vectorized tensor
/// patches, one patch matrix per sample.
pub fn train_stage1_vectorized(samples: &[DenseTensor], labels: &[usize], cfg: &NetworkConfig) -> Result<FilterBank> {
    check_labels(samples, labels)?;
    let dims = sample_dims(samples)?;
    cfg.patch.validate()?;
    let shape = vec![cfg.patch.k1, cfg.patch.k2, dims[2]];
    let d: usize = shape.iter().product();
    let n = dims[0] * dims[1];
    let make = |m: usize| mean_removed_tensor_patches(&samples[m], cfg.patch);
    match cfg.variant {
        Variant::PCANet => {
            let moment = second_moment_from_units(samples.len(), d, make);
            pca_from_second_moment(&moment, cfg.l1, &shape)
        }
        Variant::LDANet | Variant::MLDANet => {
            let means = means_from_units(samples.len(), labels, d, n, make)?;
            let scatters = scatters_from_units(samples.len(), labels, &means, make)?;
            solve_lda_filters(&scatters, cfg.l1, &shape, cfg.solver.eta_scale)
        }
    }
}

fn depth_slice(x: &DenseTensor, c: usize) -> DenseTensor {
    let depth = x.dims()[2];
    let data = x.data().iter().skip(c).step_by(depth).copied().collect();
    DenseTensor::new(vec![x.dims()[0], x.dims()[1]], data).expect("slice dims")
}

/// Stage-1 maps for vectorized filters: the inner product of every
/// zero-padded patch with each `k1 × k2 × I3` filter.
pub fn apply_stage1_vectorized(x: &DenseTensor, bank: &FilterBank) -> Result<FeatureMapStack> {
    require_order3(x)?;
    if bank.shape.len() != 3 || bank.shape[2] != x.dims()[2] {
        return Err(Error::dims(format!(
            "filter shape {:?} does not fit sample dims {:?}",
            bank.shape,
            x.dims()
        )));
    }
    let depth = x.dims()[2];
    let slices: Vec<DenseTensor> = (0..depth).map(|c| depth_slice(x, c)).collect();
    let mut maps = Vec::with_capacity(bank.len());
    for f in &bank.filters {
        let mut acc: Option<DenseTensor> = None;
        for (c, s) in slices.iter().enumerate() {
            let g = conv2d_same(s, &depth_slice(f, c))?;
            acc = Some(match acc {
                None => g,
                Some(mut a) => {
                    a.data_mut().iter_mut().zip(g.data()).for_each(|(x, y)| *x += y);
                    a
                }
            });
        }
        maps.push(acc.expect("depth >= 1"));
    }
    Ok(FeatureMapStack {
        maps,
        maps_per_group: bank.len(),
    })
}

fn map_patch_matrix(map: &DenseTensor, spec: PatchSpec) -> Result<DMatrix<f64>> {
    let patches = extract_map_patches(map, spec, true)?;
    let d = spec.area();
    Ok(DMatrix::from_fn(d, patches.len(), |i, j| patches[j][i]))
}

/// Stage-2 filters from the stage-1 maps of all training samples. Each map's
/// mean-removed patch matrix is one labeled unit. LDA for MLDANet/LDANet,
/// PCA over the same patches for PCANet.
pub fn train_stage2(stacks: &[FeatureMapStack], labels: &[usize], cfg: &NetworkConfig) -> Result<FilterBank> {
    if stacks.len() != labels.len() {
        return Err(Error::dims(format!("{} stacks, {} labels", stacks.len(), labels.len())));
    }
    let per = stacks.first().ok_or_else(|| Error::Empty("no stage-1 maps".into()))?.len();
    if per == 0 || stacks.iter().any(|s| s.len() != per) {
        return Err(Error::dims("every sample needs the same number of stage-1 maps"));
    }
    let spec = cfg.patch;
    spec.validate()?;
    let shape = vec![spec.k1, spec.k2];
    let d = spec.area();
    let (rows, cols) = (stacks[0].maps[0].rows(), stacks[0].maps[0].cols());
    let units = stacks.len() * per;
    let make = |u: usize| map_patch_matrix(&stacks[u / per].maps[u % per], spec).expect("validated map");
    match cfg.variant {
        Variant::PCANet => {
            let moment = second_moment_from_units(units, d, make);
            pca_from_second_moment(&moment, cfg.l2, &shape)
        }
        Variant::MLDANet | Variant::LDANet => {
            if class_indices(labels).0.len() < 2 {
                return Err(Error::DegenerateClasses("need at least 2 classes".into()));
            }
            let unit_labels: Vec<usize> = labels
                .iter()
                .flat_map(|&l| std::iter::repeat_n(l, per))
                .collect();
            let means = means_from_units(units, &unit_labels, d, rows * cols, make)?;
            let scatters = scatters_from_units(units, &unit_labels, &means, make)?;
            solve_lda_filters(&scatters, cfg.l2, &shape, cfg.solver.eta_scale)
        }
    }
}

/// Convolves every stage-1 map with every stage-2 filter; output order is
/// `(l, h)` with `h` fastest.
pub fn apply_stage2(stack: &FeatureMapStack, bank: &FilterBank) -> Result<FeatureMapStack> {
    if bank.shape.len() != 2 {
        return Err(Error::dims("stage-2 filters must be 2D"));
    }
    let mut maps = Vec::with_capacity(stack.len() * bank.len());
    for f in &stack.maps {
        for v in &bank.filters {
            maps.push(conv2d_same(f, v)?);
        }
    }
    Ok(FeatureMapStack {
        maps,
        maps_per_group: bank.len(),
    })
}

/// A trained network. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub config: NetworkConfig,
    pub input_dims: Vec<usize>,
    pub class_names: Vec<String>,
    pub stage1: Stage1Bank,
    pub stage2: Option<FilterBank>,
    pub classifier: LinearSvmModel,
}

impl NetworkModel {
    /// The maps that get pooled: stage-1 maps for one-stage networks,
    /// stage-2 maps otherwise.
    pub fn forward(&self, x: &DenseTensor) -> Result<FeatureMapStack> {
        if x.dims() != self.input_dims.as_slice() {
            return Err(Error::dims(format!(
                "input dims {:?}, model trained on {:?}",
                x.dims(),
                self.input_dims
            )));
        }
        let s1 = self.stage1.apply(x)?;
        match &self.stage2 {
            Some(bank) => apply_stage2(&s1, bank),
            None => Ok(s1),
        }
    }

    pub fn extract_features(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        let stack = self.forward(x)?;
        pool_features(&stack.maps, stack.maps_per_group, &self.config.pooling)
    }

    pub fn extract_all(&self, samples: &[DenseTensor]) -> Result<Vec<Vec<f64>>> {
        samples.par_iter().map(|x| self.extract_features(x)).collect()
    }

    pub fn predict(&self, x: &DenseTensor) -> Result<usize> {
        self.classifier.predict(&self.extract_features(x)?)
    }

    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        let feats = self.extract_all(&ds.samples)?;
        self.classifier.accuracy(&feats, &ds.labels)
    }
}

pub fn extract_features(model: &NetworkModel, x: &DenseTensor) -> Result<Vec<f64>> {
    model.extract_features(x)
}

/// Sample order used for every reduction during training: by label, then by
/// data (total order on bits). Training is thereby independent of input order.
fn canonical_order(samples: &[DenseTensor], labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        labels[a].cmp(&labels[b]).then_with(|| {
            samples[a]
                .data()
                .iter()
                .zip(samples[b].data())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

pub fn train_network(train: &LabeledDataset, cfg: &NetworkConfig) -> Result<NetworkModel> {
    train_network_on(&train.samples, &train.labels, &train.class_names, cfg)
}

pub fn train_network_on(
    samples: &[DenseTensor],
    labels: &[usize],
    class_names: &[String],
    cfg: &NetworkConfig,
) -> Result<NetworkModel> {
    cfg.validate()?;
    check_labels(samples, labels)?;
    let dims = sample_dims(samples)?.to_vec();
    cfg.feature_len(dims[0], dims[1])?;

    let order = canonical_order(samples, labels);
    let samples: Vec<DenseTensor> = order.iter().map(|&i| samples[i].clone()).collect();
    let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();

    let stage1 = match cfg.variant {
        Variant::MLDANet => Stage1Bank::Emp(train_stage1_mlda(&samples, &labels, cfg)?),
        Variant::LDANet | Variant::PCANet => Stage1Bank::Vectorized(train_stage1_vectorized(&samples, &labels, cfg)?),
    };
    let s1: Vec<FeatureMapStack> = samples
        .par_iter()
        .map(|x| stage1.apply(x))
        .collect::<Result<_>>()?;

    let stage2 = if cfg.stages == 2 {
        Some(train_stage2(&s1, &labels, cfg)?)
    } else {
        None
    };

    let features: Vec<Vec<f64>> = s1
        .into_par_iter()
        .map(|stack| {
            let pooled = match &stage2 {
                Some(bank) => apply_stage2(&stack, bank)?,
                None => stack,
            };
            pool_features(&pooled.maps, pooled.maps_per_group, &cfg.pooling)
        })
        .collect::<Result<_>>()?;

    let classifier = train_linear_svm(&features, &labels, &cfg.svm, cfg.seed)?;
    Ok(NetworkModel {
        config: *cfg,
        input_dims: dims,
        class_names: class_names.to_vec(),
        stage1,
        stage2,
        classifier,
    })
}
