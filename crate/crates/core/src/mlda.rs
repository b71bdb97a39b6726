//! Multilinear discriminant analysis: learns a bank of elementary multilinear
//! projections (EMPs), each maximizing the scalar Fisher ratio of the
//! projected samples.
//!
//! Every EMP is found by alternating over modes. With all other mode vectors
//! fixed, each sample collapses to a vector along the free mode, the scalar
//! scatters become quadratic forms `uᵀ S̃ u`, and the regularized Fisher ratio
//! `uᵀS̃_B u / (uᵀS̃_W u + η)` is maximized in closed form by the dominant
//! generalized eigenvector of `(S̃_B, S̃_W + ηI)`.
//!
//! EMPs are kept mutually orthogonal as rank-1 tensors:
//! `⟨U_p, U_q⟩ = Π_n ⟨u_p⁽ⁿ⁾, u_q⁽ⁿ⁾⟩ = 0`. With the other modes fixed that
//! constraint is linear in the free vector, so each mode update is a Rayleigh
//! quotient maximization over a subspace that contains the current vector.
//! The Fisher trace is therefore non-decreasing across sweeps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{complement_basis, dot, fix_sign, generalized_eigen, normalize, orthonormalize};
use crate::tensor::{check_projection_vectors, contract_except, fill_tensor_patch, DenseTensor, PatchSpec};

/// Threshold below which a product of cosines is treated as an exact zero.
const ORTHO_EPS: f64 = 1e-10;

/// One unit vector per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Emp {
    pub vectors: Vec<Vec<f64>>,
}

impl Emp {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dims: Vec<usize> = vectors.iter().map(Vec::len).collect();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::dims("EMP needs at least one non-empty vector"));
        }
        let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
        check_projection_vectors(&dims, &refs, None)?;
        Ok(Self { vectors })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vectors.iter().map(Vec::len).collect()
    }

    pub fn as_refs(&self) -> Vec<&[f64]> {
        self.vectors.iter().map(Vec::as_slice).collect()
    }

    /// Frobenius inner product of the two rank-1 tensors.
    pub fn tensor_inner(&self, other: &Emp) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| dot(a, b))
            .product()
    }

    /// The rank-1 tensor `u⁽¹⁾ ∘ … ∘ u⁽ᴺ⁾`.
    pub fn outer(&self) -> DenseTensor {
        let dims = self.dims();
        DenseTensor::from_fn(&dims, |idx| {
            idx.iter()
                .zip(&self.vectors)
                .map(|(&i, v)| v[i])
                .product()
        })
    }
}

/// The stage-1 filter bank: `P ≥ 1` EMPs over the same mode extents.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpSet {
    pub emps: Vec<Emp>,
}

impl EmpSet {
    pub fn new(emps: Vec<Emp>) -> Result<Self> {
        let first = emps
            .first()
            .ok_or_else(|| Error::Empty("EMP set needs at least one EMP".into()))?
            .dims();
        if emps.iter().any(|e| e.dims() != first) {
            return Err(Error::dims("EMPs in a set must share mode extents"));
        }
        Ok(Self { emps })
    }

    pub fn len(&self) -> usize {
        self.emps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emps.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.emps[0].dims()
    }

    /// Largest `|⟨U_p, U_q⟩|` over distinct pairs.
    pub fn max_cross_inner(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..self.emps.len() {
            for q in 0..p {
                worst = worst.max(self.emps[p].tensor_inner(&self.emps[q]).abs());
            }
        }
        worst
    }
}

/// Tensor-to-vector projection: component `p` is the `p`-th EMP of `x`.
pub fn tvp_project(x: &DenseTensor, emps: &EmpSet) -> Result<Vec<f64>> {
    emps.emps
        .iter()
        .map(|e| crate::tensor::emp_project(x, &e.as_refs()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherStats {
    pub s_b: f64,
    pub s_w: f64,
    /// `s_b / (s_w + η)`.
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MldaConfig {
    pub num_emps: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub eta_scale: f64,
}

impl Default for MldaConfig {
    fn default() -> Self {
        Self {
            num_emps: 1,
            max_iters: 20,
            tol: 1e-6,
            eta_scale: 1e-3,
        }
    }
}

impl MldaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_emps == 0 {
            return Err(Error::InvalidConfig("num_emps must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.eta_scale.is_nan() || self.eta_scale <= 0.0 {
            return Err(Error::InvalidConfig("eta_scale must be positive".into()));
        }
        Ok(())
    }
}

/// A collection of equally-shaped tensors the solver can iterate over without
/// materializing them all at once.
pub trait ProjectionSource: Sync {
    fn len(&self) -> usize;
    fn item_dims(&self) -> &[usize];
    /// Writes item `idx` (row-major) into `buf`.
    fn fill(&self, idx: usize, buf: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A list of same-shaped tensors.
pub struct TensorSamples<'a> {
    samples: &'a [DenseTensor],
    dims: Vec<usize>,
}

impl<'a> TensorSamples<'a> {
    pub fn new(samples: &'a [DenseTensor]) -> Result<Self> {
        let dims = samples
            .first()
            .ok_or_else(|| Error::Empty("no samples".into()))?
            .dims()
            .to_vec();
        if samples.iter().any(|s| s.dims() != dims.as_slice()) {
            return Err(Error::dims("samples must share dims"));
        }
        Ok(Self { samples, dims })
    }
}

impl ProjectionSource for TensorSamples<'_> {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn item_dims(&self) -> &[usize] {
        &self.dims
    }

    fn fill(&self, idx: usize, buf: &mut [f64]) {
        buf.copy_from_slice(self.samples[idx].data());
    }
}

/// Every zero-padded `k1 × k2 × I3` patch of a list of order-3 samples, in
/// (sample, row-major grid position) order, generated on demand.
pub struct PatchGrid<'a> {
    samples: &'a [DenseTensor],
    spec: PatchSpec,
    dims: Vec<usize>,
    per_sample: usize,
    cols: usize,
}

impl<'a> PatchGrid<'a> {
    pub fn new(samples: &'a [DenseTensor], spec: PatchSpec) -> Result<Self> {
        spec.validate()?;
        let first = samples
            .first()
            .ok_or_else(|| Error::Empty("no samples".into()))?;
        crate::tensor::require_order3(first)?;
        if samples.iter().any(|s| s.dims() != first.dims()) {
            return Err(Error::dims("samples must share dims"));
        }
        let d = first.dims();
        Ok(Self {
            samples,
            spec,
            dims: vec![spec.k1, spec.k2, d[2]],
            per_sample: d[0] * d[1],
            cols: d[1],
        })
    }

    pub fn patches_per_sample(&self) -> usize {
        self.per_sample
    }

    /// Expands per-sample labels to per-patch labels.
    pub fn expand_labels(&self, labels: &[usize]) -> Vec<usize> {
        labels
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l, self.per_sample))
            .collect()
    }
}

impl ProjectionSource for PatchGrid<'_> {
    fn len(&self) -> usize {
        self.samples.len() * self.per_sample
    }

    fn item_dims(&self) -> &[usize] {
        &self.dims
    }

    fn fill(&self, idx: usize, buf: &mut [f64]) {
        let m = idx / self.per_sample;
        let q = idx % self.per_sample;
        fill_tensor_patch(&self.samples[m], self.spec, q / self.cols, q % self.cols, buf);
    }
}

/// Dense class indices for arbitrary labels; classes are ordered by label value.
pub(crate) fn class_indices(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, idx)
}

fn require_two_classes(labels: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let (classes, idx) = class_indices(labels);
    if classes.len() < 2 {
        return Err(Error::DegenerateClasses(format!(
            "need at least 2 classes, found {}",
            classes.len()
        )));
    }
    Ok((classes, idx))
}

/// Contracts mode `n`'s complement: `x` against every `u⁽ᵏ⁾`, `k ≠ n`.
///
/// `others` holds the vectors of all modes except `n`, in mode order.
pub fn partial_mode_projection(x: &DenseTensor, others: &[&[f64]], mode: usize) -> Result<Vec<f64>> {
    let order = x.order();
    if mode >= order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    if others.len() + 1 != order {
        return Err(Error::dims(format!(
            "expected {} vectors for the other modes, got {}",
            order - 1,
            others.len()
        )));
    }
    let mut full: Vec<&[f64]> = others.to_vec();
    full.insert(mode, &[]);
    for (k, (v, &d)) in full.iter().zip(x.dims()).enumerate() {
        if k != mode && v.len() != d {
            return Err(Error::dims(format!(
                "mode {k} vector has length {}, extent is {d}",
                v.len()
            )));
        }
    }
    Ok(contract_except(x.dims(), x.data(), &full, Some(mode)))
}

fn partials<S: ProjectionSource + ?Sized>(source: &S, vectors: &[&[f64]], mode: usize) -> Vec<Vec<f64>> {
    let dims = source.item_dims().to_vec();
    let size: usize = dims.iter().product();
    (0..source.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; size],
            |buf, i| {
                source.fill(i, buf);
                contract_except(&dims, buf, vectors, Some(mode))
            },
        )
        .collect()
}

fn scalars<S: ProjectionSource + ?Sized>(source: &S, vectors: &[&[f64]]) -> Vec<f64> {
    let dims = source.item_dims().to_vec();
    let size: usize = dims.iter().product();
    (0..source.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; size],
            |buf, i| {
                source.fill(i, buf);
                contract_except(&dims, buf, vectors, None)[0]
            },
        )
        .collect()
}

/// Between- and within-class scatter matrices of mode-`n` partial projections.
///
/// `S̃_B = Σ_c N_c (ȳ_c − ȳ)(ȳ_c − ȳ)ᵀ`, `S̃_W = Σ_m (ỹ_m − ȳ_{c_m})(ỹ_m − ȳ_{c_m})ᵀ`.
/// Sums run in input order.
pub fn mode_scatters(projections: &[Vec<f64>], labels: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if projections.len() != labels.len() {
        return Err(Error::dims(format!(
            "{} projections, {} labels",
            projections.len(),
            labels.len()
        )));
    }
    if projections.len() < 2 {
        return Err(Error::DegenerateClasses("need at least 2 samples".into()));
    }
    let (classes, idx) = require_two_classes(labels)?;
    let d = projections[0].len();
    if projections.iter().any(|p| p.len() != d) {
        return Err(Error::dims("projections must share length"));
    }
    let mut counts = vec![0usize; classes.len()];
    let mut class_sum = vec![DVector::<f64>::zeros(d); classes.len()];
    let mut total = DVector::<f64>::zeros(d);
    for (p, &c) in projections.iter().zip(&idx) {
        let v = DVector::from_column_slice(p);
        counts[c] += 1;
        class_sum[c] += &v;
        total += v;
    }
    let mean = total / projections.len() as f64;
    let class_mean: Vec<DVector<f64>> = class_sum
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s / n as f64)
        .collect();

    let mut s_b = DMatrix::<f64>::zeros(d, d);
    for (mc, &n) in class_mean.iter().zip(&counts) {
        let diff = mc - &mean;
        s_b += (&diff * diff.transpose()) * n as f64;
    }
    let mut s_w = DMatrix::<f64>::zeros(d, d);
    for (p, &c) in projections.iter().zip(&idx) {
        let diff = DVector::from_column_slice(p) - &class_mean[c];
        s_w += &diff * diff.transpose();
    }
    Ok((s_b, s_w))
}

/// Scalar between/within scatters of projected values.
pub(crate) fn scalar_scatters(ys: &[f64], labels: &[usize]) -> Result<(f64, f64)> {
    let (classes, idx) = require_two_classes(labels)?;
    let mut counts = vec![0usize; classes.len()];
    let mut sums = vec![0.0; classes.len()];
    let mut total = 0.0;
    for (&y, &c) in ys.iter().zip(&idx) {
        counts[c] += 1;
        sums[c] += y;
        total += y;
    }
    let mean = total / ys.len() as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect();
    let s_b = means
        .iter()
        .zip(&counts)
        .map(|(m, &n)| n as f64 * (m - mean) * (m - mean))
        .sum();
    let s_w = ys
        .iter()
        .zip(&idx)
        .map(|(y, &c)| (y - means[c]) * (y - means[c]))
        .sum();
    Ok((s_b, s_w))
}

fn stats(s_b: f64, s_w: f64, eta: f64) -> FisherStats {
    FisherStats {
        s_b,
        s_w,
        f: s_b / (s_w + eta),
    }
}

/// Scalar Fisher statistics of `samples` projected through one EMP.
pub fn fisher_value(samples: &[DenseTensor], labels: &[usize], emp: &Emp, eta: f64) -> Result<FisherStats> {
    let source = TensorSamples::new(samples)?;
    fisher_value_with(&source, labels, emp, eta)
}

pub fn fisher_value_with<S: ProjectionSource + ?Sized>(
    source: &S,
    labels: &[usize],
    emp: &Emp,
    eta: f64,
) -> Result<FisherStats> {
    if labels.len() != source.len() {
        return Err(Error::dims(format!("{} samples, {} labels", source.len(), labels.len())));
    }
    let refs = emp.as_refs();
    check_projection_vectors(source.item_dims(), &refs, None)?;
    let ys = scalars(source, &refs);
    let (s_b, s_w) = scalar_scatters(&ys, labels)?;
    Ok(stats(s_b, s_w, eta))
}

/// Regularizer shared by every mode update of a solve:
/// `eta_scale · Σ_m ‖X_m − X̄_{c_m}‖² / Π dims`, or `eta_scale` when that is 0.
///
/// This is the expected within-class scalar scatter along a random unit
/// rank-1 direction, scaled, so it tracks the data's units.
pub fn regularizer<S: ProjectionSource + ?Sized>(source: &S, labels: &[usize], eta_scale: f64) -> Result<f64> {
    let (classes, idx) = require_two_classes(labels)?;
    let size: usize = source.item_dims().iter().product();
    let mut buf = vec![0.0; size];
    let mut sums = vec![vec![0.0; size]; classes.len()];
    let mut counts = vec![0usize; classes.len()];
    for (i, &c) in idx.iter().enumerate() {
        source.fill(i, &mut buf);
        counts[c] += 1;
        sums[c].iter_mut().zip(&buf).for_each(|(s, v)| *s += v);
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut within = 0.0;
    for (i, &c) in idx.iter().enumerate() {
        source.fill(i, &mut buf);
        within += buf
            .iter()
            .zip(&sums[c])
            .map(|(v, m)| (v - m) * (v - m))
            .sum::<f64>();
    }
    let trace = within / size as f64;
    Ok(if trace > 0.0 { eta_scale * trace } else { eta_scale })
}

/// Mode-`n` directions of previous EMPs that still constrain the free vector:
/// those whose other-mode cosine product is non-zero.
fn active_constraints(current: &[Vec<f64>], previous: &[Emp], mode: usize) -> Vec<Vec<f64>> {
    previous
        .iter()
        .filter(|q| {
            let c: f64 = (0..current.len())
                .filter(|&k| k != mode)
                .map(|k| dot(&current[k], &q.vectors[k]))
                .product();
            c.abs() > ORTHO_EPS
        })
        .map(|q| q.vectors[mode].clone())
        .collect()
}

/// Projection of the all-ones direction onto `basis`, normalized; falls back
/// to the first basis vector when the projection vanishes.
fn ones_in(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for b in basis {
        let c: f64 = b.iter().sum();
        v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    if normalize(&mut v) < 1e-8 {
        v = basis[0].clone();
    }
    fix_sign(&mut v);
    v
}

/// Candidate vectors for one mode: for each rotation of the constraint list,
/// greedily take constraint directions while one free direction remains and
/// project the all-ones vector onto what is left. Duplicates are dropped.
fn mode_candidates(unsatisfied: &[&Emp], mode: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for start in 0..unsatisfied.len().max(1) {
        let mut chosen: Vec<Vec<f64>> = Vec::new();
        for i in 0..unsatisfied.len() {
            let q = unsatisfied[(start + i) % unsatisfied.len()];
            let mut trial = chosen.clone();
            trial.push(q.vectors[mode].clone());
            if orthonormalize(&trial, 1e-10).len() < dim {
                chosen = trial;
            }
        }
        let v = ones_in(&complement_basis(&chosen, dim), dim);
        if !out.iter().any(|w| dot(w, &v).abs() > 1.0 - 1e-12) {
            out.push(v);
        }
    }
    out
}

const INIT_SEARCH_BUDGET: usize = 20_000;

fn search_init(
    dims: &[usize],
    order: &[usize],
    depth: usize,
    vectors: &mut Vec<Vec<f64>>,
    unsatisfied: &[&Emp],
    budget: &mut usize,
) -> bool {
    if unsatisfied.is_empty() {
        return true;
    }
    if depth == order.len() || *budget == 0 {
        return false;
    }
    let mode = order[depth];
    for v in mode_candidates(unsatisfied, mode, dims[mode]) {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let rest: Vec<&Emp> = unsatisfied
            .iter()
            .copied()
            .filter(|q| dot(&v, &q.vectors[mode]).abs() > ORTHO_EPS)
            .collect();
        let saved = std::mem::replace(&mut vectors[mode], v);
        if search_init(dims, order, depth + 1, vectors, &rest, budget) {
            return true;
        }
        vectors[mode] = saved;
    }
    false
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Feasible starting point: normalized all-ones vectors, adjusted mode by mode
/// until the rank-1 tensor is orthogonal to every previous EMP. A bounded
/// depth-first search over mode orders and constraint selections.
fn initial_vectors(dims: &[usize], previous: &[Emp]) -> Result<Vec<Vec<f64>>> {
    let ones: Vec<Vec<f64>> = dims.iter().map(|&d| vec![1.0 / (d as f64).sqrt(); d]).collect();
    let all: Vec<&Emp> = previous.iter().collect();
    let mut budget = INIT_SEARCH_BUDGET;
    for order in permutations(dims.len()) {
        let mut vectors = ones.clone();
        if search_init(dims, &order, 0, &mut vectors, &all, &mut budget) {
            return Ok(vectors);
        }
    }
    Err(Error::NoRemainingDirections(format!(
        "cannot find a unit rank-1 direction orthogonal to {} previous EMPs",
        previous.len()
    )))
}

fn rayleigh(s_b: &DMatrix<f64>, s_w: &DMatrix<f64>, eta: f64, u: &[f64]) -> f64 {
    let u = DVector::from_column_slice(u);
    let num = (u.transpose() * s_b * &u)[(0, 0)];
    let den = (u.transpose() * s_w * &u)[(0, 0)] + eta;
    num / den
}

/// Finds one EMP maximizing the regularized Fisher ratio, orthogonal (as a
/// rank-1 tensor) to every EMP in `previous`. Returns the EMP and the Fisher
/// statistics recorded after each sweep.
pub fn solve_emp(
    samples: &[DenseTensor],
    labels: &[usize],
    cfg: &MldaConfig,
    previous: &[Emp],
) -> Result<(Emp, Vec<FisherStats>)> {
    let source = TensorSamples::new(samples)?;
    solve_emp_with(&source, labels, cfg, previous)
}

pub fn solve_emp_with<S: ProjectionSource + ?Sized>(
    source: &S,
    labels: &[usize],
    cfg: &MldaConfig,
    previous: &[Emp],
) -> Result<(Emp, Vec<FisherStats>)> {
    cfg.validate()?;
    if labels.len() != source.len() {
        return Err(Error::dims(format!("{} samples, {} labels", source.len(), labels.len())));
    }
    let eta = regularizer(source, labels, cfg.eta_scale)?;
    solve_emp_inner(source, labels, cfg, previous, eta)
}

fn solve_emp_inner<S: ProjectionSource + ?Sized>(
    source: &S,
    labels: &[usize],
    cfg: &MldaConfig,
    previous: &[Emp],
    eta: f64,
) -> Result<(Emp, Vec<FisherStats>)> {
    let dims = source.item_dims().to_vec();
    if previous.iter().any(|q| q.dims() != dims) {
        return Err(Error::dims("previous EMPs do not match sample dims"));
    }
    let mut vectors = initial_vectors(&dims, previous)?;
    let mut trace: Vec<FisherStats> = Vec::new();

    for _ in 0..cfg.max_iters {
        for mode in 0..dims.len() {
            let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
            let proj = partials(source, &refs, mode);
            let (s_b, s_w) = mode_scatters(&proj, labels)?;

            let basis = complement_basis(&active_constraints(&vectors, previous, mode), dims[mode]);
            if basis.is_empty() {
                continue;
            }
            let q = DMatrix::from_fn(dims[mode], basis.len(), |i, j| basis[j][i]);
            let a = q.transpose() * &s_b * &q;
            let b = q.transpose() * &s_w * &q + DMatrix::identity(basis.len(), basis.len()) * eta;
            let (_, z) = generalized_eigen(&a, &b).swap_remove(0);
            let mut u: Vec<f64> = (&q * DVector::from_vec(z)).iter().copied().collect();
            normalize(&mut u);
            fix_sign(&mut u);
            if rayleigh(&s_b, &s_w, eta, &u) >= rayleigh(&s_b, &s_w, eta, &vectors[mode]) {
                vectors[mode] = u;
            }
        }

        let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
        let ys = scalars(source, &refs);
        let (s_b, s_w) = scalar_scatters(&ys, labels)?;
        let current = stats(s_b, s_w, eta);
        let done = trace
            .last()
            .is_some_and(|prev| current.f - prev.f < cfg.tol * prev.f.abs().max(f64::MIN_POSITIVE));
        trace.push(current);
        if done {
            break;
        }
    }
    Ok((Emp { vectors }, trace))
}

/// Greedy sequence of `cfg.num_emps` EMPs, each solved with the earlier ones
/// as orthogonality constraints.
pub fn solve_mlda(samples: &[DenseTensor], labels: &[usize], cfg: &MldaConfig) -> Result<EmpSet> {
    let source = TensorSamples::new(samples)?;
    solve_mlda_with(&source, labels, cfg)
}

pub fn solve_mlda_with<S: ProjectionSource + ?Sized>(
    source: &S,
    labels: &[usize],
    cfg: &MldaConfig,
) -> Result<EmpSet> {
    cfg.validate()?;
    if labels.len() != source.len() {
        return Err(Error::dims(format!("{} samples, {} labels", source.len(), labels.len())));
    }
    let capacity: usize = source.item_dims().iter().product();
    if cfg.num_emps > capacity {
        return Err(Error::TooManyFilters {
            requested: cfg.num_emps,
            available: capacity,
        });
    }
    let eta = regularizer(source, labels, cfg.eta_scale)?;
    let mut emps: Vec<Emp> = Vec::with_capacity(cfg.num_emps);
    for _ in 0..cfg.num_emps {
        let (emp, _) = solve_emp_inner(source, labels, cfg, &emps, eta)?;
        emps.push(emp);
    }
    EmpSet::new(emps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(dims: &[usize]) -> DenseTensor {
        DenseTensor::filled(dims, 1.0)
    }

    #[test]
    fn partial_projection_of_ones() {
        let x = ones(&[2, 2, 2]);
        let u = [std::f64::consts::FRAC_1_SQRT_2; 2];
        let v = partial_mode_projection(&x, &[&u, &u], 0).unwrap();
        assert_eq!(v.len(), 2);
        for c in v {
            assert!((c - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_projection_with_basis_is_fiber() {
        let x = DenseTensor::from_fn(&[2, 3, 4], |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64);
        let e0 = [0.0, 1.0];
        let e2 = [0.0, 0.0, 1.0, 0.0];
        let v = partial_mode_projection(&x, &[&e0, &e2], 1).unwrap();
        assert_eq!(v, vec![102.0, 112.0, 122.0]);
        assert!(partial_mode_projection(&x, &[&e0], 1).is_err());
    }

    #[test]
    fn scatters_degenerate_cases() {
        let p = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let (_, s_w) = mode_scatters(&p, &[0, 1]).unwrap();
        assert!(s_w.iter().all(|&v| v == 0.0));

        let same = vec![vec![1.0, 2.0]; 4];
        let (s_b, _) = mode_scatters(&same, &[0, 0, 1, 1]).unwrap();
        assert!(s_b.iter().all(|&v| v == 0.0));

        assert!(matches!(
            mode_scatters(&same, &[3, 3, 3, 3]),
            Err(Error::DegenerateClasses(_))
        ));
    }

    #[test]
    fn fisher_value_degenerate_cases() {
        let u = [std::f64::consts::FRAC_1_SQRT_2; 2];
        let emp = Emp::new(vec![u.to_vec(), u.to_vec()]).unwrap();
        // Equal class means.
        let a = DenseTensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = DenseTensor::matrix(2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let st = fisher_value(&[a.clone(), b.clone(), b, a], &[0, 0, 1, 1], &emp, 0.1).unwrap();
        assert_eq!(st.s_b, 0.0);
        assert_eq!(st.f, 0.0);
        // One sample per class.
        let c = DenseTensor::filled(&[2, 2], 2.0);
        let d = DenseTensor::filled(&[2, 2], -1.0);
        let st = fisher_value(&[c, d], &[4, 9], &emp, 0.5).unwrap();
        assert_eq!(st.s_w, 0.0);
        assert!((st.f - st.s_b / 0.5).abs() < 1e-12);
        assert!(st.s_b > 0.0);
    }

    #[test]
    fn single_class_solve_fails() {
        let xs = vec![ones(&[2, 2, 2]); 3];
        let r = solve_emp(&xs, &[1, 1, 1], &MldaConfig::default(), &[]);
        assert!(matches!(r, Err(Error::DegenerateClasses(_))));
    }

    #[test]
    fn initial_vectors_satisfy_constraints() {
        let dims = [3, 3, 2];
        let mut prev: Vec<Emp> = Vec::new();
        for _ in 0..10 {
            let v = initial_vectors(&dims, &prev).unwrap();
            let e = Emp::new(v).unwrap();
            for q in &prev {
                assert!(e.tensor_inner(q).abs() < 1e-9);
            }
            prev.push(e);
        }
    }

    #[test]
    fn too_many_emps_rejected() {
        let xs = vec![ones(&[2, 1, 1]), ones(&[2, 1, 1]).scaled(2.0)];
        let cfg = MldaConfig {
            num_emps: 3,
            ..MldaConfig::default()
        };
        assert!(matches!(
            solve_mlda(&xs, &[0, 1], &cfg),
            Err(Error::TooManyFilters { .. })
        ));
    }

    #[test]
    fn previous_spanning_everything_is_an_error() {
        let e = |i: usize| {
            let mut v = vec![0.0; 2];
            v[i] = 1.0;
            Emp::new(vec![v, vec![1.0]]).unwrap()
        };
        assert!(matches!(
            initial_vectors(&[2, 1], &[e(0), e(1)]),
            Err(Error::NoRemainingDirections(_))
        ));
    }
}
