//! Matrix-space filter learning: LDA filters over patch matrices (stage 2 and
//! the LDANet baseline) and PCA filters over vectorized patches (PCANet).
//!
//! A labeled "unit" is one `d × n` matrix whose columns are vectorized
//! patches; every unit carries one class label. Class means and scatters
//! follow the stage-2 definitions literally:
//!
//! ```text
//! Γ_c = Σ_{u∈c} R_u / |S_c|            Γ = Σ_u R_u / U
//! S_W = Σ_c Σ_{u∈c} (R_u − Γ_c)(R_u − Γ_c)ᵀ / |S_c|
//! S_B = Σ_c (Γ_c − Γ)(Γ_c − Γ)ᵀ / C
//! ```
//!
//! All reductions run in unit order so results do not depend on thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{fix_sign, generalized_eigen, orthonormalize, sym_eigen_sorted};
use crate::mlda::class_indices;
use crate::tensor::DenseTensor;

const CHUNK: usize = 64;

/// `L ≥ 1` orthonormal filters of a common shape, with the eigenvalue each
/// came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub shape: Vec<usize>,
    pub filters: Vec<DenseTensor>,
    pub eigenvalues: Vec<f64>,
}

impl FilterBank {
    pub fn new(shape: Vec<usize>, filters: Vec<DenseTensor>, eigenvalues: Vec<f64>) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::Empty("filter bank needs at least one filter".into()));
        }
        if filters.iter().any(|f| f.dims() != shape.as_slice()) {
            return Err(Error::dims(format!("filters must all have shape {shape:?}")));
        }
        if eigenvalues.len() != filters.len() {
            return Err(Error::dims("one eigenvalue per filter"));
        }
        Ok(Self {
            shape,
            filters,
            eigenvalues,
        })
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// `d × L` matrix with one flattened filter per column.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        let d = self.filters[0].len();
        DMatrix::from_fn(d, self.filters.len(), |i, j| self.filters[j].data()[i])
    }

    /// `max |wᵀw − I|` entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let w = self.as_matrix();
        let g = w.transpose() * &w - DMatrix::identity(w.ncols(), w.ncols());
        g.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    /// Distinct labels in ascending order.
    pub classes: Vec<usize>,
    pub counts: Vec<usize>,
    pub per_class: Vec<DMatrix<f64>>,
    pub global: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    pub s_b: DMatrix<f64>,
    pub s_w: DMatrix<f64>,
}

impl ScatterPair {
    pub fn dim(&self) -> usize {
        self.s_b.nrows()
    }
}

fn check_units(units: &[(DMatrix<f64>, usize)]) -> Result<(usize, usize)> {
    let first = &units.first().ok_or_else(|| Error::Empty("no patch matrices".into()))?.0;
    let shape = first.shape();
    if units.iter().any(|(m, _)| m.shape() != shape) {
        return Err(Error::dims("patch matrices must share shape"));
    }
    Ok(shape)
}

/// Per-class and global means of labeled patch matrices.
pub fn class_means(units: &[(DMatrix<f64>, usize)]) -> Result<ClassMeans> {
    let (rows, cols) = check_units(units)?;
    let labels: Vec<usize> = units.iter().map(|u| u.1).collect();
    means_from_units(units.len(), &labels, rows, cols, |i| units[i].0.clone())
}

/// Scatter matrices of labeled patch matrices around precomputed means.
pub fn scatter_matrices(units: &[(DMatrix<f64>, usize)], means: &ClassMeans) -> Result<ScatterPair> {
    let (rows, cols) = check_units(units)?;
    if means.global.shape() != (rows, cols) {
        return Err(Error::dims("means do not match patch matrix shape"));
    }
    let labels: Vec<usize> = units.iter().map(|u| u.1).collect();
    scatters_from_units(units.len(), &labels, means, |i| units[i].0.clone())
}

/// Class means computed from units generated on demand by `make`.
pub fn means_from_units<F>(n: usize, labels: &[usize], rows: usize, cols: usize, make: F) -> Result<ClassMeans>
where
    F: Fn(usize) -> DMatrix<f64> + Sync,
{
    if n == 0 || labels.len() != n {
        return Err(Error::dims(format!("{n} units, {} labels", labels.len())));
    }
    let (classes, idx) = class_indices(labels);
    let mut counts = vec![0usize; classes.len()];
    let mut sums = vec![DMatrix::<f64>::zeros(rows, cols); classes.len()];
    let mut total = DMatrix::<f64>::zeros(rows, cols);
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk: Vec<DMatrix<f64>> = (start..end).into_par_iter().map(&make).collect();
        for (i, r) in (start..end).zip(chunk) {
            if r.shape() != (rows, cols) {
                return Err(Error::dims("patch matrices must share shape"));
            }
            counts[idx[i]] += 1;
            sums[idx[i]] += &r;
            total += r;
        }
    }
    let per_class = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(ClassMeans {
        classes,
        counts,
        per_class,
        global: total / n as f64,
    })
}

pub fn scatters_from_units<F>(n: usize, labels: &[usize], means: &ClassMeans, make: F) -> Result<ScatterPair>
where
    F: Fn(usize) -> DMatrix<f64> + Sync,
{
    let rows = means.global.nrows();
    let (classes, idx) = class_indices(labels);
    if classes != means.classes {
        return Err(Error::dims("labels do not match the classes of the means"));
    }
    let mut within = vec![DMatrix::<f64>::zeros(rows, rows); classes.len()];
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk: Vec<DMatrix<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let dev = make(i) - &means.per_class[idx[i]];
                &dev * dev.transpose()
            })
            .collect();
        for (i, outer) in (start..end).zip(chunk) {
            within[idx[i]] += outer;
        }
    }
    let mut s_w = DMatrix::<f64>::zeros(rows, rows);
    for (w, &c) in within.iter().zip(&means.counts) {
        s_w += w / c as f64;
    }
    let mut s_b = DMatrix::<f64>::zeros(rows, rows);
    for gc in &means.per_class {
        let dev = gc - &means.global;
        s_b += &dev * dev.transpose();
    }
    s_b /= classes.len() as f64;
    Ok(ScatterPair { s_b, s_w })
}

/// `Σ_u R_u R_uᵀ` over units generated by `make`.
pub fn second_moment_from_units<F>(n: usize, dim: usize, make: F) -> DMatrix<f64>
where
    F: Fn(usize) -> DMatrix<f64> + Sync,
{
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk: Vec<DMatrix<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let r = make(i);
                &r * r.transpose()
            })
            .collect();
        for m in chunk {
            acc += m;
        }
    }
    acc
}

fn bank_from_vectors(vectors: Vec<(f64, Vec<f64>)>, shape: &[usize]) -> Result<FilterBank> {
    let (eigenvalues, raw): (Vec<f64>, Vec<Vec<f64>>) = vectors.into_iter().unzip();
    let mut basis = orthonormalize(&raw, 1e-12);
    if basis.len() != raw.len() {
        return Err(Error::NoRemainingDirections(
            "filter directions are linearly dependent".into(),
        ));
    }
    for b in &mut basis {
        fix_sign(b);
    }
    let filters = basis
        .into_iter()
        .map(|b| DenseTensor::new(shape.to_vec(), b))
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(shape.to_vec(), filters, eigenvalues)
}

/// Regularizer `eta_scale · trace(S_W) / d`, or `eta_scale` when the trace is 0.
pub fn lda_regularizer(s_w: &DMatrix<f64>, eta_scale: f64) -> f64 {
    let trace = s_w.trace() / s_w.nrows() as f64;
    if trace > 0.0 {
        eta_scale * trace
    } else {
        eta_scale
    }
}

/// Top-`count` discriminant filters from the ratio-trace relaxation of the
/// trace-ratio objective: eigenvectors of the whitened problem
/// `(S_W + ηI)^{-1/2} S_B (S_W + ηI)^{-1/2}`, mapped back, re-orthonormalized
/// in eigenvalue order and reshaped to `shape`.
pub fn solve_lda_filters(
    scatters: &ScatterPair,
    count: usize,
    shape: &[usize],
    eta_scale: f64,
) -> Result<FilterBank> {
    let d = scatters.dim();
    if shape.iter().product::<usize>() != d {
        return Err(Error::dims(format!("filter shape {shape:?} does not have {d} entries")));
    }
    if count == 0 || count > d {
        return Err(Error::TooManyFilters {
            requested: count,
            available: d,
        });
    }
    let eta = lda_regularizer(&scatters.s_w, eta_scale);
    let reg = &scatters.s_w + DMatrix::identity(d, d) * eta;
    let mut pairs = generalized_eigen(&scatters.s_b, &reg);
    pairs.truncate(count);
    bank_from_vectors(pairs, shape)
}

/// Top-`count` principal directions of `Σ r rᵀ` over the given vectors.
pub fn solve_pca_filters(patches: &[Vec<f64>], count: usize, shape: &[usize]) -> Result<FilterBank> {
    let d: usize = shape.iter().product();
    if patches.iter().any(|p| p.len() != d) {
        return Err(Error::dims(format!("patches must have {d} entries")));
    }
    if count == 0 || count > d {
        return Err(Error::TooManyFilters {
            requested: count,
            available: d,
        });
    }
    if patches.len() < count {
        return Err(Error::Empty(format!(
            "{} patches cannot support {count} principal filters",
            patches.len()
        )));
    }
    let n = patches.len();
    let m = second_moment_from_units(n.div_ceil(CHUNK), d, |c| {
        let cols = &patches[c * CHUNK..((c + 1) * CHUNK).min(n)];
        DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i])
    });
    pca_from_second_moment(&m, count, shape)
}

pub fn pca_from_second_moment(m: &DMatrix<f64>, count: usize, shape: &[usize]) -> Result<FilterBank> {
    let d = m.nrows();
    if count == 0 || count > d {
        return Err(Error::TooManyFilters {
            requested: count,
            available: d,
        });
    }
    let mut pairs = sym_eigen_sorted(m);
    pairs.truncate(count);
    bank_from_vectors(pairs, shape)
}
