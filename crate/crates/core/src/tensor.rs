//! Dense order-N tensors and the multilinear / sliding-window primitives the
//! networks are built from.
//!
//! Storage is row-major (last index fastest) everywhere. Mode indices are
//! zero-based: mode 0 is the first spatial axis, mode 1 the second, mode 2 the
//! depth/temporal axis of an order-3 sample.
//!
//! All 2D sliding-window operations use "same" zero padding of `(k - 1) / 2`
//! on each side and cross-correlation orientation (the kernel is not flipped).
//! Because of that, [`conv2d_same`] with kernel `v` equals the dot product of
//! `flatten(v)` with each patch from [`extract_map_patches`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dims("tensor order must be at least 1"));
        }
        if dims.contains(&0) {
            return Err(Error::dims(format!("zero extent in dims {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::dims(format!(
                "dims {dims:?} need {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(
            !dims.is_empty() && dims.iter().all(|&d| d > 0),
            "invalid dims {dims:?}"
        );
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        let mut t = Self::zeros(dims);
        t.data.fill(value);
        t
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for axis in (0..dims.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        t
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Entry `(i, j)` of an order-2 tensor.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.order(), 2);
        self.data[i * self.dims[1] + j]
    }

    pub fn rows(&self) -> usize {
        self.dims[0]
    }

    pub fn cols(&self) -> usize {
        self.dims[1]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn reshaped(&self, dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), self.data.clone())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Splits `dims` around `mode` into (outer, extent, inner) block sizes.
fn split_at_mode(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let outer = dims[..mode].iter().product();
    let inner = dims[mode + 1..].iter().product();
    (outer, dims[mode], inner)
}

/// n-mode product `x ×_n u` for a `J × I_n` matrix `u`.
pub fn mode_product(x: &DenseTensor, u: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
    if mode >= x.order() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: x.order(),
        });
    }
    if u.ncols() != x.dims[mode] {
        return Err(Error::dims(format!(
            "matrix has {} columns, mode {mode} has extent {}",
            u.ncols(),
            x.dims[mode]
        )));
    }
    let (outer, extent, inner) = split_at_mode(&x.dims, mode);
    let rows = u.nrows();
    let mut dims = x.dims.clone();
    dims[mode] = rows;
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        let src = &x.data[o * extent * inner..(o + 1) * extent * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for j in 0..rows {
            let row = &mut dst[j * inner..(j + 1) * inner];
            for k in 0..extent {
                let w = u[(j, k)];
                if w == 0.0 {
                    continue;
                }
                for (r, s) in row.iter_mut().zip(&src[k * inner..(k + 1) * inner]) {
                    *r += w * s;
                }
            }
        }
    }
    DenseTensor::new(dims, out)
}

/// Contracts every mode except `skip` (if any) against the matching vector.
///
/// `vectors[n]` is ignored when `Some(n) == skip`. Returns the surviving fiber
/// (length `dims[skip]`), or a single scalar when nothing is skipped.
pub(crate) fn contract_except(
    dims: &[usize],
    data: &[f64],
    vectors: &[&[f64]],
    skip: Option<usize>,
) -> Vec<f64> {
    // Contract from the last mode backward so each step reduces a contiguous
    // innermost axis (or, past the skipped mode, the axis just outside it).
    let mut cur_dims = dims.to_vec();
    let mut cur = data.to_vec();
    for mode in (0..dims.len()).rev() {
        if Some(mode) == skip {
            continue;
        }
        let u = vectors[mode];
        let (outer, extent, inner) = split_at_mode(&cur_dims, mode);
        let mut next = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut next[o * inner..(o + 1) * inner];
            let src = &cur[o * extent * inner..(o + 1) * extent * inner];
            for (k, &w) in u.iter().enumerate() {
                for (d, s) in dst.iter_mut().zip(&src[k * inner..(k + 1) * inner]) {
                    *d += w * s;
                }
            }
        }
        cur_dims.remove(mode);
        cur = next;
    }
    cur
}

pub(crate) fn check_projection_vectors(
    dims: &[usize],
    vectors: &[&[f64]],
    skip: Option<usize>,
) -> Result<()> {
    if vectors.len() != dims.len() {
        return Err(Error::dims(format!(
            "{} projection vectors for an order-{} tensor",
            vectors.len(),
            dims.len()
        )));
    }
    for (mode, (v, &d)) in vectors.iter().zip(dims).enumerate() {
        if Some(mode) == skip {
            continue;
        }
        if v.len() != d {
            return Err(Error::dims(format!(
                "mode {mode} vector has length {}, extent is {d}",
                v.len()
            )));
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitNorm { mode, norm });
        }
    }
    Ok(())
}

/// Elementary multilinear projection: contracts every mode of `x` with one
/// unit vector, yielding a scalar. Non-unit vectors are rejected.
pub fn emp_project(x: &DenseTensor, vectors: &[&[f64]]) -> Result<f64> {
    check_projection_vectors(&x.dims, vectors, None)?;
    Ok(contract_except(&x.dims, &x.data, vectors, None)[0])
}

/// Odd, at-least-3 window size shared by every sliding-window operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub k1: usize,
    pub k2: usize,
}

impl PatchSpec {
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        let spec = Self { k1, k2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 < 3 || self.k2 < 3 || self.k1.is_multiple_of(2) || self.k2.is_multiple_of(2) {
            return Err(Error::InvalidPatchSpec {
                k1: self.k1,
                k2: self.k2,
            });
        }
        Ok(())
    }

    pub fn pad(&self) -> (usize, usize) {
        ((self.k1 - 1) / 2, (self.k2 - 1) / 2)
    }

    pub fn area(&self) -> usize {
        self.k1 * self.k2
    }
}

/// Tensor patches of one or more order-3 samples, in (sample, grid position)
/// order; grid position `q` enumerates `(i1, i2)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub patches: Vec<DenseTensor>,
    pub source_index: Vec<(usize, usize)>,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn from_samples(samples: &[DenseTensor], spec: PatchSpec) -> Result<Self> {
        let mut set = PatchSet {
            patches: Vec::new(),
            source_index: Vec::new(),
        };
        for (m, x) in samples.iter().enumerate() {
            let one = extract_tensor_patches(x, spec)?;
            set.patches.extend(one.patches);
            set.source_index
                .extend(one.source_index.into_iter().map(|(_, q)| (m, q)));
        }
        Ok(set)
    }
}

/// Copies the `k1 × k2 × I3` window centered at `(i1, i2)` of an order-3
/// tensor into `out`, zero-filling positions outside the tensor.
pub(crate) fn fill_tensor_patch(
    x: &DenseTensor,
    spec: PatchSpec,
    i1: usize,
    i2: usize,
    out: &mut [f64],
) {
    let (rows, cols, depth) = (x.dims[0], x.dims[1], x.dims[2]);
    let (p1, p2) = spec.pad();
    debug_assert_eq!(out.len(), spec.area() * depth);
    out.fill(0.0);
    for a in 0..spec.k1 {
        let r = i1 + a;
        if r < p1 || r - p1 >= rows {
            continue;
        }
        let r = r - p1;
        for b in 0..spec.k2 {
            let c = i2 + b;
            if c < p2 || c - p2 >= cols {
                continue;
            }
            let c = c - p2;
            let src = &x.data[(r * cols + c) * depth..(r * cols + c + 1) * depth];
            out[(a * spec.k2 + b) * depth..(a * spec.k2 + b + 1) * depth].copy_from_slice(src);
        }
    }
}

pub(crate) fn require_order3(x: &DenseTensor) -> Result<()> {
    if x.order() != 3 {
        return Err(Error::dims(format!(
            "expected an order-3 tensor, got dims {:?}",
            x.dims
        )));
    }
    Ok(())
}

pub(crate) fn require_matrix(x: &DenseTensor) -> Result<()> {
    if x.order() != 2 {
        return Err(Error::dims(format!(
            "expected an order-2 map, got dims {:?}",
            x.dims
        )));
    }
    Ok(())
}

/// All `I1·I2` zero-padded `k1 × k2 × I3` patches of an order-3 tensor.
pub fn extract_tensor_patches(x: &DenseTensor, spec: PatchSpec) -> Result<PatchSet> {
    require_order3(x)?;
    spec.validate()?;
    let (rows, cols, depth) = (x.dims[0], x.dims[1], x.dims[2]);
    let patch_dims = [spec.k1, spec.k2, depth];
    let mut patches = Vec::with_capacity(rows * cols);
    let mut source_index = Vec::with_capacity(rows * cols);
    let mut buf = vec![0.0; spec.area() * depth];
    for i1 in 0..rows {
        for i2 in 0..cols {
            fill_tensor_patch(x, spec, i1, i2, &mut buf);
            patches.push(DenseTensor::new(patch_dims.to_vec(), buf.clone())?);
            source_index.push((0, i1 * cols + i2));
        }
    }
    Ok(PatchSet {
        patches,
        source_index,
    })
}

pub(crate) fn fill_map_patch(f: &DenseTensor, spec: PatchSpec, i: usize, j: usize, out: &mut [f64]) {
    let (rows, cols) = (f.dims[0], f.dims[1]);
    let (p1, p2) = spec.pad();
    out.fill(0.0);
    for a in 0..spec.k1 {
        let r = i + a;
        if r < p1 || r - p1 >= rows {
            continue;
        }
        let r = r - p1;
        for b in 0..spec.k2 {
            let c = j + b;
            if c < p2 || c - p2 >= cols {
                continue;
            }
            out[a * spec.k2 + b] = f.data[r * cols + c - p2];
        }
    }
}

/// Vectorized (row-major) zero-padded `k1 × k2` patches around every pixel of
/// a 2D map, in row-major grid order. With `remove_mean`, each patch has its
/// own mean (including padded zeros) subtracted.
pub fn extract_map_patches(
    f: &DenseTensor,
    spec: PatchSpec,
    remove_mean: bool,
) -> Result<Vec<Vec<f64>>> {
    require_matrix(f)?;
    spec.validate()?;
    let (rows, cols) = (f.dims[0], f.dims[1]);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut p = vec![0.0; spec.area()];
            fill_map_patch(f, spec, i, j, &mut p);
            if remove_mean {
                let mean = p.iter().sum::<f64>() / p.len() as f64;
                p.iter_mut().for_each(|v| *v -= mean);
            }
            out.push(p);
        }
    }
    Ok(out)
}

/// Same-size 2D cross-correlation of `f` with an odd-sized kernel `v`, with
/// the boundary of `f` zero-padded.
pub fn conv2d_same(f: &DenseTensor, v: &DenseTensor) -> Result<DenseTensor> {
    require_matrix(f)?;
    require_matrix(v)?;
    let (k1, k2) = (v.dims[0], v.dims[1]);
    if k1 % 2 == 0 || k2 % 2 == 0 {
        return Err(Error::EvenKernel { rows: k1, cols: k2 });
    }
    let (rows, cols) = (f.dims[0], f.dims[1]);
    let (p1, p2) = ((k1 - 1) / 2, (k2 - 1) / 2);
    let mut out = vec![0.0; rows * cols];
    for a in 0..k1 {
        for b in 0..k2 {
            let w = v.data[a * k2 + b];
            if w == 0.0 {
                continue;
            }
            // Output rows i with 0 <= i + a - p1 < rows.
            let i_lo = p1.saturating_sub(a);
            let i_hi = (rows + p1).saturating_sub(a).min(rows);
            let j_lo = p2.saturating_sub(b);
            let j_hi = (cols + p2).saturating_sub(b).min(cols);
            if i_lo >= i_hi || j_lo >= j_hi {
                continue;
            }
            for i in i_lo..i_hi {
                let src_row = (i + a - p1) * cols;
                let dst = &mut out[i * cols + j_lo..i * cols + j_hi];
                let src = &f.data[src_row + j_lo + b - p2..src_row + j_hi + b - p2];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
    DenseTensor::new(vec![rows, cols], out)
}

/// Places grid-ordered scalars back onto an `rows × cols` map.
pub fn reshape_to_map(scalars: &[f64], rows: usize, cols: usize) -> Result<DenseTensor> {
    if scalars.len() != rows * cols {
        return Err(Error::dims(format!(
            "{} scalars cannot fill a {rows}x{cols} map",
            scalars.len()
        )));
    }
    DenseTensor::new(vec![rows, cols], scalars.to_vec())
}
