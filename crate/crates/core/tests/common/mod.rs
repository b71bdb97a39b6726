//! Brute-force reference implementations shared by the integration tests.
//! Everything here is written index-by-index, without reusing library code.
#![allow(dead_code)]

use mldanet::DenseTensor;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = uniform_vec(rng, n);
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 1e-3 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let n = dims.iter().product();
    DenseTensor::new(dims.to_vec(), uniform_vec(rng, n)).unwrap()
}

/// All multi-indices of `dims` in row-major order.
pub fn indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        let mut next = Vec::new();
        for prefix in &out {
            for i in 0..d {
                let mut p = prefix.clone();
                p.push(i);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn mode_product(x: &DenseTensor, u: &DMatrix<f64>, mode: usize) -> DenseTensor {
    let mut dims = x.dims().to_vec();
    dims[mode] = u.nrows();
    let mut out = DenseTensor::zeros(&dims);
    for idx in indices(&dims) {
        let mut s = 0.0;
        for k in 0..x.dims()[mode] {
            let mut src = idx.clone();
            src[mode] = k;
            s += u[(idx[mode], k)] * x.get(&src);
        }
        out.set(&idx, s);
    }
    out
}

pub fn emp(x: &DenseTensor, vectors: &[Vec<f64>]) -> f64 {
    indices(x.dims())
        .iter()
        .map(|idx| x.get(idx) * idx.iter().enumerate().map(|(n, &i)| vectors[n][i]).product::<f64>())
        .sum()
}

/// Same-size cross-correlation with zero padding, straight from the definition.
pub fn conv2d(f: &DenseTensor, v: &DenseTensor) -> DenseTensor {
    let (rows, cols) = (f.dims()[0], f.dims()[1]);
    let (k1, k2) = (v.dims()[0], v.dims()[1]);
    let (p1, p2) = ((k1 as isize - 1) / 2, (k2 as isize - 1) / 2);
    DenseTensor::from_fn(&[rows, cols], |ij| {
        let mut s = 0.0;
        for a in 0..k1 {
            for b in 0..k2 {
                let r = ij[0] as isize + a as isize - p1;
                let c = ij[1] as isize + b as isize - p2;
                if r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols {
                    s += v.at(a, b) * f.at(r as usize, c as usize);
                }
            }
        }
        s
    })
}

/// Zero-padded `k1 × k2 × depth` patch centered at `(i, j)`, row-major.
pub fn tensor_patch(x: &DenseTensor, k1: usize, k2: usize, i: usize, j: usize) -> Vec<f64> {
    let d = x.dims();
    let mut out = Vec::new();
    for a in 0..k1 {
        for b in 0..k2 {
            for t in 0..d[2] {
                let r = i as isize + a as isize - (k1 as isize - 1) / 2;
                let c = j as isize + b as isize - (k2 as isize - 1) / 2;
                let inside = r >= 0 && c >= 0 && (r as usize) < d[0] && (c as usize) < d[1];
                out.push(if inside { x.get(&[r as usize, c as usize, t]) } else { 0.0 });
            }
        }
    }
    out
}

fn classes(labels: &[usize]) -> Vec<usize> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Between/within scatters of vectors (sample-count weighted, unnormalized).
pub fn mode_scatters(ys: &[Vec<f64>], labels: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = ys[0].len();
    let m = ys.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| ys.iter().map(|y| y[i]).sum::<f64>() / m).collect();
    let mut s_b = DMatrix::<f64>::zeros(d, d);
    let mut s_w = DMatrix::<f64>::zeros(d, d);
    for c in classes(labels) {
        let members: Vec<&Vec<f64>> = ys.iter().zip(labels).filter(|(_, &l)| l == c).map(|(y, _)| y).collect();
        let n = members.len() as f64;
        let mc: Vec<f64> = (0..d).map(|i| members.iter().map(|y| y[i]).sum::<f64>() / n).collect();
        for i in 0..d {
            for j in 0..d {
                s_b[(i, j)] += n * (mc[i] - mean[i]) * (mc[j] - mean[j]);
                for y in &members {
                    s_w[(i, j)] += (y[i] - mc[i]) * (y[j] - mc[j]);
                }
            }
        }
    }
    (s_b, s_w)
}

/// Class-size-normalized scatters of labeled patch matrices `R` (d × n).
pub fn patch_scatters(units: &[(DMatrix<f64>, usize)]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (d, n) = units[0].0.shape();
    let labels: Vec<usize> = units.iter().map(|u| u.1).collect();
    let cls = classes(&labels);
    let mut global = DMatrix::<f64>::zeros(d, n);
    for (r, _) in units {
        for i in 0..d {
            for j in 0..n {
                global[(i, j)] += r[(i, j)] / units.len() as f64;
            }
        }
    }
    let mut s_b = DMatrix::<f64>::zeros(d, d);
    let mut s_w = DMatrix::<f64>::zeros(d, d);
    for &c in &cls {
        let members: Vec<&DMatrix<f64>> = units.iter().filter(|u| u.1 == c).map(|u| &u.0).collect();
        let size = members.len() as f64;
        let mut mean = DMatrix::<f64>::zeros(d, n);
        for r in &members {
            for i in 0..d {
                for j in 0..n {
                    mean[(i, j)] += r[(i, j)] / size;
                }
            }
        }
        for i in 0..d {
            for k in 0..d {
                let mut b = 0.0f64;
                for j in 0..n {
                    b += (mean[(i, j)] - global[(i, j)]) * (mean[(k, j)] - global[(k, j)]);
                }
                s_b[(i, k)] += b / cls.len() as f64;
                let mut w = 0.0f64;
                for r in &members {
                    for j in 0..n {
                        w += (r[(i, j)] - mean[(i, j)]) * (r[(k, j)] - mean[(k, j)]);
                    }
                }
                s_w[(i, k)] += w / size;
            }
        }
    }
    (s_b, s_w)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenpairs are
/// returned in descending eigenvalue order.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (a[(i, i)], v.column(i).iter().copied().collect())).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
        m.swap_rows(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (x[r] - s) / m[(r, r)];
    }
    x
}

pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Every file under `dir` as (relative path, bytes), sorted by path.
pub fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
