//! Small dense symmetric eigen-solves shared by the filter learners.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Flips `v` so its largest-magnitude component is positive (first index wins ties).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue with ties
/// kept in solver order, each eigenvector sign-fixed.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `B^{-1/2}` for a symmetric positive definite `B`.
pub fn inv_sqrt_spd(b: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(b));
    let floor = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs())) * 1e-15;
    let scale = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&d| 1.0 / d.max(floor).max(f64::MIN_POSITIVE).sqrt()),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&scale) * v.transpose()
}

/// Generalized eigenpairs of `a w = λ b w` for symmetric `a` and SPD `b`,
/// via the whitened problem `b^{-1/2} a b^{-1/2}`. Returned vectors are in the
/// original coordinates (not normalized), sorted by descending eigenvalue.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let p = inv_sqrt_spd(b);
    let whitened = &p * a * &p;
    sym_eigen_sorted(&whitened)
        .into_iter()
        .map(|(lambda, z)| {
            let w = &p * DVector::from_vec(z);
            (lambda, w.iter().copied().collect())
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Modified Gram–Schmidt over `vectors` in order; vectors whose residual is
/// below `rel_tol` of their original norm are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let original = norm(v);
        if original == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for b in &basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        // Second pass for numerical orthogonality.
        for b in &basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        if norm(&r) > rel_tol * original {
            normalize(&mut r);
            basis.push(r);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `span(constraints)` in R^dim.
pub fn complement_basis(constraints: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let span = orthonormalize(constraints, 1e-10);
    if span.is_empty() {
        return (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    if span.len() >= dim {
        return Vec::new();
    }
    let mut proj = DMatrix::<f64>::identity(dim, dim);
    for s in &span {
        let s = DVector::from_column_slice(s);
        proj -= &s * s.transpose();
    }
    sym_eigen_sorted(&proj)
        .into_iter()
        .take(dim - span.len())
        .map(|(_, v)| v)
        .collect()
}
