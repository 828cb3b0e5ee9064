//! Dense complex linear algebra helpers shared across the solver.
//!
//! Everything here operates on dynamically sized `nalgebra` matrices over
//! `Complex64`. Matrices are small (at most a few dozen rows), so all
//! routines favour robustness over asymptotic speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Symmetrize a numerically-Hermitian matrix: (A + A*)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let dim = a.nrows();
    if dim == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let se = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix (+inf for the empty matrix).
pub fn min_eig_hermitian(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let (vals, _) = hermitian_eigen(a);
    vals[0]
}

/// Largest absolute eigenvalue of a Hermitian matrix (0 for the empty matrix).
pub fn spectral_scale_hermitian(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = hermitian_eigen(a);
    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Projection of a Hermitian matrix onto the PSD cone (negative eigenvalues clipped).
pub fn psd_clip(a: &CMat) -> CMat {
    let dim = a.nrows();
    if dim == 0 {
        return a.clone();
    }
    let (vals, vecs) = hermitian_eigen(a);
    let mut out = CMat::zeros(dim, dim);
    for (k, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let u = vecs.column(k);
            out += u * u.adjoint() * Complex64::new(v, 0.0);
        }
    }
    hermitian_part(&out)
}

/// Operator (spectral) norm via singular values.
pub fn operator_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |m, s| m.max(*s))
}

/// Minimum-norm least-squares solution of A x = b via SVD with relative cutoff.
pub fn solve_least_squares(a: &CMat, b: &CVec, rel_cutoff: f64) -> CVec {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let cut = rel_cutoff * smax;
    let mut y = CVec::zeros(svd.singular_values.len());
    let uhb = u.adjoint() * b;
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > cut && s > 0.0 {
            y[i] = uhb[i] / Complex64::new(s, 0.0);
        }
    }
    vt.adjoint() * y
}

/// Orthonormal basis of the orthogonal complement of the column span of `u`.
///
/// `u` must have (numerically) orthonormal columns; the result has
/// `u.nrows() - u.ncols()` columns.
pub fn complement_basis(u: &CMat) -> CMat {
    let d = u.nrows();
    let r = u.ncols();
    if r >= d {
        return CMat::zeros(d, 0);
    }
    // Deterministic Gram-Schmidt sweep over the standard basis.
    let mut cols: Vec<CVec> = Vec::with_capacity(d - r);
    for i in 0..d {
        let mut v = CVec::zeros(d);
        v[i] = Complex64::new(1.0, 0.0);
        for c in 0..r {
            let q = u.column(c);
            let coef = q.adjoint() * &v;
            v -= q * coef[(0, 0)];
        }
        for q in &cols {
            let coef = q.adjoint() * &v;
            v -= q * coef[(0, 0)];
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / Complex64::new(norm, 0.0));
            if cols.len() == d - r {
                break;
            }
        }
    }
    let mut out = CMat::zeros(d, cols.len());
    for (k, v) in cols.iter().enumerate() {
        out.set_column(k, v);
    }
    out
}

/// Frobenius-normalized distance used by approximate matrix comparisons.
pub fn rel_frob_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}
