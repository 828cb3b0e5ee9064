//! Seeded random generators for solver restarts and randomized tests.
//!
//! All generators take the RNG explicitly so every consumer is reproducible
//! from a seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gamma::GammaPoint;
use crate::linalg::{hermitian_part, operator_norm, CMat};

/// Standard complex Gaussian: independent N(0, 1/2) real and imaginary parts.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniform sample of the closed disc of radius `rmax`.
pub fn random_disc<R: Rng + ?Sized>(rng: &mut R, rmax: f64) -> Complex64 {
    let r = rmax * rng.random::<f64>().sqrt();
    let th = std::f64::consts::TAU * rng.random::<f64>();
    Complex64::from_polar(r, th)
}

/// Symmetrization (z + w, zw) of two independent disc samples of radius `rmax`.
pub fn random_gamma_value<R: Rng + ?Sized>(rng: &mut R, rmax: f64) -> GammaPoint {
    GammaPoint::from_pair(random_disc(rng, rmax), random_disc(rng, rmax))
}

/// Distinct nodes in the disc of radius `rmax` with pairwise separation >= `minsep`.
pub fn random_distinct_nodes<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rmax: f64,
    minsep: f64,
) -> Vec<Complex64> {
    let mut nodes: Vec<Complex64> = Vec::with_capacity(n);
    while nodes.len() < n {
        let cand = random_disc(rng, rmax);
        if nodes.iter().all(|&z| (z - cand).norm() >= minsep) {
            nodes.push(cand);
        }
    }
    nodes
}

/// Complex Gaussian matrix with iid standard entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random Hermitian PSD matrix with the given rank (Gaussian factor model).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    if rank == 0 {
        return CMat::zeros(dim, dim);
    }
    let g = random_complex_matrix(rng, dim, rank);
    hermitian_part(&(&g * g.adjoint()))
}

/// Random square matrix rescaled to operator norm `cap`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, dim: usize, cap: f64) -> CMat {
    let g = random_complex_matrix(rng, dim, dim);
    let norm = operator_norm(&g);
    if norm == 0.0 {
        return g;
    }
    g * Complex64::new(cap / norm, 0.0)
}

/// Random contraction of size (2 + m) x (2 + m) whose linear-fractional
/// transfer function has equal diagonal entries at every point.
///
/// Block structure: the top-left 2x2 block has equal diagonal entries, the
/// bottom-right m x m block is complex symmetric, and the bottom-left block
/// is determined by the top-right one through the antidiagonal flip. These
/// constraints are preserved by real scaling, so the rescale to operator
/// norm `cap` keeps the transfer-function symmetry.
pub fn random_shaped_contraction<R: Rng + ?Sized>(rng: &mut R, m: usize, cap: f64) -> CMat {
    let d = 2 + m;
    let mut l = CMat::zeros(d, d);
    let diag = complex_gaussian(rng);
    l[(0, 0)] = diag;
    l[(1, 1)] = diag;
    l[(0, 1)] = complex_gaussian(rng);
    l[(1, 0)] = complex_gaussian(rng);
    let b = random_complex_matrix(rng, 2, m);
    for r in 0..2 {
        for c in 0..m {
            l[(r, 2 + c)] = b[(r, c)];
        }
    }
    // c = b^T J with J the 2x2 antidiagonal flip: c[i][0] = b[1][i], c[i][1] = b[0][i].
    for i in 0..m {
        l[(2 + i, 0)] = b[(1, i)];
        l[(2 + i, 1)] = b[(0, i)];
    }
    for i in 0..m {
        for j in i..m {
            let v = complex_gaussian(rng);
            l[(2 + i, 2 + j)] = v;
            l[(2 + j, 2 + i)] = v;
        }
    }
    let norm = operator_norm(&l);
    if norm == 0.0 {
        return l;
    }
    l * Complex64::new(cap / norm, 0.0)
}
