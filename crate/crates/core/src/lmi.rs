//! Construction of the 3n-dimensional LMI data and its equivalent forms.
//!
//! Each node j contributes three rows, one per grid point; row (j, k) maps
//! to index 3j + k. The matrix X collects the pairings of fractional-map
//! values, and feasibility of a witness pair (N, M) means
//! X - (N - Z*NZ) - (M - L*ML) is positive semidefinite, where Z and L are
//! the diagonal matrices of grid points and nodes.

use num_complex::Complex64;
use thiserror::Error;

use crate::gamma::{magic_phi, GammaError, GammaPoint};
use crate::linalg::{hermitian_part, min_eig_hermitian, spectral_scale_hermitian, CMat};
use crate::problem::{GammaProblem, ZGrid};

/// LMI data built from a problem and an admissible evaluation grid.
#[derive(Clone, Debug)]
pub struct LmiSystem {
    /// Hermitian 3n x 3n matrix of fractional-map pairings.
    pub x: CMat,
    /// Node of each row: lambda_diag[3j + k] = nodes[j].
    pub lambda_diag: Vec<Complex64>,
    /// Grid point of each row: z_diag[3j + k] = grid[k].
    pub z_diag: Vec<Complex64>,
    /// The (s, p) value attached to each node.
    pub values: Vec<GammaPoint>,
    /// Interpolation nodes.
    pub nodes: Vec<Complex64>,
    /// The evaluation grid.
    pub grid: ZGrid,
}

/// A candidate certificate: PSD pair (N, M), optionally with the rank-1
/// factor row vector gamma such that N = gamma* gamma.
#[derive(Clone, Debug)]
pub struct WitnessPair {
    pub n_mat: CMat,
    pub m_mat: CMat,
    pub gamma: Option<Vec<Complex64>>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LmiError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entry bound undefined: |s_{index}| = {s_mod} is not below 2")]
    BoundUndefined { index: usize, s_mod: f64 },
    #[error("P block deviates from the canonical rank-1 relation by {deviation:.3e}")]
    InconsistentSchur { deviation: f64 },
    #[error("witness file schema: {message}")]
    Schema { message: String },
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// Rank-1 PSD matrix gamma* gamma from a row vector.
pub fn rank1_from_gamma(gamma: &[Complex64]) -> CMat {
    let d = gamma.len();
    CMat::from_fn(d, d, |r, c| gamma[r].conj() * gamma[c])
}

impl WitnessPair {
    pub fn new(n_mat: CMat, m_mat: CMat) -> Self {
        WitnessPair { n_mat, m_mat, gamma: None }
    }

    /// Witness with N assembled from its rank-1 factor.
    pub fn from_gamma(gamma: Vec<Complex64>, m_mat: CMat) -> Self {
        WitnessPair { n_mat: rank1_from_gamma(&gamma), m_mat, gamma: Some(gamma) }
    }

    pub fn dim(&self) -> usize {
        self.n_mat.nrows()
    }

    /// JSON certificate: row-major [re, im] arrays for N, M, optional gamma.
    pub fn to_json_string(&self) -> String {
        let dim = self.dim();
        let flat = |m: &CMat| -> Vec<[f64; 2]> {
            (0..dim * dim)
                .map(|idx| {
                    let v = m[(idx / dim, idx % dim)];
                    [v.re, v.im]
                })
                .collect()
        };
        let json = schema::WitnessJson {
            dim,
            n: flat(&self.n_mat),
            m: flat(&self.m_mat),
            gamma: self
                .gamma
                .as_ref()
                .map(|g| g.iter().map(|v| [v.re, v.im]).collect()),
        };
        serde_json::to_string_pretty(&json).expect("witness serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Self, LmiError> {
        let parsed: schema::WitnessJson = serde_json::from_str(text)
            .map_err(|e| LmiError::Schema { message: e.to_string() })?;
        let dim = parsed.dim;
        if parsed.n.len() != dim * dim || parsed.m.len() != dim * dim {
            return Err(LmiError::DimensionMismatch { expected: dim * dim, got: parsed.n.len() });
        }
        let unflat = |flat: &[[f64; 2]]| {
            CMat::from_fn(dim, dim, |r, c| {
                let v = flat[r * dim + c];
                Complex64::new(v[0], v[1])
            })
        };
        let gamma = match parsed.gamma {
            None => None,
            Some(g) => {
                if g.len() != dim {
                    return Err(LmiError::DimensionMismatch { expected: dim, got: g.len() });
                }
                Some(g.iter().map(|v| Complex64::new(v[0], v[1])).collect())
            }
        };
        Ok(WitnessPair { n_mat: unflat(&parsed.n), m_mat: unflat(&parsed.m), gamma })
    }
}

mod schema {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    pub(super) struct WitnessJson {
        pub dim: usize,
        pub n: Vec<[f64; 2]>,
        pub m: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub gamma: Option<Vec<[f64; 2]>>,
    }
}

/// Scale-aware PSD test: min eigenvalue >= -tol_scale * (1 + spectral scale).
pub fn is_psd_within(a: &CMat, tol: f64) -> bool {
    min_eig_hermitian(a) >= -tol * (1.0 + spectral_scale_hermitian(a))
}

/// Build the LMI data for a problem on an admissible grid.
pub fn build_lmi(gp: &GammaProblem, grid: &ZGrid) -> Result<LmiSystem, LmiError> {
    let n = gp.len();
    let dim = 3 * n;
    let mut phi = Vec::with_capacity(dim);
    let mut lambda_diag = Vec::with_capacity(dim);
    let mut z_diag = Vec::with_capacity(dim);
    for j in 0..n {
        for k in 0..3 {
            phi.push(magic_phi(grid.0[k], gp.values[j])?);
            lambda_diag.push(gp.nodes[j]);
            z_diag.push(grid.0[k]);
        }
    }
    let x = CMat::from_fn(dim, dim, |r, c| {
        Complex64::new(1.0, 0.0) - phi[r].conj() * phi[c]
    });
    Ok(LmiSystem {
        x: hermitian_part(&x),
        lambda_diag,
        z_diag,
        values: gp.values.clone(),
        nodes: gp.nodes.clone(),
        grid: *grid,
    })
}

impl LmiSystem {
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Row of the (node, grid-point) pair.
    pub fn row_index(&self, j: usize, k: usize) -> usize {
        3 * j + k
    }

    /// (node, grid-point) pair of a row.
    pub fn node_grid(&self, r: usize) -> (usize, usize) {
        (r / 3, r % 3)
    }

    /// Fractional-map value attached to row r.
    pub fn phi_at(&self, r: usize) -> Complex64 {
        let (j, k) = self.node_grid(r);
        magic_phi(self.grid.0[k], self.values[j]).expect("grid admissible at build time")
    }

    /// The congruence coefficients: (1 - conj(z_r) z_c) and (1 - conj(l_r) l_c).
    ///
    /// These are exactly the entrywise factors in N - Z*NZ and M - L*ML, so
    /// the feasibility residual is X minus the two Hadamard products.
    pub fn kernel_coeffs(&self) -> (CMat, CMat) {
        let dim = self.dim();
        let one = Complex64::new(1.0, 0.0);
        let hz = CMat::from_fn(dim, dim, |r, c| one - self.z_diag[r].conj() * self.z_diag[c]);
        let hl = CMat::from_fn(dim, dim, |r, c| one - self.lambda_diag[r].conj() * self.lambda_diag[c]);
        (hz, hl)
    }

    fn check_dim(&self, got: usize) -> Result<(), LmiError> {
        if got != self.dim() {
            return Err(LmiError::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    /// Feasibility residual X - (N - Z*NZ) - (M - L*ML); PSD iff feasible.
    pub fn residual(&self, w: &WitnessPair) -> Result<CMat, LmiError> {
        self.check_dim(w.n_mat.nrows())?;
        self.check_dim(w.m_mat.nrows())?;
        let dim = self.dim();
        let res = CMat::from_fn(dim, dim, |r, c| {
            let one = Complex64::new(1.0, 0.0);
            let hz = one - self.z_diag[r].conj() * self.z_diag[c];
            let hl = one - self.lambda_diag[r].conj() * self.lambda_diag[c];
            self.x[(r, c)] - hz * w.n_mat[(r, c)] - hl * w.m_mat[(r, c)]
        });
        Ok(hermitian_part(&res))
    }

    /// Entrywise caps on |N| and |M| satisfied by every certificate coming
    /// from an actual interpolant (so the rank-1 search can stay compact).
    ///
    /// Caps: |N_rc| <= 1/((1 - |s_i|/2)(1 - |s_j|/2)) and
    /// |M_rc| <= 2 sqrt(1 + 1/(1 - |s_i|/2)^2) sqrt(1 + 1/(1 - |s_j|/2)^2)
    ///           / |1 - conj(l_i) l_j|, for row (i, l), column (j, k).
    pub fn entry_bounds(&self) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>), LmiError> {
        for (index, v) in self.values.iter().enumerate() {
            if v.s.norm() >= 2.0 {
                return Err(LmiError::BoundUndefined { index, s_mod: v.s.norm() });
            }
        }
        let dim = self.dim();
        let half_def = |r: usize| 1.0 - 0.5 * self.values[r / 3].s.norm();
        let eta_sq = |r: usize| 1.0 + 1.0 / (half_def(r) * half_def(r));
        let ncap = nalgebra::DMatrix::from_fn(dim, dim, |r, c| 1.0 / (half_def(r) * half_def(c)));
        let mcap = nalgebra::DMatrix::from_fn(dim, dim, |r, c| {
            let sep = (Complex64::new(1.0, 0.0)
                - self.lambda_diag[r].conj() * self.lambda_diag[c])
            .norm();
            2.0 * eta_sq(r).sqrt() * eta_sq(c).sqrt() / sep
        });
        Ok((ncap, mcap))
    }

    /// The canonical 3n x 2 block [gamma*, -Z* gamma*] appearing in the
    /// Schur-complement form of the criterion.
    pub fn canonical_p(&self, gamma: &[Complex64]) -> Result<CMat, LmiError> {
        self.check_dim(gamma.len())?;
        let dim = self.dim();
        Ok(CMat::from_fn(dim, 2, |r, c| {
            if c == 0 {
                gamma[r].conj()
            } else {
                -(self.z_diag[r].conj() * gamma[r].conj())
            }
        }))
    }

    /// Both sides of the bordered (3n+2)-dimensional form of the criterion:
    /// LHS = diag(-1, 1, X) and RHS = E W E* for the bordered witness matrix
    /// W = [[-1, 0, gamma], [0, 1, gamma Z], [gamma*, Z* gamma*, M - L*ML]]
    /// and the elimination matrix E = [[I2, 0], [P, I]].
    pub fn to_schur_form(
        &self,
        gamma: &[Complex64],
        m_mat: &CMat,
        p: &CMat,
    ) -> Result<(CMat, CMat), LmiError> {
        self.check_dim(gamma.len())?;
        self.check_dim(m_mat.nrows())?;
        if p.nrows() != self.dim() || p.ncols() != 2 {
            return Err(LmiError::DimensionMismatch { expected: self.dim() * 2, got: p.nrows() * p.ncols() });
        }
        let dim = self.dim();
        let total = dim + 2;
        let mut lhs = CMat::zeros(total, total);
        lhs[(0, 0)] = Complex64::new(-1.0, 0.0);
        lhs[(1, 1)] = Complex64::new(1.0, 0.0);
        lhs.view_mut((2, 2), (dim, dim)).copy_from(&self.x);

        // Bordered witness W = [[A, B], [B*, D]] with A = diag(-1, 1),
        // B = [gamma; gamma Z], D = M - L*ML.
        let mut w = CMat::zeros(total, total);
        w[(0, 0)] = Complex64::new(-1.0, 0.0);
        w[(1, 1)] = Complex64::new(1.0, 0.0);
        for c in 0..dim {
            w[(0, 2 + c)] = gamma[c];
            w[(1, 2 + c)] = gamma[c] * self.z_diag[c];
            w[(2 + c, 0)] = w[(0, 2 + c)].conj();
            w[(2 + c, 1)] = w[(1, 2 + c)].conj();
        }
        for r in 0..dim {
            for c in 0..dim {
                let hl = self.lambda_diag[r].conj() * self.lambda_diag[c];
                w[(2 + r, 2 + c)] = m_mat[(r, c)] * (Complex64::new(1.0, 0.0) - hl);
            }
        }
        let mut e = CMat::identity(total, total);
        e.view_mut((2, 0), (dim, 2)).copy_from(p);
        let rhs = &e * w * e.adjoint();
        Ok((lhs, hermitian_part(&rhs)))
    }

    /// Recover the flat-form witness from the bordered form, checking that P
    /// matches the canonical rank-1 relation.
    pub fn from_schur_form(
        &self,
        m_mat: &CMat,
        gamma: &[Complex64],
        p: &CMat,
    ) -> Result<WitnessPair, LmiError> {
        let canonical = self.canonical_p(gamma)?;
        self.check_dim(m_mat.nrows())?;
        let gnorm: f64 = gamma.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let deviation = (p - &canonical).norm();
        if deviation > 1e-8 * (1.0 + gnorm) {
            return Err(LmiError::InconsistentSchur { deviation });
        }
        Ok(WitnessPair::from_gamma(gamma.to_vec(), m_mat.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::GammaPoint;
    use crate::problem::default_zgrid;
    use crate::sampling;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_point_problem(cc: f64) -> GammaProblem {
        let s = (3.0f64.sqrt() - 2.0) * cc;
        GammaProblem::new(
            vec![c(0.0, 0.0), c(0.5, 0.0)],
            vec![
                GammaPoint::new(c(s, 0.0), c(0.0, 0.0)),
                GammaPoint::new(c(-s, 0.0), c(0.0, 0.0)),
            ],
        )
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize) -> LmiSystem {
        let gp = GammaProblem::new(
            sampling::random_distinct_nodes(rng, n, 0.9, 0.05),
            (0..n).map(|_| sampling::random_gamma_value(rng, 0.9)).collect(),
        );
        let grid = default_zgrid(&gp).unwrap();
        build_lmi(&gp, &grid).unwrap()
    }

    #[test]
    fn single_origin_value_gives_all_ones() {
        let gp = GammaProblem::new(vec![c(0.3, 0.1)], vec![GammaPoint::new(c(0.0, 0.0), c(0.0, 0.0))]);
        let grid = default_zgrid(&gp).unwrap();
        let l = build_lmi(&gp, &grid).unwrap();
        assert_eq!(l.dim(), 3);
        for r in 0..3 {
            for cc in 0..3 {
                assert!((l.x[(r, cc)] - c(1.0, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_grid_rows_depend_only_on_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let l = random_system(&mut rng, 2);
        // Grid index 1 is the origin, so row (j,1) pairs as 1 - conj(s_i) s_j / 4.
        for i in 0..2 {
            for j in 0..2 {
                let r = l.row_index(i, 1);
                let cc = l.row_index(j, 1);
                let want = c(1.0, 0.0) - l.values[i].s.conj() * l.values[j].s * 0.25;
                assert!((l.x[(r, cc)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_point_x_matrix_matches_independent_evaluation() {
        // Entrywise evaluation of the defining formula for c = 1, frozen
        // from a standalone script.
        #[rustfmt::skip]
        const EXPECTED: [[f64; 6]; 6] = [
            [0.97606774342516966, 0.97927405783630983, 0.98172274561276829, 1.0182772543872318, 1.0207259421636903, 1.0239322565748303],
            [0.97927405783630983, 0.9820508075688773, 0.98417143338922675, 1.0158285666107734, 1.0179491924311228, 1.0207259421636903],
            [0.98172274561276829, 0.98417143338922675, 0.98604151568862453, 1.0139584843113756, 1.0158285666107734, 1.0182772543872318],
            [1.0182772543872318, 1.0158285666107734, 1.0139584843113756, 0.98604151568862453, 0.98417143338922675, 0.98172274561276829],
            [1.0207259421636903, 1.0179491924311228, 1.0158285666107734, 0.98417143338922675, 0.9820508075688773, 0.97927405783630983],
            [1.0239322565748303, 1.0207259421636903, 1.0182772543872318, 0.98172274561276829, 0.97927405783630983, 0.97606774342516966],
        ];
        let gp = two_point_problem(1.0);
        let grid = default_zgrid(&gp).unwrap();
        assert_eq!(grid.0, [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let l = build_lmi(&gp, &grid).unwrap();
        for r in 0..6 {
            for cc in 0..6 {
                assert_abs_diff_eq!(l.x[(r, cc)].re, EXPECTED[r][cc], epsilon = 1e-15);
                assert_abs_diff_eq!(l.x[(r, cc)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn x_is_hermitian_with_nonnegative_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for n in 1..4 {
            let l = random_system(&mut rng, n);
            assert!((l.x.clone() - l.x.adjoint()).norm() < 1e-12);
            for r in 0..l.dim() {
                assert!(l.x[(r, r)].re >= -1e-12);
            }
        }
    }

    #[test]
    fn residual_of_zero_witness_is_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let l = random_system(&mut rng, 2);
        let w = WitnessPair::new(CMat::zeros(6, 6), CMat::zeros(6, 6));
        let res = l.residual(&w).unwrap();
        assert!((res - &l.x).norm() < 1e-14);
    }

    #[test]
    fn residual_matches_matrix_congruence_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let l = random_system(&mut rng, 2);
            let dim = l.dim();
            let w = WitnessPair::new(
                sampling::random_psd(&mut rng, dim, 2),
                sampling::random_psd(&mut rng, dim, 3),
            );
            let fast = l.residual(&w).unwrap();
            let z = CMat::from_diagonal(&crate::linalg::CVec::from_vec(l.z_diag.clone()));
            let la = CMat::from_diagonal(&crate::linalg::CVec::from_vec(l.lambda_diag.clone()));
            let slow = &l.x - (&w.n_mat - z.adjoint() * &w.n_mat * &z)
                - (&w.m_mat - la.adjoint() * &w.m_mat * &la);
            assert!((fast - slow).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_is_affine_in_the_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let l = random_system(&mut rng, 2);
        let dim = l.dim();
        let w1 = WitnessPair::new(sampling::random_psd(&mut rng, dim, 2), sampling::random_psd(&mut rng, dim, 2));
        let w2 = WitnessPair::new(sampling::random_psd(&mut rng, dim, 1), sampling::random_psd(&mut rng, dim, 3));
        let sum = WitnessPair::new(&w1.n_mat + &w2.n_mat, &w1.m_mat + &w2.m_mat);
        let lhs = l.residual(&sum).unwrap();
        let rhs = l.residual(&w1).unwrap() + l.residual(&w2).unwrap() - &l.x;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn residual_rejects_wrong_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let l = random_system(&mut rng, 2);
        let w = WitnessPair::new(CMat::zeros(3, 3), CMat::zeros(3, 3));
        assert!(matches!(l.residual(&w), Err(LmiError::DimensionMismatch { .. })));
    }

    #[test]
    fn entry_bounds_examples() {
        // All targets at the plane origin: N caps are exactly 1.
        let gp = GammaProblem::new(
            vec![c(0.0, 0.0), c(0.5, 0.0)],
            vec![
                GammaPoint::new(c(0.0, 0.0), c(0.0, 0.0)),
                GammaPoint::new(c(0.0, 0.0), c(0.1, 0.0)),
            ],
        );
        let grid = default_zgrid(&gp).unwrap();
        let l = build_lmi(&gp, &grid).unwrap();
        let (ncap, mcap) = l.entry_bounds().unwrap();
        for r in 0..6 {
            for cc in 0..6 {
                assert_abs_diff_eq!(ncap[(r, cc)], 1.0, epsilon = 1e-15);
                let sep = (c(1.0, 0.0) - l.lambda_diag[r].conj() * l.lambda_diag[cc]).norm();
                assert_abs_diff_eq!(mcap[(r, cc)], 4.0 / sep, epsilon = 1e-12);
            }
        }

        // Two-point data at c = 1: caps frozen from the standalone script.
        let l = build_lmi(&two_point_problem(1.0), &ZGrid([c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        let (ncap, mcap) = l.entry_bounds().unwrap();
        for r in 0..6 {
            for cc in 0..6 {
                assert_abs_diff_eq!(ncap[(r, cc)], 1.3333333333333335, epsilon = 1e-15);
                let want = if r >= 3 && cc >= 3 { 6.2222222222222232 } else { 4.666666666666667 };
                assert_abs_diff_eq!(mcap[(r, cc)], want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn entry_bounds_degenerate_when_s_touches_two() {
        let gp = GammaProblem::new(
            vec![c(0.0, 0.0)],
            vec![GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0))],
        );
        let grid = default_zgrid(&gp).unwrap();
        let l = build_lmi(&gp, &grid).unwrap();
        assert!(matches!(
            l.entry_bounds(),
            Err(LmiError::BoundUndefined { index: 0, .. })
        ));
    }

    #[test]
    fn schur_form_collapses_for_the_canonical_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let l = random_system(&mut rng, 2);
            let dim = l.dim();
            let gamma: Vec<Complex64> = (0..dim).map(|_| sampling::complex_gaussian(&mut rng)).collect();
            let m_mat = sampling::random_psd(&mut rng, dim, 3);
            let p = l.canonical_p(&gamma).unwrap();
            let (lhs, rhs) = l.to_schur_form(&gamma, &m_mat, &p).unwrap();
            // Difference must be exactly the flat residual, bordered by zeros.
            let w = WitnessPair::from_gamma(gamma.clone(), m_mat.clone());
            let res = l.residual(&w).unwrap();
            let diff = &lhs - &rhs;
            assert!(diff.view((0, 0), (2, dim + 2)).norm() < 1e-12);
            assert!(diff.view((0, 0), (dim + 2, 2)).norm() < 1e-12);
            assert!((diff.view((2, 2), (dim, dim)) - &res).norm() < 1e-10);
        }
    }

    #[test]
    fn schur_form_trivial_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let l = random_system(&mut rng, 1);
        let gamma = vec![c(0.0, 0.0); 3];
        let (lhs, rhs) = l
            .to_schur_form(&gamma, &CMat::zeros(3, 3), &CMat::zeros(3, 2))
            .unwrap();
        assert!((lhs.view((2, 2), (3, 3)) - &l.x).norm() < 1e-15);
        let mut want = CMat::zeros(5, 5);
        want[(0, 0)] = c(-1.0, 0.0);
        want[(1, 1)] = c(1.0, 0.0);
        assert!((rhs - want).norm() < 1e-15);
    }

    #[test]
    fn schur_round_trip_preserves_the_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..10 {
            let l = random_system(&mut rng, 2);
            let dim = l.dim();
            let gamma: Vec<Complex64> = (0..dim).map(|_| sampling::complex_gaussian(&mut rng)).collect();
            let m_mat = sampling::random_psd(&mut rng, dim, 2);
            let p = l.canonical_p(&gamma).unwrap();
            let w = l.from_schur_form(&m_mat, &gamma, &p).unwrap();
            assert!((w.n_mat - rank1_from_gamma(&gamma)).norm() < 1e-10);
            assert!((w.m_mat - &m_mat).norm() < 1e-12);

            // A corrupted P is rejected.
            let mut bad = p.clone();
            bad[(0, 0)] += c(1e-3, 0.0);
            assert!(matches!(
                l.from_schur_form(&m_mat, &gamma, &bad),
                Err(LmiError::InconsistentSchur { .. })
            ));
        }
    }

    #[test]
    fn witness_json_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let gamma: Vec<Complex64> = (0..6).map(|_| sampling::complex_gaussian(&mut rng)).collect();
        let w = WitnessPair::from_gamma(gamma, sampling::random_psd(&mut rng, 6, 2));
        let text = w.to_json_string();
        let back = WitnessPair::from_json_str(&text).unwrap();
        assert!((w.n_mat - back.n_mat).norm() < 1e-15);
        assert!((w.m_mat - back.m_mat).norm() < 1e-15);
        let (g1, g2) = (w.gamma.unwrap(), back.gamma.unwrap());
        assert_eq!(g1.len(), g2.len());
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn psd_test_is_scale_aware() {
        let a = CMat::from_fn(2, 2, |r, cc| if r == cc { c(1e6, 0.0) } else { c(0.0, 0.0) });
        let mut b = a.clone();
        b[(1, 1)] = c(-1e-4, 0.0);
        assert!(is_psd_within(&a, 1e-8));
        assert!(is_psd_within(&b, 1e-8));
        let mut worse = a.clone();
        worse[(1, 1)] = c(-1.0, 0.0);
        assert!(!is_psd_within(&worse, 1e-8));
    }
}
