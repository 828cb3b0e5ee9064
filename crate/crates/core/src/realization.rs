//! Interpolant synthesis from a certified witness, and its converse.
//!
//! The forward direction factors the rank-1 block of a witness into a
//! scalar family and the PSD block into a Gram family, matches the two
//! induced vector families by a contraction L on C^2 (+) C^m, and reads
//! the interpolant off the linear-fractional transfer function of L. The
//! converse recovers the canonical witness pair from any interpolant whose
//! 2x2 realization has equal diagonal entries. The companion lift turns a
//! scalar-pair interpolant back into a 2x2 matrix interpolant through
//! pointwise similarity to companion form.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::feasibility::normalize_phase;
use crate::gamma::{in_bgamma, magic_phi, trdet, GammaError, GammaPoint, Matrix2};
use crate::linalg::{
    complement_basis, hermitian_eigen, hermitian_part, min_eig_hermitian, operator_norm,
    spectral_scale_hermitian, CMat,
};
use crate::lmi::WitnessPair;
use crate::problem::{GammaProblem, SpectralProblem, ZGrid};
use crate::sampling::random_complex_matrix;

/// Relative singular-value cutoff for the span of the source family.
pub const SPAN_CUTOFF: f64 = 1e-10;

/// Relative gap below which the two Gramians count as equal and the
/// matching map is completed to a unitary instead of extended by zero.
pub const GRAM_EQ_TOL: f64 = 1e-8;

/// Relative slack allowed on the Gramian-domination check.
pub const DOMINATION_TOL: f64 = 1e-6;

/// Equal-diagonal shape tolerance for witness recovery.
pub const SHAPE_TOL: f64 = 1e-8;

/// Agreement required between an evaluator and the prescribed node values.
pub const VALUE_TOL: f64 = 1e-6;

/// Floor on |det P| over the disc grid in the companion lift.
pub const DET_FLOOR: f64 = 1e-6;

/// Cyclic-vector independence threshold in the companion lift.
pub const CYCLIC_TOL: f64 = 1e-8;

const SINGULARITY_GRID: usize = 720;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RealizationError {
    #[error("rank-1 factorization: second eigenvalue {second:.3e} exceeds tolerance")]
    RankExceedsOne { second: f64 },
    #[error("PSD factorization: eigenvalue {value:.3e} is negative beyond tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("witness invalid: source Gramian fails to dominate the target Gramian (min eigenvalue {min_eig:.3e})")]
    GramianDomination { min_eig: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("resolvent I - D lambda is numerically singular (sigma_min = {sigma_min:.3e})")]
    NearSingularResolvent { sigma_min: f64 },
    #[error("similarity polynomial is numerically singular at the requested point (|det| = {magnitude:.3e})")]
    SingularSimilarity { magnitude: f64 },
    #[error("realization lacks the equal-diagonal shape (deviation {deviation:.3e})")]
    ShapeViolation { deviation: f64 },
    #[error("evaluator disagrees with the prescribed node values (deviation {deviation:.3e})")]
    ValueMismatch { deviation: f64 },
    #[error("no cyclic vector found: the target is numerically scalar")]
    NoCyclicVector,
    #[error("interpolating matrix polynomial stayed singular on the disc after {attempts} corrections")]
    PersistentSingularity { attempts: usize },
    #[error("realization file schema: {message}")]
    Schema { message: String },
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// State-space data of Psi(lambda) = A + B lambda (I - D lambda)^{-1} C.
///
/// The block operator [A B; C D] acts on C^2 (+) C^m and is a contraction,
/// so Psi is in the 2x2 Schur class; when the operator is unitary the
/// symmetrization of Psi has unimodular boundary values.
#[derive(Clone, Debug)]
pub struct Realization {
    pub a: Matrix2,
    /// 2 x m block.
    pub b: CMat,
    /// m x 2 block.
    pub c: CMat,
    /// m x m block.
    pub d: CMat,
    /// Whether the block operator was completed to a unitary.
    pub unitary: bool,
}

impl Realization {
    pub fn new(a: Matrix2, b: CMat, c: CMat, d: CMat, unitary: bool) -> Result<Self, RealizationError> {
        let m = d.nrows();
        if d.ncols() != m || b.nrows() != 2 || b.ncols() != m || c.nrows() != m || c.ncols() != 2 {
            return Err(RealizationError::DimensionMismatch { expected: m, got: b.ncols().max(c.nrows()) });
        }
        Ok(Realization { a, b, c, d, unitary })
    }

    pub fn state_dim(&self) -> usize {
        self.d.nrows()
    }

    /// Assemble the block operator [A B; C D] on C^(2+m).
    pub fn block_operator(&self) -> CMat {
        let m = self.state_dim();
        let q = 2 + m;
        let mut l = CMat::zeros(q, q);
        for r in 0..2 {
            for c in 0..2 {
                l[(r, c)] = self.a[(r, c)];
            }
        }
        for r in 0..2 {
            for c in 0..m {
                l[(r, 2 + c)] = self.b[(r, c)];
            }
        }
        for r in 0..m {
            for c in 0..2 {
                l[(2 + r, c)] = self.c[(r, c)];
            }
        }
        for r in 0..m {
            for c in 0..m {
                l[(2 + r, 2 + c)] = self.d[(r, c)];
            }
        }
        l
    }

    /// Evaluate Psi(lambda); errors when I - D lambda is numerically singular.
    pub fn eval_psi(&self, lambda: Complex64) -> Result<Matrix2, RealizationError> {
        let m = self.state_dim();
        if m == 0 {
            return Ok(self.a);
        }
        let resolvent = CMat::identity(m, m) - &self.d * lambda;
        let svd = resolvent.svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0f64, |acc, s| acc.max(*s));
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |acc, s| acc.min(*s));
        if smin <= 1e-12 * (1.0 + smax) {
            return Err(RealizationError::NearSingularResolvent { sigma_min: smin });
        }
        let y = svd.solve(&self.c, 0.0).expect("svd solve with u, v_t");
        let lift = &self.b * (y * lambda);
        Ok(Matrix2::new(
            self.a[(0, 0)] + lift[(0, 0)],
            self.a[(0, 1)] + lift[(0, 1)],
            self.a[(1, 0)] + lift[(1, 0)],
            self.a[(1, 1)] + lift[(1, 1)],
        ))
    }

    /// The symmetrized value h(lambda) = (tr, det) Psi(lambda).
    pub fn eval_h(&self, lambda: Complex64) -> Result<GammaPoint, RealizationError> {
        Ok(trdet(&self.eval_psi(lambda)?))
    }

    /// JSON with row-major [re, im] blocks and metadata.
    pub fn to_json_string(&self) -> String {
        let flat = |mat: &CMat| -> Vec<[f64; 2]> {
            let cols = mat.ncols();
            (0..mat.nrows() * cols)
                .map(|idx| {
                    let v = mat[(idx / cols, idx % cols)];
                    [v.re, v.im]
                })
                .collect()
        };
        let json = schema::RealizationJson {
            state_dim: self.state_dim(),
            unitary: self.unitary,
            a: (0..4).map(|idx| {
                let v = self.a[(idx / 2, idx % 2)];
                [v.re, v.im]
            }).collect(),
            b: flat(&self.b),
            c: flat(&self.c),
            d: flat(&self.d),
        };
        serde_json::to_string_pretty(&json).expect("realization serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Self, RealizationError> {
        let parsed: schema::RealizationJson = serde_json::from_str(text)
            .map_err(|e| RealizationError::Schema { message: e.to_string() })?;
        let m = parsed.state_dim;
        if parsed.a.len() != 4 {
            return Err(RealizationError::DimensionMismatch { expected: 4, got: parsed.a.len() });
        }
        for (flat, want) in [(&parsed.b, 2 * m), (&parsed.c, 2 * m), (&parsed.d, m * m)] {
            if flat.len() != want {
                return Err(RealizationError::DimensionMismatch { expected: want, got: flat.len() });
            }
        }
        let unflat = |flat: &[[f64; 2]], rows: usize, cols: usize| {
            CMat::from_fn(rows, cols, |r, c| {
                let v = flat[r * cols + c];
                Complex64::new(v[0], v[1])
            })
        };
        let a = Matrix2::new(
            Complex64::new(parsed.a[0][0], parsed.a[0][1]),
            Complex64::new(parsed.a[1][0], parsed.a[1][1]),
            Complex64::new(parsed.a[2][0], parsed.a[2][1]),
            Complex64::new(parsed.a[3][0], parsed.a[3][1]),
        );
        Realization::new(
            a,
            unflat(&parsed.b, 2, m),
            unflat(&parsed.c, m, 2),
            unflat(&parsed.d, m, m),
            parsed.unitary,
        )
    }
}

mod schema {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct RealizationJson {
        pub state_dim: usize,
        pub unitary: bool,
        pub a: Vec<[f64; 2]>,
        pub b: Vec<[f64; 2]>,
        pub c: Vec<[f64; 2]>,
        pub d: Vec<[f64; 2]>,
    }
}

/// A realized interpolant: evaluators for Psi and for h = (tr, det) Psi.
#[derive(Clone, Debug)]
pub struct RationalInterpolant {
    pub realization: Realization,
}

impl RationalInterpolant {
    pub fn new(realization: Realization) -> Self {
        RationalInterpolant { realization }
    }

    pub fn state_dim(&self) -> usize {
        self.realization.state_dim()
    }

    pub fn is_unitary(&self) -> bool {
        self.realization.unitary
    }

    pub fn eval_psi(&self, lambda: Complex64) -> Result<Matrix2, RealizationError> {
        self.realization.eval_psi(lambda)
    }

    pub fn eval_h(&self, lambda: Complex64) -> Result<GammaPoint, RealizationError> {
        self.realization.eval_h(lambda)
    }
}

/// Scalar family gamma with N = [conj(gamma_r) gamma_c], phase fixed so the
/// largest-modulus entry is real positive.
///
/// `tol` bounds both the admissible second eigenvalue and the admissible
/// negative dip, relative to the top eigenvalue.
pub fn factor_rank1(n_mat: &CMat, tol: f64) -> Result<Vec<Complex64>, RealizationError> {
    let dim = n_mat.nrows();
    let (vals, vecs) = hermitian_eigen(n_mat);
    let top = vals.last().copied().unwrap_or(0.0);
    if top <= tol {
        return Ok(vec![Complex64::new(0.0, 0.0); dim]);
    }
    if vals[0] < -tol * top.max(1.0) {
        return Err(RealizationError::NegativeEigenvalue { value: vals[0] });
    }
    if dim >= 2 && vals[dim - 2] > tol * top.max(1.0) {
        return Err(RealizationError::RankExceedsOne { second: vals[dim - 2] });
    }
    let u = vecs.column(dim - 1);
    let root = top.sqrt();
    let mut gamma: Vec<Complex64> = (0..dim).map(|r| u[r].conj() * root).collect();
    normalize_phase(&mut gamma);
    Ok(gamma)
}

/// Gram family of a PSD matrix: columns v_r in C^m with M_rc = v_r^* v_c,
/// where m is the numerical rank.
pub fn factor_psd(m_mat: &CMat, tol: f64) -> Result<CMat, RealizationError> {
    let dim = m_mat.nrows();
    let (vals, vecs) = hermitian_eigen(m_mat);
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if let Some(&low) = vals.first() {
        if low < -tol * (1.0 + scale) {
            return Err(RealizationError::NegativeEigenvalue { value: low });
        }
    }
    let kept: Vec<usize> = (0..dim).filter(|&i| vals[i] > tol * (1.0 + scale)).collect();
    let mut v = CMat::zeros(kept.len(), dim);
    for (row, &i) in kept.iter().enumerate() {
        let w = vecs.column(i);
        let root = vals[i].sqrt();
        for c in 0..dim {
            v[(row, c)] = w[c].conj() * root;
        }
    }
    Ok(v)
}

/// Orthonormalize the columns of a full-column-rank matrix in place order.
///
/// Plain modified Gram-Schmidt: when the input is already near-orthonormal
/// the output agrees with it to within the input's deviation, which is what
/// the unitary completion needs.
fn orthonormalize_columns(y: &CMat) -> CMat {
    let mut out = y.clone();
    for k in 0..out.ncols() {
        for j in 0..k {
            let q = out.column(j).clone_owned();
            let coef = (q.adjoint() * out.column(k))[(0, 0)];
            let update = q * coef;
            for r in 0..out.nrows() {
                out[(r, k)] -= update[r];
            }
        }
        let norm = out.column(k).norm();
        if norm > 1e-14 {
            for r in 0..out.nrows() {
                out[(r, k)] /= Complex64::new(norm, 0.0);
            }
        }
    }
    out
}

fn hstack(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    for c in 0..a.ncols() {
        out.set_column(c, &a.column(c));
    }
    for c in 0..b.ncols() {
        out.set_column(a.ncols() + c, &b.column(c));
    }
    out
}

/// Match the source family (1, z_k gamma_jk, lambda_j v_jk) to the target
/// family (-phi_jk, gamma_jk, v_jk) by a contraction on C^2 (+) C^m.
///
/// The Gramian gap S*S - T*T equals the feasibility residual of the
/// witness, so domination is exactly LMI feasibility. Within each node both
/// families are linear images of the two-vector frame (1, z gamma), so the
/// matching is attempted on the frame coefficients first, where the exact
/// interpolation conditions survive; witnesses without a usable frame
/// structure fall back to least squares on the raw column span.
pub fn build_contraction(
    gp: &GammaProblem,
    grid: &ZGrid,
    gamma: &[Complex64],
    v: &CMat,
) -> Result<Realization, RealizationError> {
    let n = gp.len();
    let dim = 3 * n;
    if gamma.len() != dim {
        return Err(RealizationError::DimensionMismatch { expected: dim, got: gamma.len() });
    }
    if v.ncols() != dim {
        return Err(RealizationError::DimensionMismatch { expected: dim, got: v.ncols() });
    }
    let m = v.nrows();
    let q = 2 + m;
    let mut s_fam = CMat::zeros(q, dim);
    let mut t_fam = CMat::zeros(q, dim);
    for j in 0..n {
        for k in 0..3 {
            let r = 3 * j + k;
            let z = grid.0[k];
            let phi = magic_phi(z, gp.values[j])?;
            s_fam[(0, r)] = Complex64::new(1.0, 0.0);
            s_fam[(1, r)] = z * gamma[r];
            t_fam[(0, r)] = -phi;
            t_fam[(1, r)] = gamma[r];
            for a in 0..m {
                s_fam[(2 + a, r)] = gp.nodes[j] * v[(a, r)];
                t_fam[(2 + a, r)] = v[(a, r)];
            }
        }
    }
    let gram_s = s_fam.adjoint() * &s_fam;
    let gram_t = t_fam.adjoint() * &t_fam;
    let gap = hermitian_part(&(&gram_s - &gram_t));
    let scale = 1.0 + spectral_scale_hermitian(&gram_s);
    let gap_floor = min_eig_hermitian(&gap);
    if gap_floor < -DOMINATION_TOL * scale {
        return Err(RealizationError::GramianDomination { min_eig: gap_floor });
    }
    let (l, unitary) = match framed_contraction(gp, grid, gamma, v) {
        Some(pair) => pair,
        None => {
            let equal = operator_norm(&gap) <= GRAM_EQ_TOL * scale;
            spanned_contraction(&s_fam, &t_fam, equal)
        }
    };
    let a = Matrix2::new(l[(0, 0)], l[(0, 1)], l[(1, 0)], l[(1, 1)]);
    let b = l.view((0, 2), (2, m)).into_owned();
    let c = l.view((2, 0), (m, 2)).into_owned();
    let d = l.view((2, 2), (m, m)).into_owned();
    Realization::new(a, b, c, d, unitary)
}

/// Matching on the per-node frame coefficients.
///
/// Nondegenerate feasible witnesses factor node by node as S_r = P_j f_r
/// and T_r = Q_j f_r over the frame f_r = (1, z_k gamma_r), with
///   P_j = [I_2; lambda_j W_j],
///   Q_j = [s_j/2, (s_j^2/4 - p_j)/c_j; c_j, s_j/2; W_j],
/// where c_j is the structured scalar coefficient and W_j the linear fit of
/// the Gram rows. Domination reduces to G = P*P - Q*Q >= 0 with the grid
/// eliminated, and a short damped Newton run on (c_j, W_j) against the
/// near-kernel block of G closes the remaining gap, after which L P = Q
/// holds to machine precision and the realized function takes the exact
/// prescribed node values. The raw-span route cannot do this: its matching
/// error scales like the square root of the witness residual floor, which
/// the frame route pays only in the initial fit.
fn framed_contraction(
    gp: &GammaProblem,
    grid: &ZGrid,
    gamma: &[Complex64],
    v: &CMat,
) -> Option<(CMat, bool)> {
    const EXIT_TOL: f64 = 1e-13;
    const ACCEPT_TOL: f64 = 1e-12;
    const EQ_TOL: f64 = 1e-10;
    let n = gp.len();
    let m = v.nrows();
    let one = Complex64::new(1.0, 0.0);
    let gscale = 1.0 + gamma.iter().fold(0.0f64, |acc, g| acc.max(g.norm()));

    // Structured fit of the scalar family, one coefficient per node.
    let mut c_par = Vec::with_capacity(n);
    let mut d_fam = vec![Complex64::default(); 3 * n];
    for j in 0..n {
        let val = gp.values[j];
        let mut num = Complex64::default();
        let mut den = 0.0;
        for k in 0..3 {
            let d0 = one - grid.0[k] * val.s * 0.5;
            if d0.norm() < 1e-8 {
                return None;
            }
            let d = d0.inv();
            d_fam[3 * j + k] = d;
            num += d.conj() * gamma[3 * j + k];
            den += d.norm_sqr();
        }
        let c = num / den;
        if c.norm() < 1e-12 * gscale {
            return None;
        }
        let mu = (val.s * val.s * 0.25 - val.p) / c;
        if mu.norm() > 1e9 * (1.0 + val.s.norm() + val.p.norm()) {
            return None;
        }
        c_par.push(c);
    }

    // Linear fit of the Gram rows against the frame of each node.
    let mut w_par = Vec::with_capacity(n);
    for j in 0..n {
        let mut aa = CMat::zeros(2, 2);
        let mut bb = CMat::zeros(m, 2);
        for k in 0..3 {
            let r = 3 * j + k;
            let f = [one, grid.0[k] * c_par[j] * d_fam[r]];
            for x in 0..2 {
                for y in 0..2 {
                    aa[(x, y)] += f[x] * f[y].conj();
                }
            }
            for a in 0..m {
                for y in 0..2 {
                    bb[(a, y)] += v[(a, r)] * f[y].conj();
                }
            }
        }
        let det = aa[(0, 0)] * aa[(1, 1)] - aa[(0, 1)] * aa[(1, 0)];
        let tr = aa[(0, 0)].re + aa[(1, 1)].re;
        if det.norm() < 1e-12 * (1.0 + tr * tr) {
            return None;
        }
        let inv = CMat::from_row_slice(
            2,
            2,
            &[aa[(1, 1)] / det, -aa[(0, 1)] / det, -aa[(1, 0)] / det, aa[(0, 0)] / det],
        );
        w_par.push(&bb * inv);
    }

    let assemble = |c_par: &[Complex64], w_par: &[CMat]| -> (CMat, CMat) {
        let q = 2 + m;
        let mut p_mat = CMat::zeros(q, 2 * n);
        let mut q_mat = CMat::zeros(q, 2 * n);
        for j in 0..n {
            let val = gp.values[j];
            let mu = (val.s * val.s * 0.25 - val.p) / c_par[j];
            p_mat[(0, 2 * j)] = one;
            p_mat[(1, 2 * j + 1)] = one;
            q_mat[(0, 2 * j)] = val.s * 0.5;
            q_mat[(0, 2 * j + 1)] = mu;
            q_mat[(1, 2 * j)] = c_par[j];
            q_mat[(1, 2 * j + 1)] = val.s * 0.5;
            for a in 0..m {
                for b in 0..2 {
                    p_mat[(2 + a, 2 * j + b)] = gp.nodes[j] * w_par[j][(a, b)];
                    q_mat[(2 + a, 2 * j + b)] = w_par[j][(a, b)];
                }
            }
        }
        (p_mat, q_mat)
    };
    let gram_gap = |p_mat: &CMat, q_mat: &CMat| -> CMat {
        hermitian_part(&(p_mat.adjoint() * p_mat - q_mat.adjoint() * q_mat))
    };
    let hinge = |vals: &[f64]| -> f64 { vals.iter().map(|x| x.min(0.0).powi(2)).sum() };

    let per_node = 2 + 4 * m;
    let n_params = n * per_node;
    let (mut p_mat, mut q_mat) = assemble(&c_par, &w_par);
    let mut damp = 1e-10;
    for _ in 0..80 {
        let g = gram_gap(&p_mat, &q_mat);
        let (vals, vecs) = hermitian_eigen(&g);
        let gsc = 1.0 + vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if vals[0] >= -EXIT_TOL * gsc {
            break;
        }
        let loss0 = hinge(&vals);
        // Freeze the invariant subspace of the near-kernel cluster and zero
        // its whole Galerkin block; per-eigenvalue steps are meaningless
        // inside a cluster.
        let thresh = 10.0 * (-vals[0]).max(EXIT_TOL * gsc);
        let cluster: Vec<usize> = (0..2 * n).filter(|&i| vals[i] < thresh).collect();
        let csize = cluster.len();
        let us: Vec<nalgebra::DVector<Complex64>> =
            cluster.iter().map(|&i| vecs.column(i).clone_owned()).collect();
        let pu: Vec<nalgebra::DVector<Complex64>> = us.iter().map(|u| &p_mat * u).collect();
        let qu: Vec<nalgebra::DVector<Complex64>> = us.iter().map(|u| &q_mat * u).collect();
        let mut jac = nalgebra::DMatrix::<f64>::zeros(csize * csize, n_params);
        let mut rho = nalgebra::DVector::<f64>::zeros(csize * csize);
        let mut row = 0usize;
        for ii in 0..csize {
            for jj in ii..csize {
                let g_ij = (us[ii].adjoint() * &g * &us[jj])[(0, 0)];
                let real_only = ii == jj;
                let mut put = |col: usize, dval: Complex64| {
                    jac[(row, col)] = dval.re;
                    if !real_only {
                        jac[(row + 1, col)] = dval.im;
                    }
                };
                for j in 0..n {
                    let val = gp.values[j];
                    let mu = (val.s * val.s * 0.25 - val.p) / c_par[j];
                    let dmu = -mu / c_par[j];
                    let base = j * per_node;
                    for (off, e) in [(0usize, one), (1usize, Complex64::new(0.0, 1.0))] {
                        // dQ: row 1 gets e at column 2j, row 0 gets dmu e at
                        // column 2j+1; P does not depend on c_j.
                        let dq_ui_0 = dmu * e * us[ii][2 * j + 1];
                        let dq_ui_1 = e * us[ii][2 * j];
                        let dq_uj_0 = dmu * e * us[jj][2 * j + 1];
                        let dq_uj_1 = e * us[jj][2 * j];
                        let d = -(dq_ui_0.conj() * qu[jj][0] + dq_ui_1.conj() * qu[jj][1])
                            - (qu[ii][0].conj() * dq_uj_0 + qu[ii][1].conj() * dq_uj_1);
                        put(base + off, d);
                    }
                    for a in 0..m {
                        for b in 0..2 {
                            let col = base + 2 + 2 * (a * 2 + b);
                            for (off, e) in [(0usize, one), (1usize, Complex64::new(0.0, 1.0))]
                            {
                                let dp_i = gp.nodes[j] * e * us[ii][2 * j + b];
                                let dp_j = gp.nodes[j] * e * us[jj][2 * j + b];
                                let dq_i = e * us[ii][2 * j + b];
                                let dq_j = e * us[jj][2 * j + b];
                                let d = dp_i.conj() * pu[jj][2 + a]
                                    + pu[ii][2 + a].conj() * dp_j
                                    - dq_i.conj() * qu[jj][2 + a]
                                    - qu[ii][2 + a].conj() * dq_j;
                                put(col + off, d);
                            }
                        }
                    }
                }
                rho[row] = g_ij.re;
                if real_only {
                    row += 1;
                } else {
                    rho[row + 1] = g_ij.im;
                    row += 2;
                }
            }
        }
        let rows = row;
        let jac = jac.rows(0, rows).into_owned();
        let rho = rho.rows(0, rows).into_owned();
        let jjt = &jac * jac.transpose();
        let mut stepped = false;
        let mut local = damp;
        for _ in 0..25 {
            let lhs = &jjt
                + nalgebra::DMatrix::<f64>::identity(rows, rows)
                    * (local * (1.0 + jjt.diagonal().amax()));
            let Some(ch) = lhs.clone().cholesky() else {
                local *= 10.0;
                continue;
            };
            let d = jac.transpose() * ch.solve(&(-&rho));
            let mut c_try = c_par.clone();
            let mut w_try = w_par.clone();
            for j in 0..n {
                let base = j * per_node;
                c_try[j] += Complex64::new(d[base], d[base + 1]);
                for a in 0..m {
                    for b in 0..2 {
                        let col = base + 2 + 2 * (a * 2 + b);
                        w_try[j][(a, b)] += Complex64::new(d[col], d[col + 1]);
                    }
                }
            }
            let (p_try, q_try) = assemble(&c_try, &w_try);
            let (tvals, _) = hermitian_eigen(&gram_gap(&p_try, &q_try));
            if hinge(&tvals) < loss0 * (1.0 - 1e-12) {
                c_par = c_try;
                w_par = w_try;
                p_mat = p_try;
                q_mat = q_try;
                stepped = true;
                break;
            }
            local *= 10.0;
        }
        if !stepped {
            break;
        }
        damp = (local * 0.1).max(1e-12);
    }

    let g = gram_gap(&p_mat, &q_mat);
    let (vals, _) = hermitian_eigen(&g);
    let gsc = 1.0 + vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if vals[0] < -ACCEPT_TOL * gsc {
        return None;
    }
    let equal = vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) <= EQ_TOL * gsc;

    let q = 2 + m;
    let svd = p_mat.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, x| acc.max(*x));
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-8 * smax)
        .collect();
    let rank = kept.len();
    let mut u_r = CMat::zeros(q, rank);
    let mut y_r = CMat::zeros(q, rank);
    for (col, &i) in kept.iter().enumerate() {
        u_r.set_column(col, &u.column(i));
        let vi = vt.row(i).adjoint();
        let y = (&q_mat * vi) / Complex64::new(svd.singular_values[i], 0.0);
        y_r.set_column(col, &y);
    }
    let l = if equal {
        let qy = orthonormalize_columns(&y_r);
        let u_comp = complement_basis(&u_r);
        let y_comp = complement_basis(&qy);
        hstack(&qy, &y_comp) * hstack(&u_r, &u_comp).adjoint()
    } else {
        let mut raw = &y_r * u_r.adjoint();
        let norm = operator_norm(&raw);
        if norm > 1.0 + 1e-6 {
            return None;
        }
        if norm > 1.0 {
            raw /= Complex64::new(norm, 0.0);
        }
        raw
    };
    Some((l, equal))
}

/// Least-squares matching on the raw column span, the fallback when the
/// witness has no usable frame structure. The least-squares map on the span
/// extends by zero on the orthocomplement; when the two Gramians agree the
/// map is an isometry on the span and is completed to a unitary instead,
/// which makes the interpolant inner. Matching error grows like the square
/// root of the witness residual floor.
fn spanned_contraction(s_fam: &CMat, t_fam: &CMat, equal: bool) -> (CMat, bool) {
    let q = s_fam.nrows();
    let svd = s_fam.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, s| acc.max(*s));
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPAN_CUTOFF * smax && svd.singular_values[i] > 0.0)
        .collect();
    let rank = kept.len();
    let mut u_r = CMat::zeros(q, rank);
    let mut y_r = CMat::zeros(q, rank);
    for (col, &i) in kept.iter().enumerate() {
        u_r.set_column(col, &u.column(i));
        let vi = vt.row(i).adjoint();
        let y = (t_fam * vi) / Complex64::new(svd.singular_values[i], 0.0);
        y_r.set_column(col, &y);
    }
    let l = if equal {
        let qy = orthonormalize_columns(&y_r);
        let u_comp = complement_basis(&u_r);
        let y_comp = complement_basis(&qy);
        hstack(&qy, &y_comp) * hstack(&u_r, &u_comp).adjoint()
    } else {
        let raw = &y_r * u_r.adjoint();
        // Roundoff can push the least-squares map a hair past the unit
        // ball; clip the singular values so the block stays a contraction.
        let norm = operator_norm(&raw);
        if norm <= 1.0 {
            raw
        } else {
            let rsvd = raw.clone().svd(true, true);
            let ru = rsvd.u.as_ref().expect("svd with u");
            let rvt = rsvd.v_t.as_ref().expect("svd with v_t");
            let mut clipped = CMat::zeros(q, q);
            for i in 0..rsvd.singular_values.len() {
                let s = rsvd.singular_values[i].min(1.0);
                clipped += ru.column(i) * rvt.row(i) * Complex64::new(s, 0.0);
            }
            clipped
        }
    };
    (l, equal)
}

/// Full synthesis: factor the witness blocks and build the realization.
///
/// Uses the stored rank-1 factor when the witness carries one; `tol` is the
/// factorization rank tolerance.
pub fn synthesize_interpolant(
    gp: &GammaProblem,
    grid: &ZGrid,
    pair: &WitnessPair,
    tol: f64,
) -> Result<RationalInterpolant, RealizationError> {
    let gamma = match &pair.gamma {
        Some(g) => g.clone(),
        None => factor_rank1(&pair.n_mat, tol)?,
    };
    let v = factor_psd(&pair.m_mat, tol)?;
    let realization = build_contraction(gp, grid, &gamma, &v)?;
    Ok(RationalInterpolant::new(realization))
}

/// Recover the canonical witness pair from an interpolating realization.
///
/// Requires Psi with equal diagonal entries at the nodes. With
/// s = tr Psi, the scalar family is gamma(lambda, z) = Psi_12(lambda) /
/// (1 - s(lambda) z / 2), and with eta(lambda, z) = (z gamma, 1) the pair
///   N_rc = conj(gamma_r) gamma_c,
///   M_rc = eta_r^* [(I - Psi_i^* Psi_j) / (1 - conj(l_i) l_j)] eta_c
/// satisfies the feasibility identity with equality, so the residual of the
/// returned witness is zero up to roundoff.
pub fn witness_from_solution<F>(
    psi: F,
    gp: &GammaProblem,
    grid: &ZGrid,
) -> Result<WitnessPair, RealizationError>
where
    F: Fn(Complex64) -> Result<Matrix2, RealizationError>,
{
    let n = gp.len();
    let dim = 3 * n;
    let mut psis: Vec<Matrix2> = Vec::with_capacity(n);
    for j in 0..n {
        let value = psi(gp.nodes[j])?;
        let deviation = (value[(0, 0)] - value[(1, 1)]).norm();
        if deviation > SHAPE_TOL * (1.0 + value.norm()) {
            return Err(RealizationError::ShapeViolation { deviation });
        }
        let got = trdet(&value);
        let mismatch = (got.s - gp.values[j].s).norm().max((got.p - gp.values[j].p).norm());
        if mismatch > VALUE_TOL {
            return Err(RealizationError::ValueMismatch { deviation: mismatch });
        }
        psis.push(value);
    }
    let one = Complex64::new(1.0, 0.0);
    let mut gamma = vec![Complex64::new(0.0, 0.0); dim];
    let mut eta = vec![[Complex64::new(0.0, 0.0); 2]; dim];
    for j in 0..n {
        let s = psis[j][(0, 0)] + psis[j][(1, 1)];
        for k in 0..3 {
            let r = 3 * j + k;
            let den = one - s * grid.0[k] * 0.5;
            if den.norm() < 1e-12 {
                return Err(GammaError::SingularDenominator { magnitude: den.norm() }.into());
            }
            gamma[r] = psis[j][(0, 1)] / den;
            eta[r] = [grid.0[k] * gamma[r], one];
        }
    }
    let mut m_mat = CMat::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let den = one - gp.nodes[i].conj() * gp.nodes[j];
            let kern = (Matrix2::identity() - psis[i].adjoint() * psis[j]) * (one / den);
            for l in 0..3 {
                for k in 0..3 {
                    let r = 3 * i + l;
                    let c = 3 * j + k;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (a, ea) in eta[r].iter().enumerate() {
                        for (b, eb) in eta[c].iter().enumerate() {
                            acc += ea.conj() * kern[(a, b)] * eb;
                        }
                    }
                    m_mat[(r, c)] = acc;
                }
            }
        }
    }
    Ok(WitnessPair::from_gamma(gamma, hermitian_part(&m_mat)))
}

/// Boundary membership sweep at radius 1 - 1e-8; true iff every sample of
/// h lies on the distinguished boundary within 1e-5.
pub fn check_gamma_inner(interp: &RationalInterpolant, n_samples: usize) -> bool {
    let radius = 1.0 - 1e-8;
    for t in 0..n_samples {
        let theta = 2.0 * std::f64::consts::PI * (t as f64) / (n_samples as f64);
        let lambda = Complex64::from_polar(radius, theta);
        match interp.eval_h(lambda) {
            Ok(value) if in_bgamma(value, 1e-5) => {}
            _ => return false,
        }
    }
    true
}

/// A 2x2 matrix interpolant F(lambda) = P(lambda)^{-1} C_h(lambda) P(lambda),
/// where C_h is the companion matrix of (s, p) = h(lambda) and P is a
/// matrix polynomial that matches the node similarities and is nonsingular
/// on the closed disc.
pub struct MatrixInterpolant {
    h: Box<dyn Fn(Complex64) -> Result<GammaPoint, RealizationError> + Send + Sync>,
    /// Ascending coefficients of the similarity polynomial P.
    p_coeffs: Vec<Matrix2>,
    /// Ascending coefficients of the shear parameters (x, w, y, t) when P
    /// was built as a shear product; conjugation then uses the exact
    /// unit-triangular inverses instead of inverting P, which matters when
    /// P grows large between the nodes.
    shears: Option<[Vec<Complex64>; 4]>,
    nodes: Vec<Complex64>,
}

impl MatrixInterpolant {
    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// The similarity polynomial at a point (Horner evaluation).
    pub fn p_at(&self, lambda: Complex64) -> Matrix2 {
        let mut acc = Matrix2::zeros();
        for coeff in self.p_coeffs.iter().rev() {
            acc = acc * lambda + coeff;
        }
        acc
    }

    /// The scalar-pair interpolant backing this matrix function.
    pub fn eval_h(&self, lambda: Complex64) -> Result<GammaPoint, RealizationError> {
        (self.h)(lambda)
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Matrix2, RealizationError> {
        let value = (self.h)(lambda)?;
        let companion = Matrix2::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            -value.p,
            value.s,
        );
        if let Some([x, w, y, t]) = &self.shears {
            let horner = |coeffs: &[Complex64]| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &coeff in coeffs.iter().rev() {
                    acc = acc * lambda + coeff;
                }
                acc
            };
            let upper = |v: Complex64| {
                Matrix2::new(Complex64::new(1.0, 0.0), v, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
            };
            let lower = |v: Complex64| {
                Matrix2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), v, Complex64::new(1.0, 0.0))
            };
            let (xv, wv, yv, tv) = (horner(x), horner(w), horner(y), horner(t));
            let mut f = upper(-xv) * companion * upper(xv);
            f = lower(-wv) * f * lower(wv);
            f = upper(-yv) * f * upper(yv);
            f = lower(tv) * f * lower(-tv);
            return Ok(f);
        }
        let p = self.p_at(lambda);
        let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
        let inv = p
            .try_inverse()
            .ok_or(RealizationError::SingularSimilarity { magnitude: det.norm() })?;
        Ok(inv * companion * p)
    }
}

/// Rows (f, f W) of a cyclic row vector f, so that P W P^{-1} is the
/// companion matrix of the characteristic polynomial of W.
///
/// f is chosen deterministically from the two standard basis vectors with
/// the balanced vector as the final fallback (needed for nonscalar diagonal
/// targets, which defeat both standard choices).
fn companion_similarity(w: &Matrix2) -> Result<Matrix2, RealizationError> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let candidates: [[Complex64; 2]; 3] = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(inv_sqrt2, 0.0), Complex64::new(inv_sqrt2, 0.0)],
    ];
    let scale = 1.0 + w.norm();
    for f in candidates {
        let fw = [
            f[0] * w[(0, 0)] + f[1] * w[(1, 0)],
            f[0] * w[(0, 1)] + f[1] * w[(1, 1)],
        ];
        let det = f[0] * fw[1] - f[1] * fw[0];
        if det.norm() > CYCLIC_TOL * scale {
            return Ok(Matrix2::new(f[0], f[1], fw[0], fw[1]));
        }
    }
    Err(RealizationError::NoCyclicVector)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Ascending coefficients of prod_j (lambda - nodes[j]).
fn node_poly(nodes: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for &node in nodes {
        out = poly_mul(&out, &[-node, Complex64::new(1.0, 0.0)]);
    }
    out
}

/// Ascending coefficients of the Lagrange basis polynomial at index j.
fn lagrange_basis(nodes: &[Complex64], j: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    let mut denom = Complex64::new(1.0, 0.0);
    for (i, &node) in nodes.iter().enumerate() {
        if i == j {
            continue;
        }
        out = poly_mul(&out, &[-node, Complex64::new(1.0, 0.0)]);
        denom *= nodes[j] - node;
    }
    for coeff in &mut out {
        *coeff /= denom;
    }
    out
}

/// Moduli of the roots of an ascending-coefficient complex polynomial.
///
/// The complex companion matrix is realified to a doubled real matrix whose
/// spectrum is the union of the roots and their conjugates, which leaves
/// the moduli unchanged.
fn root_moduli(coeffs: &[Complex64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.norm()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree].norm() <= 1e-12 * scale {
        degree -= 1;
    }
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let mut companion = CMat::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let doubled = nalgebra::DMatrix::<f64>::from_fn(2 * degree, 2 * degree, |r, c| {
        let v = companion[(r % degree, c % degree)];
        if r < degree {
            if c < degree { v.re } else { -v.im }
        } else if c < degree {
            v.im
        } else {
            v.re
        }
    });
    doubled
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .collect()
}

/// Detect singularity of the similarity polynomial on the closed disc: a
/// sampled floor on |det P| over concentric rings plus an exact root check
/// of the determinant polynomial (sampling alone can miss interior zeros).
fn similarity_singular(p_coeffs: &[Matrix2]) -> bool {
    let entry = |r: usize, c: usize| -> Vec<Complex64> {
        p_coeffs.iter().map(|m| m[(r, c)]).collect()
    };
    let det_coeffs = {
        let aa = poly_mul(&entry(0, 0), &entry(1, 1));
        let bb = poly_mul(&entry(0, 1), &entry(1, 0));
        let mut out = aa;
        for (i, v) in bb.iter().enumerate() {
            out[i] -= v;
        }
        out
    };
    let det_scale = det_coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.norm()));
    if det_scale <= 1e-12 {
        return true;
    }
    if root_moduli(&det_coeffs).iter().any(|&r| r <= 1.0 + 1e-6) {
        return true;
    }
    let rings = 6;
    let per_ring = SINGULARITY_GRID / rings;
    for ring in 1..=rings {
        let radius = ring as f64 / rings as f64;
        for t in 0..per_ring {
            let theta = 2.0 * std::f64::consts::PI * (t as f64) / (per_ring as f64);
            let lambda = Complex64::from_polar(radius, theta);
            let mut det = Complex64::new(0.0, 0.0);
            let mut acc = Matrix2::zeros();
            for coeff in p_coeffs.iter().rev() {
                acc = acc * lambda + coeff;
            }
            det += acc[(0, 0)] * acc[(1, 1)] - acc[(0, 1)] * acc[(1, 0)];
            if det.norm() < DET_FLOOR {
                return true;
            }
        }
    }
    false
}

fn matpoly_mul(a: &[Matrix2], b: &[Matrix2]) -> Vec<Matrix2> {
    let mut out = vec![Matrix2::zeros(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Ascending coefficients of the scalar Lagrange interpolant through
/// (nodes[j], values[j]).
fn lagrange_scalar(nodes: &[Complex64], values: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); nodes.len()];
    for (j, &value) in values.iter().enumerate() {
        let basis = lagrange_basis(nodes, j);
        for (t, &coeff) in basis.iter().enumerate() {
            out[t] += value * coeff;
        }
    }
    out
}

/// Unimodular similarity polynomial through the normalized node
/// similarities.
///
/// Scalar multiples of a similarity act identically, so each node matrix is
/// first scaled to determinant one and then factored into elementary shears
///   P_j = U(x_j) L(w_j) U(y_j) L(-t_j),
/// U unit upper triangular and L unit lower triangular, with t_j from
/// {0, 1, -1} picked to push the pivot w_j = c_j + t_j d_j away from zero
/// (some choice works whenever the bottom row is nonzero, which det 1
/// forces). Lagrange interpolation of the four scalar parameters and
/// multiplying the shear factors back out yields P with det P = 1
/// identically in lambda, so P cannot be singular anywhere and no
/// correction pass is needed.
fn shear_similarity(
    nodes: &[Complex64],
    similarities: &[Matrix2],
) -> Option<(Vec<Matrix2>, [Vec<Complex64>; 4])> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let n = nodes.len();

    // Candidate shear parameters per node: both determinant roots and all
    // three pivot shifts factor the matrix, and they differ a lot in size.
    let mut variants: Vec<Vec<[Complex64; 4]>> = Vec::with_capacity(n);
    for p in similarities {
        let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
        if det.norm() < 1e-12 * (1.0 + p.norm_squared()) {
            return None;
        }
        let root = det.sqrt();
        let mut local = Vec::new();
        for sign in [one, -one] {
            let (a, b) = (p[(0, 0)] * sign / root, p[(0, 1)] * sign / root);
            let (c, d) = (p[(1, 0)] * sign / root, p[(1, 1)] * sign / root);
            for t in [zero, one, -one] {
                let w = c + t * d;
                if w.norm() < 1e-9 {
                    continue;
                }
                local.push([(a + t * b - one) / w, w, (d - one) / w, t]);
            }
        }
        if local.is_empty() {
            return None;
        }
        local.sort_by(|u, v| {
            let su: f64 = u.iter().map(|e| e.norm_sqr()).sum();
            let sv: f64 = v.iter().map(|e| e.norm_sqr()).sum();
            su.partial_cmp(&sv).expect("finite sizes")
        });
        variants.push(local);
    }

    // The product grows between the nodes when the interpolated parameters
    // oscillate, so pick the variant combination with the smallest sampled
    // sup of the product over the boundary circle (which bounds the disc).
    const RING: usize = 24;
    let ring: Vec<Complex64> = (0..RING)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / RING as f64))
        .collect();
    let sup_norm = |params: &[[Complex64; 4]]| -> f64 {
        let coeffs: Vec<Vec<Complex64>> = (0..4)
            .map(|i| {
                let vals: Vec<Complex64> = params.iter().map(|p| p[i]).collect();
                lagrange_scalar(nodes, &vals)
            })
            .collect();
        let mut worst = 0.0f64;
        for &z in &ring {
            let ev: Vec<Complex64> = coeffs
                .iter()
                .map(|cs| cs.iter().rev().fold(zero, |acc, &c| acc * z + c))
                .collect();
            let m = Matrix2::new(one, ev[0], zero, one)
                * Matrix2::new(one, zero, ev[1], one)
                * Matrix2::new(one, ev[2], zero, one)
                * Matrix2::new(one, zero, -ev[3], one);
            worst = worst.max(m.norm());
        }
        worst
    };
    let combos: usize = variants.iter().map(Vec::len).product();
    let mut chosen: Vec<[Complex64; 4]> = variants.iter().map(|v| v[0]).collect();
    if combos <= 4096 {
        let mut best = f64::INFINITY;
        let mut index = vec![0usize; n];
        loop {
            let attempt: Vec<[Complex64; 4]> =
                (0..n).map(|j| variants[j][index[j]]).collect();
            let score = sup_norm(&attempt);
            if score < best {
                best = score;
                chosen = attempt;
            }
            let mut carry = 0;
            loop {
                index[carry] += 1;
                if index[carry] < variants[carry].len() {
                    break;
                }
                index[carry] = 0;
                carry += 1;
                if carry == n {
                    break;
                }
            }
            if carry == n {
                break;
            }
        }
    }

    // Any multiple of the vanishing polynomial can be added to a parameter
    // without moving its node values or the unit determinant; shave each
    // parameter's boundary sup with the best affine multiple (Lawson
    // iteration for the Chebyshev fit on circle samples).
    let vanish = node_poly(nodes);
    let smooth = |coeffs: Vec<Complex64>| -> Vec<Complex64> {
        const SAMPLES: usize = 64;
        let mut zs = Vec::with_capacity(SAMPLES);
        let mut xv = Vec::with_capacity(SAMPLES);
        let mut vv = Vec::with_capacity(SAMPLES);
        for k in 0..SAMPLES {
            let z = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64,
            );
            zs.push(z);
            xv.push(coeffs.iter().rev().fold(zero, |acc, &c| acc * z + c));
            vv.push(vanish.iter().rev().fold(zero, |acc, &c| acc * z + c));
        }
        let residual = |shift: &[Complex64; 2], k: usize| -> Complex64 {
            xv[k] - (shift[0] + shift[1] * zs[k]) * vv[k]
        };
        let mut weights = vec![1.0f64; SAMPLES];
        let mut shift = [zero, zero];
        for _ in 0..30 {
            let mut normal = [[zero; 2]; 2];
            let mut rhs = [zero; 2];
            for k in 0..SAMPLES {
                let basis = [vv[k], vv[k] * zs[k]];
                for r in 0..2 {
                    for c in 0..2 {
                        normal[r][c] += basis[r].conj() * basis[c] * weights[k];
                    }
                    rhs[r] += basis[r].conj() * xv[k] * weights[k];
                }
            }
            let det = normal[0][0] * normal[1][1] - normal[0][1] * normal[1][0];
            if det.norm() < 1e-30 {
                break;
            }
            shift = [
                (normal[1][1] * rhs[0] - normal[0][1] * rhs[1]) / det,
                (normal[0][0] * rhs[1] - normal[1][0] * rhs[0]) / det,
            ];
            let mut total = 0.0;
            for k in 0..SAMPLES {
                weights[k] *= residual(&shift, k).norm().max(1e-30);
                total += weights[k];
            }
            for w in &mut weights {
                *w /= total;
            }
        }
        let before = xv.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        let after = (0..SAMPLES).fold(0.0f64, |acc, k| acc.max(residual(&shift, k).norm()));
        if after >= before {
            return coeffs;
        }
        let shift_poly = poly_mul(&vanish, &[shift[0], shift[1]]);
        let mut out = coeffs;
        out.resize(out.len().max(shift_poly.len()), zero);
        for (c, &v) in out.iter_mut().zip(shift_poly.iter()) {
            *c -= v;
        }
        out
    };

    let scalar_coeffs = |i: usize| -> Vec<Complex64> {
        let vals: Vec<Complex64> = chosen.iter().map(|p| p[i]).collect();
        smooth(lagrange_scalar(nodes, &vals))
    };
    let x_coeffs = scalar_coeffs(0);
    let w_coeffs = scalar_coeffs(1);
    let y_coeffs = scalar_coeffs(2);
    let t_coeffs = scalar_coeffs(3);
    let embed = |coeffs: &[Complex64], r: usize, c: usize, sign: f64| -> Vec<Matrix2> {
        let mut out = vec![Matrix2::zeros(); coeffs.len().max(1)];
        out[0] = Matrix2::identity();
        for (t, &v) in coeffs.iter().enumerate() {
            out[t][(r, c)] += v * sign;
        }
        out
    };
    let x_poly = embed(&x_coeffs, 0, 1, 1.0);
    let w_poly = embed(&w_coeffs, 1, 0, 1.0);
    let y_poly = embed(&y_coeffs, 0, 1, 1.0);
    let t_poly = embed(&t_coeffs, 1, 0, -1.0);
    let p_coeffs = matpoly_mul(&matpoly_mul(&x_poly, &w_poly), &matpoly_mul(&y_poly, &t_poly));
    Some((p_coeffs, [x_coeffs, w_coeffs, y_coeffs, t_coeffs]))
}

/// Lift a scalar-pair interpolant to a 2x2 matrix interpolant that matches
/// the matrix targets at the nodes.
///
/// Each target is similar to the companion matrix of its characteristic
/// polynomial; the similarities are joined by a Lagrange matrix polynomial
/// P. When the raw polynomial is singular somewhere on the closed disc, a
/// few corrections by multiples of prod (lambda - lambda_j) R with random R
/// are tried, and after those the shear-product polynomial, whose unit
/// determinant rules out singularities outright. Since conjugation
/// preserves the characteristic polynomial, (tr, det) F = h identically.
pub fn companion_lift<H>(
    h: H,
    problem: &SpectralProblem,
) -> Result<MatrixInterpolant, RealizationError>
where
    H: Fn(Complex64) -> Result<GammaPoint, RealizationError> + Send + Sync + 'static,
{
    let n = problem.len();
    let mut similarities: Vec<Matrix2> = Vec::with_capacity(n);
    for j in 0..n {
        let value = h(problem.nodes[j])?;
        let target = trdet(&problem.targets[j]);
        let mismatch = (value.s - target.s).norm().max((value.p - target.p).norm());
        if mismatch > VALUE_TOL {
            return Err(RealizationError::ValueMismatch { deviation: mismatch });
        }
        similarities.push(companion_similarity(&problem.targets[j])?);
    }
    let degree = n - 1;
    let mut base = vec![Matrix2::zeros(); degree + 1];
    for j in 0..n {
        let basis = lagrange_basis(&problem.nodes, j);
        for (t, &coeff) in basis.iter().enumerate() {
            base[t] += similarities[j] * coeff;
        }
    }
    let vanishing = node_poly(&problem.nodes);
    let coeff_scale = base.iter().fold(0.0f64, |acc, m| acc.max(m.norm())).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut candidates = vec![(base.clone(), None)];
    for eps in [0.03, 0.1, 0.3, 1.0] {
        let raw = random_complex_matrix(&mut rng, 2, 2);
        let unit = &raw / Complex64::new(operator_norm(&raw).max(1e-9), 0.0);
        let r_mat = Matrix2::new(unit[(0, 0)], unit[(0, 1)], unit[(1, 0)], unit[(1, 1)]);
        let mut corrected = base.clone();
        corrected.resize(base.len().max(vanishing.len()), Matrix2::zeros());
        for (t, &coeff) in vanishing.iter().enumerate() {
            corrected[t] += r_mat * (coeff * eps * coeff_scale);
        }
        candidates.push((corrected, None));
    }
    if let Some((sheared, factors)) = shear_similarity(&problem.nodes, &similarities) {
        candidates.push((sheared, Some(factors)));
    }
    let attempts = candidates.len();
    for (candidate, shears) in candidates {
        if !similarity_singular(&candidate) {
            return Ok(MatrixInterpolant {
                h: Box::new(h),
                p_coeffs: candidate,
                shears,
                nodes: problem.nodes.clone(),
            });
        }
    }
    Err(RealizationError::PersistentSingularity { attempts })
}
