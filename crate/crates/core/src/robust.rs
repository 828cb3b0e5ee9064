//! Robust stabilization of the worked half-plane plant family.
//!
//! A 6x6 feedback plant with scalar uncertainty reduces, through the Youla
//! parametrization and an explicit doubly coprime factorization of its
//! lower-right corner, to a model-matching problem whose outer factors are
//! scalar multiples of two degree-one all-pass functions. Matching is then a
//! two-point interpolation problem on the disc after a Cayley transform, so
//! solvability has the closed form |c| < 1/(4 - 2 sqrt(3)) and a controller
//! can be synthesized from any strictly contractive disc interpolant. This
//! module builds the rational data, performs the reduction, synthesizes Q
//! and the controller K, and verifies the algebraic identities at
//! deterministic sample points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma::{cayley_inv, spectral_radius, GammaError, Matrix2};
use crate::linalg::CMat;
use crate::poly::{PolyError, RationalMatrix, RealPolynomial, ScalarRational};
use crate::problem::SpectralProblem;

/// Number of deterministic half-plane sample points for identity checks.
pub const SAMPLE_COUNT: usize = 20;

/// Acceptance tolerance for sampled rational identities.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Real offset used to evaluate removable singularities symmetrically.
const SINGULARITY_OFFSET: f64 = 1e-5;

/// Required agreement of the two offset evaluations.
const OFFSET_AGREEMENT: f64 = 1e-4;

/// Interpolation-node residual above which the parameter numerator cannot
/// vanish and the quotient would have genuine poles.
const NUMERATOR_TOL: f64 = 1e-6;

/// Radius at which the disc interpolant is sampled for its boundary value
/// at one.
const RADIAL_POINT: f64 = 1.0 - 1e-7;

/// Margin under one required of the verified spectral-radius supremum.
const SUP_MARGIN: f64 = 1e-6;

#[derive(Error, Debug)]
pub enum RobustError {
    #[error("all-pass zero must lie in the open right half-plane (Re = {re:.3e})")]
    NotInHalfPlane { re: f64 },
    #[error("all-pass zero must be real to stay in the real-rational class (Im = {im:.3e})")]
    NonRealZero { im: f64 },
    #[error("parameter {name} must be real for the rational plant family (Im = {im:.3e})")]
    NonRealParameter { name: &'static str, im: f64 },
    #[error("parameter c must be nonzero")]
    ZeroParameter,
    #[error("{what} violated by {deviation:.3e}")]
    IdentityViolation { what: String, deviation: f64 },
    #[error("{what} violated by {deviation:.3e}")]
    PreconditionViolated { what: String, deviation: f64 },
    #[error("{what} is singular")]
    SingularFactor { what: String },
    #[error("{what} is not stable proper")]
    NotStableProper { what: String },
    #[error("evaluator failed: {what}")]
    Eval { what: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// Pointwise 2x2 matrix function used for interpolants fed into the
/// synthesis path.
pub type MatrixEval = Box<dyn Fn(Complex64) -> Result<Matrix2, RobustError> + Send + Sync>;

/// The deterministic half-plane sample points s = 0.5 + 0.3 k + 0.7 k i.
pub fn sample_points() -> Vec<Complex64> {
    (1..=SAMPLE_COUNT)
        .map(|k| Complex64::new(0.5 + 0.3 * k as f64, 0.7 * k as f64))
        .collect()
}

/// The degree-one stable all-pass factor (s - g)/(s + g) for real g > 0.
pub fn blaschke(gamma: Complex64) -> Result<ScalarRational, RobustError> {
    if gamma.re <= 0.0 {
        return Err(RobustError::NotInHalfPlane { re: gamma.re });
    }
    if gamma.im != 0.0 {
        return Err(RobustError::NonRealZero { im: gamma.im });
    }
    Ok(ScalarRational::new(
        RealPolynomial::linear(-gamma.re, 1.0),
        RealPolynomial::linear(gamma.re, 1.0),
    )
    .expect("nonzero denominator"))
}

/// The fixed pair completing the scalar Bezout identity
/// f b_1 + g b_3 = 1 over the stable proper functions.
pub fn fg_pair() -> (ScalarRational, ScalarRational) {
    let f = ScalarRational::new(
        RealPolynomial::linear(3.0, 1.0).scale(4.0 / 3.0),
        RealPolynomial::linear(1.0, 1.0),
    )
    .expect("nonzero denominator");
    let g = ScalarRational::new(
        (&RealPolynomial::linear(3.0, 1.0) * &RealPolynomial::linear(5.0, 1.0)).scale(-1.0 / 3.0),
        &RealPolynomial::linear(1.0, 1.0) * &RealPolynomial::linear(1.0, 1.0),
    )
    .expect("nonzero denominator");
    (f, g)
}

fn mat2(
    e00: ScalarRational,
    e01: ScalarRational,
    e10: ScalarRational,
    e11: ScalarRational,
) -> RationalMatrix {
    RationalMatrix::new(2, 2, vec![e00, e01, e10, e11]).expect("2x2 shape")
}

fn m2(m: &CMat) -> Matrix2 {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// The three all-pass factors the plant family is built from.
struct AllPass {
    b1: ScalarRational,
    b3: ScalarRational,
    br3: ScalarRational,
}

fn all_pass() -> AllPass {
    AllPass {
        b1: blaschke(Complex64::new(1.0, 0.0)).expect("real zero"),
        b3: blaschke(Complex64::new(3.0, 0.0)).expect("real zero"),
        br3: blaschke(Complex64::new(3.0f64.sqrt(), 0.0)).expect("real zero"),
    }
}

/// The eight stable proper matrices of the doubly coprime factorization of
/// the plant corner, satisfying the two-sided Bezout identity.
#[derive(Clone, Debug)]
pub struct CoprimeData {
    pub n_hat: RationalMatrix,
    pub m_hat: RationalMatrix,
    pub n_tilde: RationalMatrix,
    pub m_tilde: RationalMatrix,
    pub x_tilde: RationalMatrix,
    pub y_tilde: RationalMatrix,
    pub x_hat: RationalMatrix,
    pub y_hat: RationalMatrix,
}

/// Build the coprime family and verify its defining identities at the
/// deterministic sample points.
pub fn doubly_coprime() -> Result<CoprimeData, RobustError> {
    let AllPass { b1, b3, .. } = all_pass();
    let (f, g) = fg_pair();
    let zero = ScalarRational::zero();

    let n_hat = mat2(zero.clone(), b1.clone(), b3.clone(), zero.clone());
    let n_tilde = n_hat.clone();
    let m_hat = RationalMatrix::diagonal(vec![b1.clone(), b3.clone()]);
    let m_tilde = RationalMatrix::diagonal(vec![b3.clone(), b1.clone()]);
    let x_tilde = mat2(f.clone(), -&b1, -&b3, g.clone());
    let y_tilde = -&mat2(b3.clone(), g.clone(), f.clone(), b1.clone());
    let x_hat = mat2(g.clone(), -&b1, -&b3, f.clone());
    let y_hat = -&mat2(b1.clone(), g.clone(), f.clone(), b3.clone());

    let cd = CoprimeData { n_hat, m_hat, n_tilde, m_tilde, x_tilde, y_tilde, x_hat, y_hat };
    for (name, m) in [
        ("n_hat", &cd.n_hat),
        ("m_hat", &cd.m_hat),
        ("m_tilde", &cd.m_tilde),
        ("x_tilde", &cd.x_tilde),
        ("y_tilde", &cd.y_tilde),
        ("x_hat", &cd.x_hat),
        ("y_hat", &cd.y_hat),
    ] {
        if !m.is_stable_proper() {
            return Err(RobustError::NotStableProper { what: name.into() });
        }
    }

    let left = RationalMatrix::from_blocks(&[
        &[&cd.x_tilde, &-&cd.y_tilde],
        &[&-&cd.n_tilde, &cd.m_tilde],
    ])?;
    let right = RationalMatrix::from_blocks(&[&[&cd.m_hat, &cd.y_hat], &[&cd.n_hat, &cd.x_hat]])?;
    let corner = corner_block();
    for s in sample_points() {
        let (l, r) = (left.eval(s)?, right.eval(s)?);
        let dev = (&l * &r - CMat::identity(4, 4)).norm();
        if dev > IDENTITY_TOL * (1.0 + l.norm() * r.norm()) {
            return Err(RobustError::IdentityViolation {
                what: "two-sided Bezout identity".into(),
                deviation: dev,
            });
        }
        let (c, mh, mt) = (corner.eval(s)?, cd.m_hat.eval(s)?, cd.m_tilde.eval(s)?);
        let dev = (&c * &mh - cd.n_hat.eval(s)?)
            .norm()
            .max((&mt * &c - cd.n_tilde.eval(s)?).norm());
        if dev > IDENTITY_TOL * (1.0 + c.norm()) {
            return Err(RobustError::IdentityViolation {
                what: "corner factorization".into(),
                deviation: dev,
            });
        }
    }
    Ok(cd)
}

/// The plant corner [[0, b1/b3], [b3/b1, 0]].
fn corner_block() -> RationalMatrix {
    let AllPass { b1, b3, .. } = all_pass();
    let zero = ScalarRational::zero();
    mat2(
        zero.clone(),
        &b1 * &b3.recip().expect("nonzero all-pass"),
        &b3 * &b1.recip().expect("nonzero all-pass"),
        zero,
    )
}

fn require_real(name: &'static str, z: Complex64) -> Result<f64, RobustError> {
    if z.im != 0.0 {
        return Err(RobustError::NonRealParameter { name, im: z.im });
    }
    Ok(z.re)
}

/// The model-matching data (T1, T2, T3) of the reduced problem, as rational
/// matrices over the half-plane. Real parameters only; the disc reduction
/// below accepts complex ones pointwise.
pub fn build_t(
    a: Complex64,
    c: Complex64,
) -> Result<(RationalMatrix, ScalarRational, ScalarRational), RobustError> {
    if c.norm() == 0.0 {
        return Err(RobustError::ZeroParameter);
    }
    let ar = require_real("a", a)?;
    let cr = require_real("c", c)?;
    let AllPass { b1, b3, br3 } = all_pass();
    let t1 = mat2(ScalarRational::zero(), b1.clone(), b3.scale(ar), br3.scale(cr));
    Ok((t1, b1, b3))
}

/// T1 evaluated pointwise; supports complex parameters.
fn t1_at(ap: &AllPass, s: Complex64, a: Complex64, c: Complex64) -> Result<Matrix2, RobustError> {
    Ok(Matrix2::new(
        Complex64::new(0.0, 0.0),
        ap.b1.eval(s)?,
        a * ap.b3.eval(s)?,
        c * ap.br3.eval(s)?,
    ))
}

fn t1_at_infinity(a: Complex64, c: Complex64) -> Matrix2 {
    Matrix2::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), a, c)
}

/// Closed-form solvability criterion |c| < 1/(4 - 2 sqrt(3)).
pub fn robust_criterion(c: Complex64) -> bool {
    c.norm() < 1.0 / (4.0 - 2.0 * 3.0f64.sqrt())
}

/// Reduce the matching problem to two-point disc interpolation: nodes at
/// the Cayley preimages of the scalar-factor zeros, targets the values of
/// T1 there.
///
/// The simplification b_sqrt3(1) = sqrt(3) - 2 baked into the first target
/// is re-verified numerically before use.
pub fn to_disc_problem(a: Complex64, c: Complex64) -> Result<SpectralProblem, RobustError> {
    if c.norm() == 0.0 {
        return Err(RobustError::ZeroParameter);
    }
    let ap = all_pass();
    let pinned = Complex64::new(3.0f64.sqrt() - 2.0, 0.0);
    let dev = (ap.br3.eval(Complex64::new(1.0, 0.0))? - pinned).norm();
    if dev > 1e-12 {
        return Err(RobustError::IdentityViolation {
            what: "all-pass value pinned at the first node".into(),
            deviation: dev,
        });
    }
    let s_points = [Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
    let nodes = vec![cayley_inv(s_points[0])?, cayley_inv(s_points[1])?];
    let targets = vec![t1_at(&ap, s_points[0], a, c)?, t1_at(&ap, s_points[1], a, c)?];
    Ok(SpectralProblem::new(nodes, targets))
}

/// Pointwise evaluator for the free Youla parameter
/// Q = (T1 - F o kappa^{-1}) / (b1 b3).
///
/// F is a disc interpolant matching T1 at the reduction nodes, which makes
/// the two zeros of b1 b3 removable; those two points are evaluated by
/// symmetric real offsets. The zero parameter (Q identically 0) has its own
/// constructor for the central controller.
pub struct QEvaluator {
    f: Option<MatrixEval>,
    q_inf: Matrix2,
    a: Complex64,
    c: Complex64,
    ap: AllPass,
}

impl QEvaluator {
    /// The zero parameter.
    pub fn zero() -> Self {
        QEvaluator {
            f: None,
            q_inf: Matrix2::zeros(),
            a: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            ap: all_pass(),
        }
    }

    /// Value at infinity, taken along the real axis.
    pub fn at_infinity(&self) -> Matrix2 {
        self.q_inf
    }

    fn eval_direct(&self, s: Complex64) -> Result<Matrix2, RobustError> {
        let f = self.f.as_ref().expect("direct evaluation requires an interpolant");
        let lambda = cayley_inv(s)?;
        let numerator = t1_at(&self.ap, s, self.a, self.c)? - f(lambda)?;
        let den = self.ap.b1.eval(s)? * self.ap.b3.eval(s)?;
        if den.norm() < 1e-14 {
            return Err(RobustError::SingularFactor { what: format!("b1 b3 at s = {s}") });
        }
        Ok(numerator / den)
    }

    pub fn eval(&self, s: Complex64) -> Result<Matrix2, RobustError> {
        if self.f.is_none() {
            return Ok(Matrix2::zeros());
        }
        let near_zero = (s - Complex64::new(1.0, 0.0))
            .norm()
            .min((s - Complex64::new(3.0, 0.0)).norm());
        if near_zero < 1e-8 {
            let right = self.eval_direct(s + SINGULARITY_OFFSET)?;
            let left = self.eval_direct(s - SINGULARITY_OFFSET)?;
            let scale = 1.0 + right.norm().max(left.norm());
            let dev = (right - left).norm();
            if dev > OFFSET_AGREEMENT * scale {
                return Err(RobustError::IdentityViolation {
                    what: format!("offset agreement at the removable singularity s = {s}"),
                    deviation: dev,
                });
            }
            return Ok((right + left) * Complex64::new(0.5, 0.0));
        }
        self.eval_direct(s)
    }
}

/// Build the Youla parameter from a disc interpolant.
///
/// Checks that F matches T1 at the two reduction nodes (so the quotient's
/// singularities are removable) and that F(1), taken radially, keeps the
/// closed-loop invertibility condition nonsingular.
pub fn build_q(f: MatrixEval, a: Complex64, c: Complex64) -> Result<QEvaluator, RobustError> {
    let ap = all_pass();
    let checks = [
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), "first"),
        (Complex64::new(0.5, 0.0), Complex64::new(3.0, 0.0), "second"),
    ];
    for (lambda, s, which) in checks {
        let target = t1_at(&ap, s, a, c)?;
        let dev = (f(lambda)? - target).norm();
        if dev > NUMERATOR_TOL * (1.0 + target.norm()) {
            return Err(RobustError::PreconditionViolated {
                what: format!("quotient numerator must vanish at the {which} node"),
                deviation: dev,
            });
        }
    }
    let f_at_one = f(Complex64::new(RADIAL_POINT, 0.0))?;
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let shift = Matrix2::new(
        Complex64::new(-1.0, 0.0),
        third,
        -third - a,
        -Complex64::new(1.0, 0.0) - c,
    );
    let gate = f_at_one + shift;
    let det = gate[(0, 0)] * gate[(1, 1)] - gate[(0, 1)] * gate[(1, 0)];
    if det.norm() <= 1e-8 * (1.0 + gate.norm() * gate.norm()) {
        return Err(RobustError::SingularFactor {
            what: "closed-loop invertibility gate F(1) + shift".into(),
        });
    }
    let q_inf = t1_at_infinity(a, c) - f_at_one;
    Ok(QEvaluator { f: Some(f), q_inf, a, c, ap })
}

/// Controller K = (y_hat - m_hat Q)(x_hat - n_hat Q)^{-1}, with the dual
/// form (x_tilde - Q n_tilde)^{-1}(y_tilde - Q m_tilde) cross-checked at
/// the sample points during construction.
pub struct ControllerEvaluator {
    cd: CoprimeData,
    q: QEvaluator,
}

impl ControllerEvaluator {
    pub fn eval(&self, s: Complex64) -> Result<Matrix2, RobustError> {
        let qv = self.q.eval(s)?;
        let num = m2(&self.cd.y_hat.eval(s)?) - m2(&self.cd.m_hat.eval(s)?) * qv;
        let den = m2(&self.cd.x_hat.eval(s)?) - m2(&self.cd.n_hat.eval(s)?) * qv;
        let inv = den
            .try_inverse()
            .ok_or_else(|| RobustError::SingularFactor { what: format!("x_hat - n_hat Q at s = {s}") })?;
        Ok(num * inv)
    }

    fn eval_dual(&self, s: Complex64) -> Result<Matrix2, RobustError> {
        let qv = self.q.eval(s)?;
        let left = m2(&self.cd.x_tilde.eval(s)?) - qv * m2(&self.cd.n_tilde.eval(s)?);
        let right = m2(&self.cd.y_tilde.eval(s)?) - qv * m2(&self.cd.m_tilde.eval(s)?);
        let inv = left
            .try_inverse()
            .ok_or_else(|| RobustError::SingularFactor { what: format!("x_tilde - Q n_tilde at s = {s}") })?;
        Ok(inv * right)
    }

    pub fn parameter(&self) -> &QEvaluator {
        &self.q
    }
}

/// Assemble the controller for a given parameter and verify its two Youla
/// forms agree at the sample points.
pub fn build_controller(q: QEvaluator) -> Result<ControllerEvaluator, RobustError> {
    let cd = doubly_coprime()?;
    let x_inf = m2(&cd.x_hat.eval_at_infinity()?);
    let n_inf = m2(&cd.n_hat.eval_at_infinity()?);
    let gate = x_inf - n_inf * q.at_infinity();
    let det = gate[(0, 0)] * gate[(1, 1)] - gate[(0, 1)] * gate[(1, 0)];
    if det.norm() <= 1e-10 * (1.0 + gate.norm() * gate.norm()) {
        return Err(RobustError::SingularFactor {
            what: "x_hat - n_hat Q at infinity".into(),
        });
    }
    let k = ControllerEvaluator { cd, q };
    for s in sample_points() {
        let (primary, dual) = (k.eval(s)?, k.eval_dual(s)?);
        let dev = (primary - dual).norm();
        if dev > IDENTITY_TOL * (1.0 + primary.norm()) {
            return Err(RobustError::IdentityViolation {
                what: "agreement of the two controller forms".into(),
                deviation: dev,
            });
        }
    }
    Ok(k)
}

/// Result of the boundary spectral-radius sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RobustReport {
    pub sup_radius: f64,
    pub pass: bool,
}

/// Sweep r((T1 - b1 b3 Q)(s)) over a logarithmic boundary grid plus the
/// point at infinity; analyticity in the half-plane makes the boundary
/// supremum dominate the interior.
pub fn verify_robust(
    q: &QEvaluator,
    a: Complex64,
    c: Complex64,
    grid_size: usize,
) -> Result<RobustReport, RobustError> {
    let ap = all_pass();
    let n = grid_size.max(2);
    let mut sup = 0.0f64;
    for i in 0..n {
        let omega = 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64);
        let s = Complex64::new(0.0, omega);
        let value = t1_at(&ap, s, a, c)?
            - q.eval(s)? * (ap.b1.eval(s)? * ap.b3.eval(s)?);
        sup = sup.max(spectral_radius(&value));
    }
    let at_inf = t1_at_infinity(a, c) - q.at_infinity();
    sup = sup.max(spectral_radius(&at_inf));
    Ok(RobustReport { sup_radius: sup, pass: sup < 1.0 - SUP_MARGIN })
}

/// Assemble the full 6x6 plant from the corner data and five free stable
/// proper 2x2 blocks (defaulting to identities).
pub fn assemble_plant(
    a: Complex64,
    c: Complex64,
    r: Option<[RationalMatrix; 5]>,
) -> Result<RationalMatrix, RobustError> {
    if c.norm() == 0.0 {
        return Err(RobustError::ZeroParameter);
    }
    let ar = require_real("a", a)?;
    let cr = require_real("c", c)?;
    let r = r.unwrap_or_else(|| std::array::from_fn(|_| RationalMatrix::identity(2)));
    let names = ["r12", "r21", "r22", "r23", "r32"];
    for (m, name) in r.iter().zip(names) {
        if (m.rows(), m.cols()) != (2, 2) {
            return Err(PolyError::ShapeMismatch {
                message: format!("free block {name} must be 2x2"),
            }
            .into());
        }
        if !m.is_stable_proper() {
            return Err(RobustError::NotStableProper { what: name.into() });
        }
    }
    let [r12, r21, r22, r23, r32] = r;
    let AllPass { b1, b3, br3 } = all_pass();
    let (f, g) = fg_pair();
    let zero = ScalarRational::zero();
    let one = ScalarRational::one();
    let b1_over_b3 = &b1 * &b3.recip().expect("nonzero all-pass");
    let b3_over_b1 = &b3 * &b1.recip().expect("nonzero all-pass");

    let g11 = mat2(
        &b1 * &b3,
        &b1 + &(&g * &b3),
        &b3.scale(ar) + &(&f * &b1),
        &br3.scale(cr) + &(&b1 * &b3),
    );
    let g13 = RationalMatrix::diagonal(vec![one.clone(), b1_over_b3.clone()]);
    let g31 = RationalMatrix::diagonal(vec![one.clone(), b3_over_b1.clone()]);
    let g33 = mat2(zero.clone(), b1_over_b3, b3_over_b1, zero.clone());

    let g12 = &r12 + &(&mat2(zero.clone(), g.clone(), &f * &(&b1 * &b3.recip().expect("nonzero")), zero.clone()) * &r32);
    let g21 = &r21 + &(&r23 * &mat2(zero.clone(), &g * &(&b3 * &b1.recip().expect("nonzero")), zero.clone(), zero.clone()));
    let g22 = &r22
        + &(&(&r23
            * &mat2(
                zero.clone(),
                &g * &b1.recip().expect("nonzero"),
                &f * &b3.recip().expect("nonzero"),
                zero.clone(),
            ))
            * &r32);
    let g23 = &r23 * &RationalMatrix::diagonal(vec![
        b1.recip().expect("nonzero"),
        b3.recip().expect("nonzero"),
    ]);
    let g32 = &RationalMatrix::diagonal(vec![
        b3.recip().expect("nonzero"),
        b1.recip().expect("nonzero"),
    ]) * &r32;

    Ok(RationalMatrix::from_blocks(&[
        &[&g11, &g12, &g13],
        &[&g21, &g22, &g23],
        &[&g31, &g32, &g33],
    ])?)
}

fn block2(g: &RationalMatrix, bi: usize, bj: usize) -> RationalMatrix {
    let mut out = RationalMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            out.set_entry(i, j, g.entry(2 * bi + i, 2 * bj + j).clone());
        }
    }
    out
}

/// Verify that the assembled plant is stabilized by the central controller:
/// the closed-loop block matrix, premultiplied by the inverse of the
/// right-factor denominator, must equal an explicitly stable proper target
/// at every sample point, and the target itself must be pole-free in the
/// closed right half-plane.
///
/// Checked in the multiplicative form target * loop = diag(m_inverse, I),
/// which avoids inverting the 8x8 loop matrix.
pub fn verify_plant_stabilizable(
    g: &RationalMatrix,
    cd: &CoprimeData,
) -> Result<bool, RobustError> {
    if (g.rows(), g.cols()) != (6, 6) {
        return Err(PolyError::ShapeMismatch {
            message: format!("plant must be 6x6, got {}x{}", g.rows(), g.cols()),
        }
        .into());
    }
    let g31 = block2(g, 2, 0);
    let g32 = block2(g, 2, 1);
    let g33 = block2(g, 2, 2);
    let AllPass { b1, b3, .. } = all_pass();
    let (f, g_fn) = fg_pair();
    let r32 = &RationalMatrix::diagonal(vec![b3.clone(), b1.clone()]) * &g32;
    let zero = ScalarRational::zero();

    let e1 = mat2(zero.clone(), (&g_fn * &b3).scale(-1.0), zero.clone(), zero.clone());
    let e2 = &(-&mat2(zero.clone(), g_fn.clone(), f.clone(), zero.clone())) * &r32;
    let id2 = RationalMatrix::identity(2);
    let z2 = RationalMatrix::zeros(2, 2);
    let m_factor = RationalMatrix::from_blocks(&[
        &[&id2, &z2, &z2],
        &[&z2, &id2, &z2],
        &[&e1, &e2, &cd.m_hat],
    ])?;

    let loop_matrix = RationalMatrix::from_blocks(&[
        &[&id2, &z2, &z2, &z2],
        &[&z2, &id2, &z2, &z2],
        &[&z2, &z2, &id2, &cd.y_hat],
        &[&g31, &g32, &g33, &cd.x_hat],
    ])?;

    let corner_left = -&mat2(b3.clone(), zero.clone(), f.clone(), b3.clone());
    let b3_block = -&RationalMatrix::diagonal(vec![b3.clone(), b3.clone()]);
    let neg_r32 = -&r32;
    let target = RationalMatrix::from_blocks(&[
        &[&id2, &z2, &z2, &z2],
        &[&z2, &id2, &z2, &z2],
        &[&corner_left, &neg_r32, &cd.x_tilde, &-&cd.y_tilde],
        &[&b3_block, &neg_r32, &-&cd.n_tilde, &cd.m_tilde],
    ])?;

    if !target.is_stable_proper() {
        return Ok(false);
    }
    for s in sample_points() {
        let m_inv = match m_factor.eval(s)?.try_inverse() {
            Some(inv) => inv,
            None => return Ok(false),
        };
        let mut expected = CMat::identity(8, 8);
        for i in 0..6 {
            for j in 0..6 {
                expected[(i, j)] = m_inv[(i, j)];
            }
        }
        let product = &target.eval(s)? * &loop_matrix.eval(s)?;
        let dev = (product - &expected).norm();
        if dev > IDENTITY_TOL * (1.0 + expected.norm()) {
            return Ok(false);
        }
    }
    Ok(true)
}
