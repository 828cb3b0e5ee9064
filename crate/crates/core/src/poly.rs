//! Real-coefficient polynomials and rational matrix functions of a
//! half-plane variable.
//!
//! Coefficient-based arithmetic for the control-theoretic pipeline: ratios
//! are stored reduced (common factors cancelled by root matching) with monic
//! denominators, poles and zeros come from companion-matrix eigenvalues, and
//! stability queries reduce to root locations. Degrees in this crate stay in
//! the single digits, so coefficient arithmetic is exact to roundoff and no
//! symbolic normalization is needed. Serialization is plain coefficient
//! arrays per entry.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMat;

/// Trailing coefficients below this relative threshold are trimmed.
const TRIM_TOL: f64 = 1e-12;

/// Root-matching tolerance for cancelling common factors of a ratio.
const REDUCE_TOL: f64 = 1e-9;

/// A denominator root with real part at or above this bound disqualifies
/// membership in the stable proper class.
const STABILITY_MARGIN: f64 = -1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PolyError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value at infinity is unbounded (numerator degree exceeds denominator degree)")]
    ImproperAtInfinity,
    #[error("evaluation at a pole (|den| = {magnitude:.3e})")]
    PoleAt { magnitude: f64 },
    #[error("matrix shape mismatch: {message}")]
    ShapeMismatch { message: String },
    #[error("root product is not a real polynomial (imaginary residue {residue:.3e})")]
    NotReal { residue: f64 },
}

/// Polynomial with real coefficients stored in ascending degree order.
///
/// The zero polynomial is the empty coefficient list; constructors trim
/// trailing coefficients that are negligible relative to the largest one, so
/// the last stored coefficient is always meaningfully nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for RealPolynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        RealPolynomial::new(coeffs)
    }
}

impl From<RealPolynomial> for Vec<f64> {
    fn from(p: RealPolynomial) -> Self {
        p.coeffs
    }
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        while let Some(&last) = coeffs.last() {
            if last.abs() <= TRIM_TOL * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        RealPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RealPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        RealPolynomial { coeffs: vec![1.0] }
    }

    pub fn constant(x: f64) -> Self {
        RealPolynomial::new(vec![x])
    }

    /// The affine polynomial c0 + c1 s.
    pub fn linear(c0: f64, c1: f64) -> Self {
        RealPolynomial::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient, zero for the zero polynomial.
    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Upper bound sum |c_i| |s|^i used for relative pole tests.
    fn eval_scale(&self, s: Complex64) -> f64 {
        let r = s.norm();
        let mut acc = 0.0f64;
        for &c in self.coeffs.iter().rev() {
            acc = acc * r + c.abs();
        }
        acc
    }

    pub fn scale(&self, x: f64) -> Self {
        RealPolynomial::new(self.coeffs.iter().map(|c| c * x).collect())
    }

    /// All complex roots, with multiplicity.
    ///
    /// Degrees one and two use closed forms (exact for double roots), higher
    /// degrees the eigenvalues of the real companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = match self.degree() {
            None | Some(0) => return Vec::new(),
            Some(n) => n,
        };
        if n == 1 {
            return vec![Complex64::new(-self.coeffs[0] / self.coeffs[1], 0.0)];
        }
        if n == 2 {
            return quadratic_roots(self.coeffs[2], self.coeffs[1], self.coeffs[0]).to_vec();
        }
        let lead = self.coeffs[n];
        let companion = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if j == n - 1 {
                -self.coeffs[i] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        companion.complex_eigenvalues().iter().copied().collect()
    }

    /// Reconstruct leading * prod (s - r_j); the roots must be closed under
    /// conjugation up to roundoff or the product is rejected.
    pub fn from_roots(leading: f64, roots: &[Complex64]) -> Result<Self, PolyError> {
        let mut acc = vec![Complex64::new(leading, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &a) in acc.iter().enumerate() {
                next[i] -= a * r;
                next[i + 1] += a;
            }
            acc = next;
        }
        let scale = acc.iter().fold(1.0f64, |m, c| m.max(c.norm()));
        let residue = acc.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if residue > 1e-9 * scale {
            return Err(PolyError::NotReal { residue });
        }
        Ok(RealPolynomial::new(acc.iter().map(|c| c.re).collect()))
    }
}

/// Roots of a x^2 + b x + c with real coefficients, cancellation-free.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b / a;
        let im = 0.5 * (-disc).sqrt() / a;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

impl std::ops::Add for &RealPolynomial {
    type Output = RealPolynomial;

    fn add(self, rhs: &RealPolynomial) -> RealPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0.0; len];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in rhs.coeffs.iter().enumerate() {
            out[i] += c;
        }
        RealPolynomial::new(out)
    }
}

impl std::ops::Sub for &RealPolynomial {
    type Output = RealPolynomial;

    fn sub(self, rhs: &RealPolynomial) -> RealPolynomial {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &RealPolynomial {
    type Output = RealPolynomial;

    fn neg(self) -> RealPolynomial {
        self.scale(-1.0)
    }
}

impl std::ops::Mul for &RealPolynomial {
    type Output = RealPolynomial;

    fn mul(self, rhs: &RealPolynomial) -> RealPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return RealPolynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPolynomial::new(out)
    }
}

/// Ratio of real polynomials, stored reduced with a monic denominator.
///
/// Reduction matches denominator roots against numerator roots and cancels
/// pairs within a relative tolerance; clustered multiple roots beyond degree
/// two may evade the match, which leaves the ratio unreduced but still
/// correct as a function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "schema::RationalJson", into = "schema::RationalJson")]
pub struct ScalarRational {
    num: RealPolynomial,
    den: RealPolynomial,
}

impl ScalarRational {
    pub fn new(num: RealPolynomial, den: RealPolynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        let (num, den) = reduce(num, den);
        let lead = den.leading();
        Ok(ScalarRational { num: num.scale(1.0 / lead), den: den.scale(1.0 / lead) })
    }

    pub fn from_poly(num: RealPolynomial) -> Self {
        ScalarRational { num, den: RealPolynomial::one() }
    }

    pub fn zero() -> Self {
        ScalarRational::from_poly(RealPolynomial::zero())
    }

    pub fn one() -> Self {
        ScalarRational::from_poly(RealPolynomial::one())
    }

    pub fn constant(x: f64) -> Self {
        ScalarRational::from_poly(RealPolynomial::constant(x))
    }

    pub fn num(&self) -> &RealPolynomial {
        &self.num
    }

    pub fn den(&self) -> &RealPolynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Evaluation; errors at points where the denominator vanishes
    /// relative to its coefficient size.
    pub fn eval(&self, s: Complex64) -> Result<Complex64, PolyError> {
        let den = self.den.eval(s);
        let scale = self.den.eval_scale(s).max(f64::MIN_POSITIVE);
        if den.norm() < 1e-12 * scale {
            return Err(PolyError::PoleAt { magnitude: den.norm() });
        }
        Ok(self.num.eval(s) / den)
    }

    /// Limit along the real axis at infinity; errors when improper.
    pub fn eval_at_infinity(&self) -> Result<Complex64, PolyError> {
        if self.num.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (nd, dd) = (self.num.degree().unwrap_or(0), self.den.degree().unwrap_or(0));
        match nd.cmp(&dd) {
            std::cmp::Ordering::Greater => Err(PolyError::ImproperAtInfinity),
            std::cmp::Ordering::Less => Ok(Complex64::new(0.0, 0.0)),
            std::cmp::Ordering::Equal => {
                Ok(Complex64::new(self.num.leading() / self.den.leading(), 0.0))
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero()
            || self.num.degree().unwrap_or(0) <= self.den.degree().unwrap_or(0)
    }

    /// Stable-proper membership: proper and no pole with real part above
    /// the stability margin.
    pub fn is_stable_proper(&self) -> bool {
        self.is_proper() && self.poles().iter().all(|p| p.re < STABILITY_MARGIN)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    /// The reciprocal ratio; errors on the zero function.
    pub fn recip(&self) -> Result<ScalarRational, PolyError> {
        ScalarRational::new(self.den.clone(), self.num.clone())
    }

    pub fn scale(&self, x: f64) -> Self {
        ScalarRational { num: self.num.scale(x), den: self.den.clone() }
    }
}

/// Cancel matched numerator/denominator root pairs.
///
/// Greedy nearest matching with a relative tolerance; when a cancellation is
/// found both polynomials are rebuilt from their surviving roots, otherwise
/// the inputs pass through untouched so no precision is spent.
fn reduce(num: RealPolynomial, den: RealPolynomial) -> (RealPolynomial, RealPolynomial) {
    if num.is_zero() {
        return (RealPolynomial::zero(), RealPolynomial::one());
    }
    let nroots = num.roots();
    let droots = den.roots();
    if nroots.is_empty() || droots.is_empty() {
        return (num, den);
    }
    let mut used = vec![false; nroots.len()];
    let mut keep_d: Vec<Complex64> = Vec::new();
    let mut cancelled = false;
    for &r in &droots {
        let mut best: Option<(usize, f64)> = None;
        for (i, nr) in nroots.iter().enumerate() {
            if used[i] {
                continue;
            }
            let dist = (nr - r).norm();
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, dist)) if dist <= REDUCE_TOL * (1.0 + r.norm()) => {
                used[i] = true;
                cancelled = true;
            }
            _ => keep_d.push(r),
        }
    }
    if !cancelled {
        return (num, den);
    }
    let keep_n: Vec<Complex64> = nroots
        .iter()
        .zip(used.iter())
        .filter(|(_, &u)| !u)
        .map(|(&r, _)| r)
        .collect();
    match (
        RealPolynomial::from_roots(num.leading(), &keep_n),
        RealPolynomial::from_roots(den.leading(), &keep_d),
    ) {
        (Ok(n2), Ok(d2)) if !d2.is_zero() => (n2, d2),
        // Asymmetric cancellation broke conjugate pairing; keep the
        // unreduced but correct form.
        _ => (num, den),
    }
}

impl std::ops::Add for &ScalarRational {
    type Output = ScalarRational;

    fn add(self, rhs: &ScalarRational) -> ScalarRational {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        ScalarRational::new(num, &self.den * &rhs.den).expect("nonzero denominators")
    }
}

impl std::ops::Sub for &ScalarRational {
    type Output = ScalarRational;

    fn sub(self, rhs: &ScalarRational) -> ScalarRational {
        self + &rhs.scale(-1.0)
    }
}

impl std::ops::Neg for &ScalarRational {
    type Output = ScalarRational;

    fn neg(self) -> ScalarRational {
        self.scale(-1.0)
    }
}

impl std::ops::Mul for &ScalarRational {
    type Output = ScalarRational;

    fn mul(self, rhs: &ScalarRational) -> ScalarRational {
        ScalarRational::new(&self.num * &rhs.num, &self.den * &rhs.den)
            .expect("nonzero denominators")
    }
}

/// Rectangular matrix of rational functions, row major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "schema::MatrixJson", into = "schema::MatrixJson")]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ScalarRational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<ScalarRational>) -> Result<Self, PolyError> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(PolyError::ShapeMismatch {
                message: format!("{} entries for a {rows}x{cols} matrix", entries.len()),
            });
        }
        Ok(RationalMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, entries: vec![ScalarRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = RationalMatrix::zeros(n, n);
        for i in 0..n {
            out.set_entry(i, i, ScalarRational::one());
        }
        out
    }

    pub fn diagonal(entries: Vec<ScalarRational>) -> Self {
        let n = entries.len();
        let mut out = RationalMatrix::zeros(n, n);
        for (i, e) in entries.into_iter().enumerate() {
            out.set_entry(i, i, e);
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarRational {
        &self.entries[i * self.cols + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, value: ScalarRational) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Self {
        let mut out = RationalMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set_entry(j, i, self.entry(i, j).clone());
            }
        }
        out
    }

    /// Entrywise product with a scalar ratio.
    pub fn scale_rational(&self, f: &ScalarRational) -> Self {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * f).collect(),
        }
    }

    pub fn eval(&self, s: Complex64) -> Result<CMat, PolyError> {
        let mut out = CMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.entry(i, j).eval(s)?;
            }
        }
        Ok(out)
    }

    pub fn eval_at_infinity(&self) -> Result<CMat, PolyError> {
        let mut out = CMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.entry(i, j).eval_at_infinity()?;
            }
        }
        Ok(out)
    }

    pub fn is_stable_proper(&self) -> bool {
        self.entries.iter().all(|e| e.is_stable_proper())
    }

    /// Assemble from a grid of conforming blocks.
    pub fn from_blocks(blocks: &[&[&RationalMatrix]]) -> Result<Self, PolyError> {
        if blocks.is_empty() || blocks[0].is_empty() {
            return Err(PolyError::ShapeMismatch { message: "empty block grid".into() });
        }
        let ncols: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        let total_cols: usize = ncols.iter().sum();
        let mut rows_out: Vec<ScalarRational> = Vec::new();
        let mut total_rows = 0;
        for row in blocks {
            if row.len() != ncols.len() {
                return Err(PolyError::ShapeMismatch { message: "ragged block grid".into() });
            }
            let height = row[0].rows;
            for (b, &w) in row.iter().zip(ncols.iter()) {
                if b.rows != height || b.cols != w {
                    return Err(PolyError::ShapeMismatch {
                        message: format!("block of shape {}x{} does not conform", b.rows, b.cols),
                    });
                }
            }
            for r in 0..height {
                for b in row.iter() {
                    for c in 0..b.cols {
                        rows_out.push(b.entry(r, c).clone());
                    }
                }
            }
            total_rows += height;
        }
        RationalMatrix::new(total_rows, total_cols, rows_out).map(|m| {
            debug_assert_eq!(m.cols, total_cols);
            m
        })
    }
}

impl std::ops::Add for &RationalMatrix {
    type Output = RationalMatrix;

    fn add(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix addition shapes");
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(rhs.entries.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl std::ops::Sub for &RationalMatrix {
    type Output = RationalMatrix;

    fn sub(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix subtraction shapes");
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(rhs.entries.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl std::ops::Neg for &RationalMatrix {
    type Output = RationalMatrix;

    fn neg(self) -> RationalMatrix {
        self.scale_rational(&ScalarRational::constant(-1.0))
    }
}

impl std::ops::Mul for &RationalMatrix {
    type Output = RationalMatrix;

    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shapes");
        let mut out = RationalMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = ScalarRational::zero();
                for k in 0..self.cols {
                    acc = &acc + &(self.entry(i, k) * rhs.entry(k, j));
                }
                out.set_entry(i, j, acc);
            }
        }
        out
    }
}

mod schema {
    use serde::{Deserialize, Serialize};

    use super::{PolyError, RationalMatrix, RealPolynomial, ScalarRational};

    #[derive(Serialize, Deserialize)]
    pub(super) struct RationalJson {
        pub num: Vec<f64>,
        pub den: Vec<f64>,
    }

    impl TryFrom<RationalJson> for ScalarRational {
        type Error = PolyError;

        fn try_from(raw: RationalJson) -> Result<Self, PolyError> {
            ScalarRational::new(RealPolynomial::new(raw.num), RealPolynomial::new(raw.den))
        }
    }

    impl From<ScalarRational> for RationalJson {
        fn from(r: ScalarRational) -> Self {
            RationalJson { num: r.num.coeffs().to_vec(), den: r.den.coeffs().to_vec() }
        }
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct MatrixJson {
        pub rows: usize,
        pub cols: usize,
        pub entries: Vec<ScalarRational>,
    }

    impl TryFrom<MatrixJson> for RationalMatrix {
        type Error = PolyError;

        fn try_from(raw: MatrixJson) -> Result<Self, PolyError> {
            RationalMatrix::new(raw.rows, raw.cols, raw.entries)
        }
    }

    impl From<RationalMatrix> for MatrixJson {
        fn from(m: RationalMatrix) -> Self {
            MatrixJson { rows: m.rows, cols: m.cols, entries: m.entries }
        }
    }
}
