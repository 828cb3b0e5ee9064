//! Geometry of the symmetrized bidisc.
//!
//! The closed symmetrized bidisc is the set of pairs (s, p) = (z + w, zw)
//! with |z| <= 1 and |w| <= 1; a 2x2 matrix has spectral radius at most one
//! exactly when its (trace, determinant) pair lies in this set. This module
//! provides membership tests, the one-parameter family of "magic" fractional
//! maps that linearize the set, pseudo-hyperbolic distance, and recovery of
//! an (s, p) pair from sampled values of its magic-function slice.

use nalgebra::Matrix2 as SMatrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_least_squares, CMat, CVec};

/// 2x2 complex matrix used for interpolation targets.
pub type Matrix2 = SMatrix2<Complex64>;

/// Point of the unit disc (open or closed depending on documented context).
pub type DiscPoint = Complex64;

/// Default tolerance for membership tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A point (s, p) of the symmetrized-bidisc coordinate plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    /// Sum coordinate (trace of a representing matrix).
    pub s: Complex64,
    /// Product coordinate (determinant of a representing matrix).
    pub p: Complex64,
}

impl GammaPoint {
    pub fn new(s: Complex64, p: Complex64) -> Self {
        GammaPoint { s, p }
    }

    /// Symmetrization of an ordered disc pair: (z + w, zw).
    pub fn from_pair(z: Complex64, w: Complex64) -> Self {
        GammaPoint { s: z + w, p: z * w }
    }

    /// The two roots of x^2 - s x + p = 0, largest modulus first.
    pub fn roots(&self) -> (Complex64, Complex64) {
        roots_of_quadratic(self.s, self.p)
    }

    /// Modulus of the larger root; at most 1 exactly on membership.
    pub fn radius(&self) -> f64 {
        let (r1, r2) = self.roots();
        r1.norm().max(r2.norm())
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GammaError {
    #[error("magic-function denominator 2 - z*s vanishes (|2 - z*s| = {magnitude:.3e})")]
    SingularDenominator { magnitude: f64 },
    #[error("sampled slice is inconsistent with a fractional form (residual {residual:.3e})")]
    InconsistentSlice { residual: f64 },
    #[error("Cayley transform pole at the requested point")]
    CayleyPole,
}

/// (trace, determinant) of a 2x2 matrix.
pub fn trdet(w: &Matrix2) -> GammaPoint {
    GammaPoint {
        s: w[(0, 0)] + w[(1, 1)],
        p: w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)],
    }
}

/// Roots of x^2 - s x + p = 0 by the cancellation-stable branch choice.
///
/// The discriminant root is oriented so that s and sqrt(s^2 - 4p) never
/// cancel; the second root is recovered as p over the first.
fn roots_of_quadratic(s: Complex64, p: Complex64) -> (Complex64, Complex64) {
    let mut d = (s * s - 4.0 * p).sqrt();
    if (s.conj() * d).re < 0.0 {
        d = -d;
    }
    let q = (s + d) * Complex64::new(0.5, 0.0);
    if q.norm() < f64::EPSILON * (1.0 + s.norm() + p.norm().sqrt()) {
        // Only reachable when s ~ 0 and p ~ 0.
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let r2 = p / q;
    if q.norm() >= r2.norm() {
        (q, r2)
    } else {
        (r2, q)
    }
}

/// Spectral radius of a 2x2 matrix through its characteristic roots.
pub fn spectral_radius(w: &Matrix2) -> f64 {
    trdet(w).radius()
}

/// The magic function (2 z p - s) / (2 - z s).
///
/// For fixed z in the closed unit disc this is a fractional map of (s, p)
/// whose modulus is at most one on the symmetrized bidisc. Errors when the
/// denominator is numerically singular, which happens only at the single
/// degenerate pair (s, p) = (2 conj(z), conj(z)^2) with |z| = 1.
pub fn magic_phi(z: Complex64, pt: GammaPoint) -> Result<Complex64, GammaError> {
    let den = Complex64::new(2.0, 0.0) - z * pt.s;
    if den.norm() < 1e-12 {
        return Err(GammaError::SingularDenominator { magnitude: den.norm() });
    }
    Ok((2.0 * z * pt.p - pt.s) / den)
}

/// Membership in the closed symmetrized bidisc, with tolerance on the root moduli.
pub fn in_gamma(pt: GammaPoint, tol: f64) -> bool {
    pt.radius() <= 1.0 + tol
}

/// Membership in the open symmetrized bidisc.
pub fn in_open_g(pt: GammaPoint, tol: f64) -> bool {
    pt.radius() < 1.0 - tol
}

/// Membership in the distinguished boundary (both roots unimodular).
pub fn in_bgamma(pt: GammaPoint, tol: f64) -> bool {
    (pt.p.norm() - 1.0).abs() <= tol
        && (pt.s - pt.s.conj() * pt.p).norm() <= tol
        && pt.s.norm() <= 2.0 + tol
}

/// Coordinate scaling (rho s, rho^2 p); maps radius-r points to radius rho*r.
///
/// Requires rho > 0.
pub fn scale_gamma(rho: f64, pt: GammaPoint) -> GammaPoint {
    debug_assert!(rho > 0.0);
    GammaPoint {
        s: rho * pt.s,
        p: rho * rho * pt.p,
    }
}

/// Pseudo-hyperbolic distance |l1 - l2| / |1 - conj(l2) l1| on the open disc.
pub fn pseudo_hyperbolic(l1: Complex64, l2: Complex64) -> f64 {
    (l1 - l2).norm() / (Complex64::new(1.0, 0.0) - l2.conj() * l1).norm()
}

/// Solvability of the antipodal two-point problem
/// h(l1) = (zeta, 0), h(l2) = (-zeta, 0) over bidisc-valued analytic h.
///
/// Solvable exactly when |zeta| is strictly below the pseudo-hyperbolic
/// distance of the nodes; equality is unsolvable.
pub fn two_point_antipodal_solvable(l1: Complex64, l2: Complex64, zeta: Complex64) -> bool {
    zeta.norm() < pseudo_hyperbolic(l1, l2)
}

/// Recover (s, p) from three sampled values of the slice z -> phi(z, s, p).
///
/// Cross-multiplying G(z) (2 - z s) = 2 z p - s turns the samples into the
/// linear system 2 z p + (z G(z) - 1) s = 2 G(z), solved in least squares.
/// Errors when the samples are inconsistent with any fractional slice.
pub fn recover_h_from_slice(z: &[Complex64; 3], g: &[Complex64; 3]) -> Result<GammaPoint, GammaError> {
    let mut rows = Vec::with_capacity(12);
    let mut rhs = Vec::with_capacity(6);
    for k in 0..3 {
        rows.push(2.0 * z[k]);
        rows.push(z[k] * g[k] - Complex64::new(1.0, 0.0));
        rhs.push(2.0 * g[k]);
    }
    let a = CMat::from_row_slice(3, 2, &rows);
    let b = CVec::from_vec(rhs);
    let sol = solve_least_squares(&a, &b, 1e-12);
    let residual = (&a * &sol - &b).norm();
    let scale = 1.0 + b.norm();
    if residual > 1e-8 * scale {
        return Err(GammaError::InconsistentSlice { residual });
    }
    Ok(GammaPoint { s: sol[1], p: sol[0] })
}

/// Cayley transform (1 + l) / (1 - l) from the disc to the right half-plane.
pub fn cayley(l: Complex64) -> Result<Complex64, GammaError> {
    let den = Complex64::new(1.0, 0.0) - l;
    if den.norm() < 1e-12 {
        return Err(GammaError::CayleyPole);
    }
    Ok((Complex64::new(1.0, 0.0) + l) / den)
}

/// Inverse Cayley transform (s - 1) / (s + 1) from the half-plane to the disc.
pub fn cayley_inv(s: Complex64) -> Result<Complex64, GammaError> {
    let den = s + Complex64::new(1.0, 0.0);
    if den.norm() < 1e-12 {
        return Err(GammaError::CayleyPole);
    }
    Ok((s - Complex64::new(1.0, 0.0)) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_disc(rng: &mut ChaCha8Rng, rmax: f64) -> Complex64 {
        use rand::Rng;
        let r = rmax * rng.random::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.random::<f64>();
        Complex64::from_polar(r, th)
    }

    #[test]
    fn trdet_examples() {
        let zero = Matrix2::zeros();
        let pt = trdet(&zero);
        assert_eq!(pt.s, c(0.0, 0.0));
        assert_eq!(pt.p, c(0.0, 0.0));

        let w = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        let pt = trdet(&w);
        assert_eq!(pt.s, c(0.0, 0.0));
        assert_eq!(pt.p, c(1.0, 0.0));
    }

    #[test]
    fn quadratic_roots_are_stable() {
        // Double root at s/2.
        let pt = GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0));
        let (r1, r2) = pt.roots();
        assert!((r1 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r2 - c(1.0, 0.0)).norm() < 1e-12);

        // Wildly split roots: x^2 - (1e8 + 1e-8) x + 1 has roots 1e8, 1e-8.
        let pt = GammaPoint::new(c(1e8 + 1e-8, 0.0), c(1.0, 0.0));
        let (r1, r2) = pt.roots();
        assert_abs_diff_eq!(r1.re, 1e8, epsilon = 1e-4);
        assert_abs_diff_eq!(r2.re, 1e-8, epsilon = 1e-20);
    }

    #[test]
    fn roots_of_three_one_leave_the_disc() {
        let pt = GammaPoint::new(c(3.0, 0.0), c(1.0, 0.0));
        let (r1, r2) = pt.roots();
        assert_abs_diff_eq!(r1.norm(), 2.618033988749895, epsilon = 1e-12);
        assert_abs_diff_eq!(r2.norm(), 0.38196601125010515, epsilon = 1e-12);
        assert!(!in_gamma(pt, DEFAULT_TOL));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_abs_diff_eq!(spectral_radius(&Matrix2::identity()), 1.0, epsilon = 1e-14);
        let nilpotent = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!(spectral_radius(&nilpotent), 0.0, epsilon = 1e-14);
        let rotation = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!(spectral_radius(&rotation), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn spectral_radius_matches_direct_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let (a, b) = (random_disc(&mut rng, 2.0), random_disc(&mut rng, 2.0));
            let (cc, d) = (random_disc(&mut rng, 2.0), random_disc(&mut rng, 2.0));
            let w = Matrix2::new(a, b, cc, d);
            // Direct eigenvalue formula on the entries.
            let half_tr = (a + d) * c(0.5, 0.0);
            let disc = (((a - d) * (a - d)) * c(0.25, 0.0) + b * cc).sqrt();
            let oracle = (half_tr + disc).norm().max((half_tr - disc).norm());
            assert_abs_diff_eq!(spectral_radius(&w), oracle, epsilon = 1e-9 * (1.0 + oracle));
        }
    }

    #[test]
    fn magic_phi_examples() {
        // At z = 0 the map reduces to -s/2.
        let pt = GammaPoint::new(c(1.0, 1.0), c(0.3, 0.0));
        assert!((magic_phi(c(0.0, 0.0), pt).unwrap() - c(-0.5, -0.5)).norm() < 1e-15);

        // Fixed value at the origin of the plane.
        let origin = GammaPoint::new(c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(magic_phi(c(0.7, 0.1), origin).unwrap(), c(0.0, 0.0));

        // Frozen value at z = 1 for the real pair (2 sqrt(3) - 4, 0).
        let s = 2.0 * 3.0f64.sqrt() - 4.0;
        let pt = GammaPoint::new(c(s, 0.0), c(0.0, 0.0));
        let got = magic_phi(c(1.0, 0.0), pt).unwrap();
        assert_abs_diff_eq!(got.re, 0.2113248654051872, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);

        // Degenerate pair (2 conj(z), conj(z)^2) at |z| = 1.
        let err = magic_phi(c(1.0, 0.0), GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0)));
        assert!(matches!(err, Err(GammaError::SingularDenominator { .. })));
    }

    #[test]
    fn magic_phi_is_contractive_on_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let z = random_disc(&mut rng, 1.0);
            let pt = GammaPoint::from_pair(random_disc(&mut rng, 1.0), random_disc(&mut rng, 1.0));
            let v = magic_phi(z, pt).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn membership_examples() {
        assert!(in_gamma(GammaPoint::new(c(0.0, 0.0), c(0.0, 0.0)), DEFAULT_TOL));
        assert!(in_gamma(GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0)), DEFAULT_TOL));
        assert!(!in_gamma(GammaPoint::new(c(3.0, 0.0), c(1.0, 0.0)), DEFAULT_TOL));
        assert!(in_open_g(GammaPoint::new(c(0.0, 0.0), c(0.0, 0.0)), DEFAULT_TOL));
        assert!(!in_open_g(GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0)), DEFAULT_TOL));
    }

    #[test]
    fn boundary_examples() {
        assert!(in_bgamma(GammaPoint::new(c(2.0, 0.0), c(1.0, 0.0)), DEFAULT_TOL));
        assert!(in_bgamma(GammaPoint::new(c(0.0, 0.0), c(-1.0, 0.0)), DEFAULT_TOL));
        assert!(!in_bgamma(GammaPoint::new(c(1.0, 0.0), c(0.25, 0.0)), DEFAULT_TOL));
    }

    #[test]
    fn boundary_is_inside_closed_set_and_off_open_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            use rand::Rng;
            let a = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
            let b = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
            let pt = GammaPoint::from_pair(a, b);
            assert!(in_bgamma(pt, 1e-9));
            assert!(in_gamma(pt, 1e-9));
            assert!(!in_open_g(pt, 1e-9));
        }
    }

    #[test]
    fn scaling_tracks_spectral_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let w = Matrix2::new(
                random_disc(&mut rng, 2.0),
                random_disc(&mut rng, 2.0),
                random_disc(&mut rng, 2.0),
                random_disc(&mut rng, 2.0),
            );
            let rho = spectral_radius(&w);
            if rho < 1e-6 {
                continue;
            }
            let scaled = scale_gamma(1.0 / rho, trdet(&w));
            assert_abs_diff_eq!(scaled.radius(), 1.0, epsilon = 1e-8);
            assert!(in_gamma(scaled, 1e-8));
            let shrunk = scale_gamma(0.99 / rho, trdet(&w));
            assert!(in_open_g(shrunk, 1e-9));
        }
    }

    #[test]
    fn pseudo_hyperbolic_examples() {
        assert_eq!(pseudo_hyperbolic(c(0.5, 0.0), c(0.0, 0.0)), 0.5);
        assert!(pseudo_hyperbolic(c(0.0, 0.0), c(0.5, 0.0)) == 0.5);
        assert_eq!(pseudo_hyperbolic(c(0.3, -0.2), c(0.3, -0.2)), 0.0);
    }

    #[test]
    fn pseudo_hyperbolic_is_moebius_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..300 {
            let l1 = random_disc(&mut rng, 0.95);
            let l2 = random_disc(&mut rng, 0.95);
            let a = random_disc(&mut rng, 0.95);
            let m = |l: Complex64| (l - a) / (Complex64::new(1.0, 0.0) - a.conj() * l);
            let d1 = pseudo_hyperbolic(l1, l2);
            let d2 = pseudo_hyperbolic(m(l1), m(l2));
            assert_abs_diff_eq!(d1, d2, epsilon = 1e-11);
            assert_abs_diff_eq!(d1, pseudo_hyperbolic(l2, l1), epsilon = 1e-14);
        }
    }

    #[test]
    fn antipodal_solvability_is_strict() {
        let l1 = c(0.0, 0.0);
        let l2 = c(0.5, 0.0);
        assert!(two_point_antipodal_solvable(l1, l2, c(0.0, 0.0)));
        assert!(two_point_antipodal_solvable(l1, l2, c(0.4, 0.0)));
        assert!(!two_point_antipodal_solvable(l1, l2, c(0.6, 0.0)));
        assert!(!two_point_antipodal_solvable(l1, l2, c(0.5, 0.0)));
        assert!(!two_point_antipodal_solvable(l1, l2, c(0.0, 0.5)));
    }

    #[test]
    fn slice_recovery_examples() {
        let grid = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];

        // Identically-zero slice comes from the plane origin.
        let pt = recover_h_from_slice(&grid, &[c(0.0, 0.0); 3]).unwrap();
        assert!(pt.s.norm() < 1e-12 && pt.p.norm() < 1e-12);

        // Constant slice of ones forces the double-root pair (-2, 1).
        let pt = recover_h_from_slice(&grid, &[c(1.0, 0.0); 3]).unwrap();
        assert_abs_diff_eq!(pt.s.re, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pt.p.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pt.s.im, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pt.p.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn slice_recovery_round_trips() {
        let grid = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];

        // Frozen slice of the pair (sqrt(3) - 2, 0).
        let s = 3.0f64.sqrt() - 2.0;
        let vals = [
            c(0.1547005383792516, 0.0),
            c(0.1339745962155614, 0.0),
            c(0.11814602960478815, 0.0),
        ];
        let src = GammaPoint::new(c(s, 0.0), c(0.0, 0.0));
        for (zk, want) in grid.iter().zip(vals.iter()) {
            assert!((magic_phi(*zk, src).unwrap() - want).norm() < 1e-15);
        }
        let pt = recover_h_from_slice(&grid, &vals).unwrap();
        assert_abs_diff_eq!(pt.s.re, s, epsilon = 1e-12);
        assert!(pt.p.norm() < 1e-12);

        // Random pairs round trip through their slices.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let src = GammaPoint::from_pair(random_disc(&mut rng, 0.9), random_disc(&mut rng, 0.9));
            let vals = [
                magic_phi(grid[0], src).unwrap(),
                magic_phi(grid[1], src).unwrap(),
                magic_phi(grid[2], src).unwrap(),
            ];
            let got = recover_h_from_slice(&grid, &vals).unwrap();
            assert!((got.s - src.s).norm() < 1e-9);
            assert!((got.p - src.p).norm() < 1e-9);
        }
    }

    #[test]
    fn slice_recovery_rejects_inconsistent_samples() {
        let grid = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let vals = [c(0.9, 0.0), c(-0.9, 0.0), c(0.9, 0.0)];
        // A fractional slice is determined by two parameters; these three
        // samples are chosen off the consistent manifold.
        let got = recover_h_from_slice(&grid, &vals);
        assert!(matches!(got, Err(GammaError::InconsistentSlice { .. })));
    }

    #[test]
    fn cayley_examples() {
        assert_eq!(cayley(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(cayley(c(0.5, 0.0)).unwrap(), c(3.0, 0.0));
        assert!(matches!(cayley(c(1.0, 0.0)), Err(GammaError::CayleyPole)));
        assert!(matches!(cayley_inv(c(-1.0, 0.0)), Err(GammaError::CayleyPole)));
    }

    #[test]
    fn cayley_round_trips_and_maps_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..300 {
            let l = random_disc(&mut rng, 0.99);
            let s = cayley(l).unwrap();
            assert!(s.re > 0.0);
            assert!((cayley_inv(s).unwrap() - l).norm() < 1e-12);
        }
        // Unimodular (non-pole) points land on the imaginary axis.
        let s = cayley(c(0.0, 1.0)).unwrap();
        assert!(s.re.abs() < 1e-14);
    }

    #[test]
    fn threshold_constant_is_pinned() {
        let threshold = 1.0 / (4.0 - 2.0 * 3.0f64.sqrt());
        assert_abs_diff_eq!(threshold, 1.866025403784438, epsilon = 1e-12);
        assert_abs_diff_eq!(3.0f64.sqrt() - 2.0, -0.2679491924311228, epsilon = 1e-15);
    }
}
