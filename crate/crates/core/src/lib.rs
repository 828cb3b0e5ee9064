//! Solver for the 2x2 spectral Nevanlinna-Pick problem.
//!
//! Given finitely many nodes in the open unit disc and 2x2 target matrices
//! (or their trace/determinant pairs), the crate decides whether an analytic
//! 2x2 matrix function with spectral radius at most one can interpolate the
//! data, and when it can, synthesizes a rational interpolant from a unitary
//! realization. The reduction works through the symmetrized bidisc: targets
//! are compressed to (trace, determinant) pairs, feasibility becomes a
//! rank-constrained semidefinite problem over a finite grid of fractional
//! maps, and a feasible low-rank witness is converted back to a function by
//! a contraction-completion construction.
//!
//! The [`robust`] module builds the classical mu-synthesis example that
//! motivates the solver: a parametric plant whose robust stabilization
//! reduces to a two-point problem of exactly this kind.

pub mod feasibility;
pub mod gamma;
pub mod linalg;
pub mod lmi;
pub mod poly;
pub mod problem;
pub mod realization;
pub mod robust;
pub mod sampling;

pub use gamma::{GammaPoint, Matrix2};
pub use num_complex::Complex64;
