//! Interpolation problem model, validation, and the JSON problem schema.
//!
//! A problem is a list of distinct nodes in the open unit disc together with
//! either 2x2 matrix targets or their (s, p) compressions. Validation also
//! chooses the three-point evaluation grid used to discretize the family of
//! fractional maps.

use num_complex::Complex64;
use thiserror::Error;

use crate::gamma::{in_gamma, trdet, DiscPoint, GammaPoint, Matrix2, DEFAULT_TOL};

/// Margin required between grid points and away from map singularities.
pub const GRID_MARGIN: f64 = 1e-6;

/// Targets closer than this to a scalar matrix are rejected outright.
pub const SCALAR_TOL: f64 = 1e-12;

/// Targets closer than this to a scalar matrix trigger a conditioning warning.
pub const NEAR_SCALAR_TOL: f64 = 1e-6;

/// Interpolation data with full 2x2 matrix targets.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProblem {
    pub nodes: Vec<DiscPoint>,
    pub targets: Vec<Matrix2>,
}

/// Interpolation data reduced to (s, p) target pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaProblem {
    pub nodes: Vec<DiscPoint>,
    pub values: Vec<GammaPoint>,
}

/// The three disc points at which the fractional-map family is sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZGrid(pub [Complex64; 3]);

/// A parsed problem file: either matrix or pair targets, plus a grid override.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub input: ProblemInput,
    pub zgrid: Option<ZGrid>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemInput {
    Matrix(SpectralProblem),
    Gamma(GammaProblem),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ProblemError {
    #[error("problem has no interpolation nodes")]
    Empty,
    #[error("{nodes} nodes but {targets} targets")]
    LengthMismatch { nodes: usize, targets: usize },
    #[error("nodes {i} and {j} coincide")]
    DuplicateNodes { i: usize, j: usize },
    #[error("node {index} has modulus {modulus} outside the open unit disc")]
    NodeOutsideDisc { index: usize, modulus: f64 },
    #[error("target {index} is scalar; the companion reduction needs a cyclic vector")]
    ScalarTarget { index: usize },
    #[error("target {index} has spectral radius {radius} above one")]
    ValueOutsideGamma { index: usize, radius: f64 },
    #[error("evaluation grid not admissible: {reason}")]
    GridNotAdmissible { reason: String },
    #[error("problem file schema: {message}")]
    Schema { message: String },
}

fn validate_nodes(nodes: &[DiscPoint]) -> Result<(), ProblemError> {
    if nodes.is_empty() {
        return Err(ProblemError::Empty);
    }
    for (i, z) in nodes.iter().enumerate() {
        if z.norm() >= 1.0 {
            return Err(ProblemError::NodeOutsideDisc { index: i, modulus: z.norm() });
        }
        for (j, w) in nodes.iter().enumerate().skip(i + 1) {
            if (z - w).norm() <= 1e-10 {
                return Err(ProblemError::DuplicateNodes { i, j });
            }
        }
    }
    Ok(())
}

fn scalar_distance(w: &Matrix2) -> f64 {
    let mean = (w[(0, 0)] + w[(1, 1)]) * Complex64::new(0.5, 0.0);
    let dev = w - Matrix2::identity() * mean;
    dev.norm()
}

impl SpectralProblem {
    pub fn new(nodes: Vec<DiscPoint>, targets: Vec<Matrix2>) -> Self {
        SpectralProblem { nodes, targets }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Structural validation: distinct interior nodes, matching lengths,
    /// and no (numerically) scalar target.
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.nodes.len() != self.targets.len() {
            return Err(ProblemError::LengthMismatch {
                nodes: self.nodes.len(),
                targets: self.targets.len(),
            });
        }
        validate_nodes(&self.nodes)?;
        for (index, w) in self.targets.iter().enumerate() {
            if scalar_distance(w) <= SCALAR_TOL * (1.0 + w.norm()) {
                return Err(ProblemError::ScalarTarget { index });
            }
        }
        Ok(())
    }

    /// Indices of targets close enough to scalar to make the companion
    /// similarity badly conditioned.
    pub fn near_scalar_warnings(&self) -> Vec<usize> {
        self.targets
            .iter()
            .enumerate()
            .filter(|(_, w)| {
                let d = scalar_distance(w);
                let scale = 1.0 + w.norm();
                d > SCALAR_TOL * scale && d <= NEAR_SCALAR_TOL * scale
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Compression to (trace, determinant) targets; rejects targets whose
    /// spectral radius exceeds one.
    pub fn to_gamma_problem(&self) -> Result<GammaProblem, ProblemError> {
        self.validate()?;
        let mut values = Vec::with_capacity(self.targets.len());
        for (index, w) in self.targets.iter().enumerate() {
            let pt = trdet(w);
            if !in_gamma(pt, DEFAULT_TOL) {
                return Err(ProblemError::ValueOutsideGamma { index, radius: pt.radius() });
            }
            values.push(pt);
        }
        Ok(GammaProblem { nodes: self.nodes.clone(), values })
    }
}

impl GammaProblem {
    pub fn new(nodes: Vec<DiscPoint>, values: Vec<GammaPoint>) -> Self {
        GammaProblem { nodes, values }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.nodes.len() != self.values.len() {
            return Err(ProblemError::LengthMismatch {
                nodes: self.nodes.len(),
                targets: self.values.len(),
            });
        }
        validate_nodes(&self.nodes)?;
        for (index, pt) in self.values.iter().enumerate() {
            if !in_gamma(*pt, DEFAULT_TOL) {
                return Err(ProblemError::ValueOutsideGamma { index, radius: pt.radius() });
            }
        }
        Ok(())
    }
}

impl ProblemInput {
    pub fn nodes(&self) -> &[DiscPoint] {
        match self {
            ProblemInput::Matrix(p) => &p.nodes,
            ProblemInput::Gamma(p) => &p.nodes,
        }
    }

    /// Validate and reduce to pair targets.
    pub fn to_gamma_problem(&self) -> Result<GammaProblem, ProblemError> {
        match self {
            ProblemInput::Matrix(p) => p.to_gamma_problem(),
            ProblemInput::Gamma(p) => {
                p.validate()?;
                Ok(p.clone())
            }
        }
    }

    /// Matrix targets when the problem carries them.
    pub fn spectral(&self) -> Option<&SpectralProblem> {
        match self {
            ProblemInput::Matrix(p) => Some(p),
            ProblemInput::Gamma(_) => None,
        }
    }
}

fn grid_point_admissible(z: Complex64, placed: &[Complex64], values: &[GammaPoint]) -> bool {
    if values
        .iter()
        .any(|pt| (Complex64::new(2.0, 0.0) - z * pt.s).norm() < GRID_MARGIN)
    {
        return false;
    }
    placed.iter().all(|w| (z - w).norm() >= GRID_MARGIN)
}

/// Default evaluation grid {-1, 0, 1}, with offending points nudged
/// radially inward by the smallest power of 1/2 that restores both the
/// singularity margin and pairwise separation.
pub fn default_zgrid(gp: &GammaProblem) -> Result<ZGrid, ProblemError> {
    gp.validate()?;
    let base = [
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut grid: Vec<Complex64> = Vec::with_capacity(3);
    for &z0 in &base {
        if grid_point_admissible(z0, &grid, &gp.values) {
            grid.push(z0);
            continue;
        }
        let mut placed = None;
        for m in (1..=60).rev() {
            let cand = z0 * (1.0 - 0.5f64.powi(m));
            if grid_point_admissible(cand, &grid, &gp.values) {
                placed = Some(cand);
                break;
            }
        }
        match placed {
            Some(z) => grid.push(z),
            None => {
                return Err(ProblemError::GridNotAdmissible {
                    reason: format!("no inward perturbation of {z0} clears the margin"),
                })
            }
        }
    }
    Ok(ZGrid([grid[0], grid[1], grid[2]]))
}

impl ZGrid {
    /// Check a user-supplied grid against a problem: points must lie in the
    /// closed disc, be separated, and keep clear of map singularities.
    pub fn validate_for(&self, gp: &GammaProblem) -> Result<(), ProblemError> {
        for (k, z) in self.0.iter().enumerate() {
            if z.norm() > 1.0 + 1e-12 {
                return Err(ProblemError::GridNotAdmissible {
                    reason: format!("grid point {k} lies outside the closed disc"),
                });
            }
        }
        for k in 0..3 {
            for l in (k + 1)..3 {
                if (self.0[k] - self.0[l]).norm() < GRID_MARGIN {
                    return Err(ProblemError::GridNotAdmissible {
                        reason: format!("grid points {k} and {l} are closer than {GRID_MARGIN:e}"),
                    });
                }
            }
        }
        for (k, z) in self.0.iter().enumerate() {
            for (j, pt) in gp.values.iter().enumerate() {
                if (Complex64::new(2.0, 0.0) - z * pt.s).norm() < GRID_MARGIN {
                    return Err(ProblemError::GridNotAdmissible {
                        reason: format!("grid point {k} is singular for target {j}"),
                    });
                }
            }
        }
        Ok(())
    }
}

// JSON schema: {"nodes": [[re, im], ...]} plus exactly one of
// "targets" (per node a row-major 2x2 of [re, im]) or
// "values" (per node [s_re, s_im, p_re, p_im]), and optional "zgrid".
mod schema {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct ProblemJson {
        pub nodes: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub targets: Option<Vec<[[[f64; 2]; 2]; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub values: Option<Vec<[f64; 4]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub zgrid: Option<Vec<[f64; 2]>>,
    }
}

fn c_of(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn pair_of(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl ProblemFile {
    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let parsed: schema::ProblemJson = serde_json::from_str(text)
            .map_err(|e| ProblemError::Schema { message: e.to_string() })?;
        let nodes: Vec<Complex64> = parsed.nodes.iter().copied().map(c_of).collect();
        let input = match (parsed.targets, parsed.values) {
            (Some(_), Some(_)) => {
                return Err(ProblemError::Schema {
                    message: "provide exactly one of \"targets\" or \"values\"".into(),
                })
            }
            (None, None) => {
                return Err(ProblemError::Schema {
                    message: "missing \"targets\" or \"values\"".into(),
                })
            }
            (Some(ts), None) => {
                let targets = ts
                    .iter()
                    .map(|t| {
                        Matrix2::new(c_of(t[0][0]), c_of(t[0][1]), c_of(t[1][0]), c_of(t[1][1]))
                    })
                    .collect();
                ProblemInput::Matrix(SpectralProblem { nodes, targets })
            }
            (None, Some(vs)) => {
                let values = vs
                    .iter()
                    .map(|v| GammaPoint::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])))
                    .collect();
                ProblemInput::Gamma(GammaProblem { nodes, values })
            }
        };
        let zgrid = match parsed.zgrid {
            None => None,
            Some(zs) => {
                if zs.len() != 3 {
                    return Err(ProblemError::Schema {
                        message: format!("\"zgrid\" must have exactly 3 points, got {}", zs.len()),
                    });
                }
                Some(ZGrid([c_of(zs[0]), c_of(zs[1]), c_of(zs[2])]))
            }
        };
        Ok(ProblemFile { input, zgrid })
    }

    pub fn to_json_string(&self) -> String {
        let nodes = self.input.nodes().iter().copied().map(pair_of).collect();
        let (targets, values) = match &self.input {
            ProblemInput::Matrix(p) => (
                Some(
                    p.targets
                        .iter()
                        .map(|w| {
                            [
                                [pair_of(w[(0, 0)]), pair_of(w[(0, 1)])],
                                [pair_of(w[(1, 0)]), pair_of(w[(1, 1)])],
                            ]
                        })
                        .collect(),
                ),
                None,
            ),
            ProblemInput::Gamma(p) => (
                None,
                Some(
                    p.values
                        .iter()
                        .map(|v| [v.s.re, v.s.im, v.p.re, v.p.im])
                        .collect(),
                ),
            ),
        };
        let zgrid = self
            .zgrid
            .as_ref()
            .map(|g| g.0.iter().copied().map(pair_of).collect());
        let json = schema::ProblemJson { nodes, targets, values, zgrid };
        serde_json::to_string_pretty(&json).expect("problem serialization")
    }
}
