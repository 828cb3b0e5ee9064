//! Command implementations behind the `snpick` binary: solve a problem
//! file, run the two-point solvability oracle, drive the robust-control
//! demo end to end, and re-certify a realization as a feasibility witness.
//!
//! Every command returns its exit code together with a serializable report;
//! the binary prints the human-readable summary and persists certificates
//! as JSON next to the input files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use snpick::feasibility::{
    certify_witness, solve_rank_constrained, SolverConfig, Verdict, WitnessReport,
};
use snpick::gamma::{in_gamma, pseudo_hyperbolic, two_point_antipodal_solvable, GammaPoint, Matrix2};
use snpick::lmi::{build_lmi, LmiError, WitnessPair};
use snpick::problem::{
    default_zgrid, GammaProblem, ProblemError, ProblemFile, SpectralProblem, ZGrid,
};
use snpick::realization::{
    check_gamma_inner, companion_lift, synthesize_interpolant, witness_from_solution,
    RationalInterpolant, RealizationError,
};
use snpick::robust::{
    build_controller, build_q, robust_criterion, to_disc_problem, verify_robust, MatrixEval,
    RobustError,
};

/// Exit codes: 0 solvable, 1 unsolvable, 2 indeterminate, 3 file or schema
/// problems, 4 invalid data.
pub const EXIT_SOLVABLE: i32 = 0;
pub const EXIT_UNSOLVABLE: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Disc samples used to confirm the synthesized interpolant stays in the
/// domain.
const GAMMA_SWEEP_SAMPLES: usize = 64;

/// Node reproduction tolerance for solver output verification.
const NODE_TOL: f64 = 1e-6;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("schema: {message}")]
    Schema { message: String },
    #[error("{0}")]
    Validation(ProblemError),
    #[error("{0}")]
    Engine(String),
    #[error("argument {name}: {message}")]
    Argument { name: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Schema { .. } => EXIT_SCHEMA,
            _ => EXIT_VALIDATION,
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Schema { message } => CliError::Schema { message },
            other => CliError::Validation(other),
        }
    }
}

impl From<LmiError> for CliError {
    fn from(e: LmiError) -> Self {
        CliError::Engine(e.to_string())
    }
}

impl From<RealizationError> for CliError {
    fn from(e: RealizationError) -> Self {
        CliError::Engine(e.to_string())
    }
}

impl From<RobustError> for CliError {
    fn from(e: RobustError) -> Self {
        CliError::Engine(e.to_string())
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_pairs(m: &Matrix2) -> [[[f64; 2]; 2]; 2] {
    [
        [pair(m[(0, 0)]), pair(m[(0, 1)])],
        [pair(m[(1, 0)]), pair(m[(1, 1)])],
    ]
}

/// Complex literal: `1.5`, `-2`, `1+2i`, `3-0.5j`, `i`, `-j`, `2.5e-3i`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    let s = s.replace('j', "i").replace('I', "i").replace('J', "i");
    if !s.contains('i') {
        return s.parse::<f64>().map(Complex64::from).map_err(|e| e.to_string());
    }
    if !s.ends_with('i') {
        return Err(format!("imaginary unit must be trailing in `{text}`"));
    }
    let body = &s[..s.len() - 1];
    // Split at the sign that separates real and imaginary parts: the last
    // + or - that is neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-')
            && bytes[k - 1] != b'e'
            && bytes[k - 1] != b'E'
        {
            split = Some(k);
            break;
        }
    }
    let (re_str, im_str) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re_str.is_empty() {
        0.0
    } else {
        re_str.parse::<f64>().map_err(|e| e.to_string())?
    };
    let im = match im_str {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|e| e.to_string())?,
    };
    Ok(Complex64::new(re, im))
}

/// Sweep range `start:stop:steps` with steps >= 2.
pub fn parse_sweep(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:steps, got `{text}`"));
    }
    let start: f64 = parts[0].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let stop: f64 = parts[1].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let steps: usize = parts[2].parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    if steps < 2 {
        return Err("sweep needs at least 2 steps".into());
    }
    Ok((start, stop, steps))
}

/// Grid override `a,b,c` of three complex points.
pub fn parse_zgrid(text: &str) -> Result<ZGrid, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated points, got `{text}`"));
    }
    let mut pts = [Complex64::new(0.0, 0.0); 3];
    for (slot, part) in pts.iter_mut().zip(&parts) {
        *slot = parse_complex(part)?;
    }
    Ok(ZGrid(pts))
}

/// Verification of a solver witness against the original data.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationSummary {
    /// Largest deviation of the synthesized h from the pair targets.
    pub max_node_residual: f64,
    /// Whether a disc sweep of the interpolant stayed inside the domain.
    pub grid_in_gamma: bool,
    pub grid_samples: usize,
    /// Largest matrix-target deviation after the companion lift, when the
    /// problem came with matrix targets.
    pub max_matrix_residual: Option<f64>,
    pub passed: bool,
}

/// Machine-readable outcome of `solve`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub verdict: String,
    pub exit_code: i32,
    pub witness_path: Option<String>,
    pub realization_path: Option<String>,
    pub report_path: Option<String>,
    pub solve_ms: u64,
    pub synthesis_ms: u64,
    pub total_ms: u64,
    pub relaxation_floor: Option<f64>,
    pub best_objective: Option<f64>,
    pub certificate: Option<WitnessReport>,
    pub verification: Option<VerificationSummary>,
    pub notes: Vec<String>,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<SolverConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            SolverConfig::from_json_str(&text).map_err(|message| CliError::Schema { message })?
        }
        None => SolverConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    path.with_file_name(format!("{stem}.{suffix}"))
}

struct LoadedProblem {
    gp: GammaProblem,
    sp: Option<SpectralProblem>,
    grid: ZGrid,
}

fn load_problem(path: &Path, zgrid_flag: Option<ZGrid>) -> Result<LoadedProblem, CliError> {
    let text = std::fs::read_to_string(path)?;
    let file = ProblemFile::from_json_str(&text)?;
    let gp = file.input.to_gamma_problem()?;
    let sp = file.input.spectral().cloned();
    let grid = match zgrid_flag.or(file.zgrid) {
        Some(g) => g,
        None => default_zgrid(&gp)?,
    };
    grid.validate_for(&gp)?;
    Ok(LoadedProblem { gp, sp, grid })
}

/// Interior sweep: h stays in the domain on rings filling the disc.
fn disc_membership_sweep(interp: &RationalInterpolant, n_samples: usize) -> bool {
    let rings = [0.25, 0.5, 0.75, 0.97];
    let per_ring = n_samples.div_ceil(rings.len());
    for (k, radius) in rings.into_iter().enumerate() {
        for t in 0..per_ring {
            let theta = std::f64::consts::TAU * (t as f64 + 0.31 * k as f64) / per_ring as f64;
            let lambda = Complex64::from_polar(radius, theta);
            match interp.eval_h(lambda) {
                Ok(value) if in_gamma(value, 1e-8) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Verify a synthesized interpolant against the problem data: node values,
/// a disc sweep, and (for matrix targets) the companion lift.
fn verify_synthesis(
    interp: &RationalInterpolant,
    gp: &GammaProblem,
    sp: Option<&SpectralProblem>,
) -> VerificationSummary {
    let mut max_node = 0.0f64;
    let mut node_ok = true;
    for (node, value) in gp.nodes.iter().zip(&gp.values) {
        match interp.eval_h(*node) {
            Ok(got) => {
                let dev = (got.s - value.s).norm().max((got.p - value.p).norm());
                max_node = max_node.max(dev);
            }
            Err(_) => node_ok = false,
        }
    }
    node_ok &= max_node <= NODE_TOL;
    // Strict contractions stay inside the domain; only a unitary completion
    // promises boundary values on the distinguished boundary.
    let grid_ok = disc_membership_sweep(interp, GAMMA_SWEEP_SAMPLES)
        && (!interp.is_unitary() || check_gamma_inner(interp, GAMMA_SWEEP_SAMPLES));

    let mut matrix_residual = None;
    let mut matrix_ok = true;
    if let Some(sp) = sp {
        let lifted = interp.clone();
        match companion_lift(move |l| lifted.eval_h(l), sp) {
            Ok(mi) => {
                let mut worst = 0.0f64;
                for (node, target) in sp.nodes.iter().zip(&sp.targets) {
                    match mi.eval(*node) {
                        Ok(got) => {
                            let dev = (got - target).norm() / (1.0 + target.norm());
                            worst = worst.max(dev);
                        }
                        Err(_) => matrix_ok = false,
                    }
                }
                matrix_residual = Some(worst);
                matrix_ok &= worst <= NODE_TOL;
            }
            Err(_) => matrix_ok = false,
        }
    }

    VerificationSummary {
        max_node_residual: max_node,
        grid_in_gamma: grid_ok,
        grid_samples: GAMMA_SWEEP_SAMPLES,
        max_matrix_residual: matrix_residual,
        passed: node_ok && grid_ok && matrix_ok,
    }
}

/// Solve a problem file end to end and persist certificates next to it.
pub fn cmd_solve(
    problem_path: &Path,
    config_path: Option<&Path>,
    zgrid_flag: Option<ZGrid>,
    seed: Option<u64>,
) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let cfg = load_config(config_path, seed)?;
    let loaded = load_problem(problem_path, zgrid_flag)?;

    let lmi = build_lmi(&loaded.gp, &loaded.grid)?;
    let bounds = lmi.entry_bounds()?;
    let solve_started = Instant::now();
    let verdict = solve_rank_constrained(&lmi, &bounds, &cfg);
    let solve_ms = solve_started.elapsed().as_millis() as u64;

    let mut report = RunReport {
        verdict: verdict.kind().to_string(),
        exit_code: EXIT_INDETERMINATE,
        witness_path: None,
        realization_path: None,
        report_path: None,
        solve_ms,
        synthesis_ms: 0,
        total_ms: 0,
        relaxation_floor: None,
        best_objective: None,
        certificate: None,
        verification: None,
        notes: Vec::new(),
    };

    match verdict {
        Verdict::Unsolvable { relaxation_floor } => {
            report.exit_code = EXIT_UNSOLVABLE;
            report.relaxation_floor = Some(relaxation_floor);
        }
        Verdict::Indeterminate { best_objective, .. } => {
            report.exit_code = EXIT_INDETERMINATE;
            report.best_objective = best_objective;
        }
        Verdict::Solvable { witness } => {
            report.certificate = Some(certify_witness(&lmi, &witness, &cfg));
            let synth_started = Instant::now();
            match synthesize_interpolant(&loaded.gp, &loaded.grid, &witness, cfg.rank_tol) {
                Ok(interp) => {
                    let verification =
                        verify_synthesis(&interp, &loaded.gp, loaded.sp.as_ref());
                    report.synthesis_ms = synth_started.elapsed().as_millis() as u64;
                    if verification.passed {
                        report.exit_code = EXIT_SOLVABLE;
                        let witness_path = sibling(problem_path, "witness.json");
                        std::fs::write(&witness_path, witness.to_json_string())?;
                        report.witness_path = Some(witness_path.display().to_string());
                        let realization_path = sibling(problem_path, "realization.json");
                        std::fs::write(&realization_path, interp.realization.to_json_string())?;
                        report.realization_path =
                            Some(realization_path.display().to_string());
                    } else {
                        report.verdict = "INDETERMINATE".into();
                        report.exit_code = EXIT_INDETERMINATE;
                        report
                            .notes
                            .push("witness verification failed; verdict downgraded".into());
                    }
                    report.verification = Some(verification);
                }
                Err(e) => {
                    report.verdict = "INDETERMINATE".into();
                    report.exit_code = EXIT_INDETERMINATE;
                    report.synthesis_ms = synth_started.elapsed().as_millis() as u64;
                    report.notes.push(format!("synthesis failed: {e}; verdict downgraded"));
                }
            }
        }
    }

    report.total_ms = started.elapsed().as_millis() as u64;
    let report_path = sibling(problem_path, "report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("serializable"))?;
    report.report_path = Some(report_path.display().to_string());
    Ok(report)
}

/// Closed-form two-point check: prints the metric and the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub distance: f64,
    pub zeta_modulus: f64,
    pub solvable: bool,
    pub exit_code: i32,
}

pub fn cmd_oracle(
    l1: Complex64,
    l2: Complex64,
    zeta: Complex64,
) -> Result<OracleReport, CliError> {
    for (index, l) in [l1, l2].into_iter().enumerate() {
        if l.norm() >= 1.0 {
            return Err(ProblemError::NodeOutsideDisc { index, modulus: l.norm() }.into());
        }
    }
    if (l1 - l2).norm() == 0.0 {
        return Err(ProblemError::DuplicateNodes { i: 0, j: 1 }.into());
    }
    let solvable = two_point_antipodal_solvable(l1, l2, zeta);
    Ok(OracleReport {
        distance: pseudo_hyperbolic(l1, l2),
        zeta_modulus: zeta.norm(),
        solvable,
        exit_code: if solvable { EXIT_SOLVABLE } else { EXIT_UNSOLVABLE },
    })
}

/// One row of the demo sweep table.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub zeta_modulus: f64,
    pub solvable: bool,
}

/// Synthesis half of the demo report.
#[derive(Clone, Debug, Serialize)]
pub struct SynthesisReport {
    /// Node shrink factor of the strictly contractive re-solve.
    pub shrink: f64,
    /// Largest matrix-target deviation of the lifted interpolant.
    pub node_residual: f64,
    pub sup_radius: f64,
    pub robust_pass: bool,
    pub q_at_infinity: [[[f64; 2]; 2]; 2],
    /// Controller value at s = 2.
    pub controller_sample: [[[f64; 2]; 2]; 2],
}

/// Machine-readable outcome of `mu-demo`.
#[derive(Clone, Debug, Serialize)]
pub struct MuDemoReport {
    pub a: [f64; 2],
    pub c: [f64; 2],
    pub threshold: f64,
    pub zeta_modulus: f64,
    pub closed_form_solvable: bool,
    pub solver_verdict: String,
    pub agreement: bool,
    pub synthesis: Option<SynthesisReport>,
    pub sweep: Option<Vec<SweepRow>>,
    pub exit_code: i32,
    pub total_ms: u64,
    pub notes: Vec<String>,
}

fn zeta_of(c: Complex64) -> Complex64 {
    c * (3.0f64.sqrt() - 2.0)
}

/// Demo nodes shrunk toward the origin so the synthesized interpolant is a
/// strict contraction uniformly on the closed disc; the factor keeps the
/// shrunk problem solvable exactly when the original is.
fn shrink_factor(zeta: Complex64) -> f64 {
    (0.8 + 0.4 * zeta.norm()).min(0.999)
}

/// Solve the reduced two-point problem for the verdict only.
fn demo_verdict(zeta: Complex64, cfg: &SolverConfig) -> Result<Verdict, CliError> {
    let gp = GammaProblem::new(
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)],
        vec![GammaPoint { s: zeta, p: Complex64::new(0.0, 0.0) }, GammaPoint {
            s: -zeta,
            p: Complex64::new(0.0, 0.0),
        }],
    );
    gp.validate()?;
    let grid = default_zgrid(&gp)?;
    let lmi = build_lmi(&gp, &grid)?;
    let bounds = lmi.entry_bounds()?;
    Ok(solve_rank_constrained(&lmi, &bounds, cfg))
}

/// Synthesize F, Q, and K for a solvable instance and verify the
/// closed-loop bound.
fn demo_synthesis(
    a: Complex64,
    c: Complex64,
    grid_size: usize,
    cfg: &SolverConfig,
) -> Result<SynthesisReport, CliError> {
    let zeta = zeta_of(c);
    let t = shrink_factor(zeta);
    let shrunk = GammaProblem::new(
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.5 * t, 0.0)],
        vec![GammaPoint { s: zeta, p: Complex64::new(0.0, 0.0) }, GammaPoint {
            s: -zeta,
            p: Complex64::new(0.0, 0.0),
        }],
    );
    shrunk.validate()?;
    let grid = default_zgrid(&shrunk)?;
    let lmi = build_lmi(&shrunk, &grid)?;
    let bounds = lmi.entry_bounds()?;
    let witness = match solve_rank_constrained(&lmi, &bounds, cfg) {
        Verdict::Solvable { witness } => witness,
        other => {
            return Err(CliError::Engine(format!(
                "strict re-solve returned {}; no synthesis margin",
                other.kind()
            )))
        }
    };
    let interp = synthesize_interpolant(&shrunk, &grid, &witness, cfg.rank_tol)?;

    // Compose with the shrink so the lifted interpolant is analytic past
    // the closed disc and strictly contractive on it.
    let sp = to_disc_problem(a, c)?;
    let composed = interp.clone();
    let scale = Complex64::new(t, 0.0);
    let lifted = companion_lift(move |l| composed.eval_h(scale * l), &sp)?;

    let mut node_residual = 0.0f64;
    for (node, target) in sp.nodes.iter().zip(&sp.targets) {
        let dev = (lifted.eval(*node)? - target).norm() / (1.0 + target.norm());
        node_residual = node_residual.max(dev);
    }

    let f_eval: MatrixEval = Box::new(move |l| {
        lifted.eval(l).map_err(|e| snpick::robust::RobustError::Eval { what: e.to_string() })
    });
    let q = build_q(f_eval, a, c)?;
    let robust = verify_robust(&q, a, c, grid_size)?;
    let q_inf = q.at_infinity();
    let controller = build_controller(q)?;
    let sample = controller.eval(Complex64::new(2.0, 0.0))?;

    Ok(SynthesisReport {
        shrink: t,
        node_residual,
        sup_radius: robust.sup_radius,
        robust_pass: robust.pass,
        q_at_infinity: matrix_pairs(&q_inf),
        controller_sample: matrix_pairs(&sample),
    })
}

/// Run the robust-control demo: closed form, solver cross-check, and (when
/// solvable) controller synthesis with the closed-loop bound.
pub fn cmd_mu_demo(
    a: Complex64,
    c: Complex64,
    sweep: Option<(f64, f64, usize)>,
    grid_size: usize,
    cfg: &SolverConfig,
) -> Result<MuDemoReport, CliError> {
    let started = Instant::now();
    let threshold = 1.0 / (4.0 - 2.0 * 3.0f64.sqrt());

    if let Some((start, stop, steps)) = sweep {
        let rows: Vec<SweepRow> = (0..steps)
            .map(|k| {
                let cv = start + (stop - start) * k as f64 / (steps - 1) as f64;
                SweepRow {
                    c: cv,
                    zeta_modulus: zeta_of(Complex64::new(cv, 0.0)).norm(),
                    solvable: robust_criterion(Complex64::new(cv, 0.0)),
                }
            })
            .collect();
        return Ok(MuDemoReport {
            a: pair(a),
            c: pair(c),
            threshold,
            zeta_modulus: zeta_of(c).norm(),
            closed_form_solvable: robust_criterion(c),
            solver_verdict: "SKIPPED".into(),
            agreement: true,
            synthesis: None,
            sweep: Some(rows),
            exit_code: EXIT_SOLVABLE,
            total_ms: started.elapsed().as_millis() as u64,
            notes: vec!["sweep evaluates the closed form only".into()],
        });
    }

    if c.norm() == 0.0 {
        return Err(CliError::Engine(RobustError::ZeroParameter.to_string()));
    }
    let zeta = zeta_of(c);
    let closed = robust_criterion(c);
    let mut notes = Vec::new();

    // Radius bound: a target outside the closed spectral unit ball rules
    // out any strictly contractive interpolant without running the solver.
    let solver_verdict = if zeta.norm() >= 1.0 {
        notes.push("reduced target lies outside the spectral unit ball".into());
        "UNSOLVABLE".to_string()
    } else {
        demo_verdict(zeta, cfg)?.kind().to_string()
    };

    let agreement = solver_verdict == "INDETERMINATE"
        || closed == (solver_verdict == "SOLVABLE");
    if !agreement {
        notes.push("solver verdict disagrees with the closed form".into());
    }

    let mut synthesis = None;
    let exit_code = if !closed {
        if solver_verdict == "SOLVABLE" {
            EXIT_INDETERMINATE
        } else {
            EXIT_UNSOLVABLE
        }
    } else if solver_verdict != "SOLVABLE" {
        notes.push("nonconvex search found no witness; closed form says solvable".into());
        EXIT_INDETERMINATE
    } else {
        match demo_synthesis(a, c, grid_size, cfg) {
            Ok(s) => {
                let ok = s.robust_pass;
                synthesis = Some(s);
                if ok {
                    EXIT_SOLVABLE
                } else {
                    notes.push("closed-loop bound not met by synthesized Q".into());
                    EXIT_INDETERMINATE
                }
            }
            Err(e) => {
                notes.push(format!("synthesis failed: {e}"));
                EXIT_INDETERMINATE
            }
        }
    };

    Ok(MuDemoReport {
        a: pair(a),
        c: pair(c),
        threshold,
        zeta_modulus: zeta.norm(),
        closed_form_solvable: closed,
        solver_verdict,
        agreement,
        synthesis,
        sweep: None,
        exit_code,
        total_ms: started.elapsed().as_millis() as u64,
        notes,
    })
}

/// Machine-readable outcome of `witness`.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessRunReport {
    pub witness_path: String,
    pub certificate: WitnessReport,
    pub exit_code: i32,
}

/// Recover the canonical witness from a stored realization and certify it
/// against the problem's feasibility system.
pub fn cmd_witness(
    problem_path: &Path,
    realization_path: &Path,
) -> Result<WitnessRunReport, CliError> {
    let loaded = load_problem(problem_path, None)?;
    let text = std::fs::read_to_string(realization_path)?;
    let realization = snpick::realization::Realization::from_json_str(&text)
        .map_err(|e| CliError::Schema { message: e.to_string() })?;

    let witness: WitnessPair =
        witness_from_solution(|l| realization.eval_psi(l), &loaded.gp, &loaded.grid)?;
    let lmi = build_lmi(&loaded.gp, &loaded.grid)?;
    let cfg = SolverConfig::default();
    let certificate = certify_witness(&lmi, &witness, &cfg);

    let out_path = sibling(realization_path, "witness.json");
    std::fs::write(&out_path, witness.to_json_string())?;
    let exit_code = if certificate.feasible && certificate.n_rank <= 1 {
        EXIT_SOLVABLE
    } else {
        EXIT_INDETERMINATE
    };
    Ok(WitnessRunReport {
        witness_path: out_path.display().to_string(),
        certificate,
        exit_code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals_parse() {
        let cases = [
            ("1.5", Complex64::new(1.5, 0.0)),
            ("-2", Complex64::new(-2.0, 0.0)),
            ("1+2i", Complex64::new(1.0, 2.0)),
            ("3-0.5j", Complex64::new(3.0, -0.5)),
            ("i", Complex64::new(0.0, 1.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("2.5e-3i", Complex64::new(0.0, 2.5e-3)),
            ("1e2+1e-2i", Complex64::new(100.0, 0.01)),
            ("-1.5-2i", Complex64::new(-1.5, -2.0)),
            (" 0.3 + 0.4i ", Complex64::new(0.3, 0.4)),
        ];
        for (text, want) in cases {
            assert_eq!(parse_complex(text).unwrap(), want, "{text}");
        }
        assert!(parse_complex("").is_err());
        assert!(parse_complex("1+2").is_err());
        assert!(parse_complex("i5").is_err());
        assert!(parse_complex("1+2k").is_err());
    }

    #[test]
    fn sweep_and_grid_literals_parse() {
        assert_eq!(parse_sweep("0.5:2.5:9").unwrap(), (0.5, 2.5, 9));
        assert!(parse_sweep("0.5:2.5").is_err());
        assert!(parse_sweep("0.5:2.5:1").is_err());

        let g = parse_zgrid("0.1,0.2+0.1i,-0.3").unwrap();
        assert_eq!(g.0[1], Complex64::new(0.2, 0.1));
        assert!(parse_zgrid("0.1,0.2").is_err());
    }

    #[test]
    fn oracle_examples() {
        let zero = Complex64::new(0.0, 0.0);
        let half = Complex64::new(0.5, 0.0);
        let r = cmd_oracle(zero, half, Complex64::new(0.4, 0.0)).unwrap();
        assert!(r.solvable && r.exit_code == EXIT_SOLVABLE);
        assert!((r.distance - 0.5).abs() < 1e-15);

        let r = cmd_oracle(zero, half, Complex64::new(0.6, 0.0)).unwrap();
        assert!(!r.solvable && r.exit_code == EXIT_UNSOLVABLE);

        let r = cmd_oracle(zero, half, zero).unwrap();
        assert!(r.solvable);

        assert!(matches!(
            cmd_oracle(Complex64::new(1.2, 0.0), half, zero),
            Err(CliError::Validation(ProblemError::NodeOutsideDisc { .. }))
        ));
        assert!(matches!(
            cmd_oracle(half, half, zero),
            Err(CliError::Validation(ProblemError::DuplicateNodes { .. }))
        ));
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(
            CliError::Schema { message: "x".into() }.exit_code(),
            EXIT_SCHEMA
        );
        assert_eq!(CliError::Validation(ProblemError::Empty).exit_code(), EXIT_VALIDATION);
        assert_eq!(CliError::Engine("x".into()).exit_code(), EXIT_VALIDATION);
        let from_problem: CliError = ProblemError::Schema { message: "bad".into() }.into();
        assert_eq!(from_problem.exit_code(), EXIT_SCHEMA);
    }

    #[test]
    fn sweep_rows_cross_the_threshold_once() {
        let report = cmd_mu_demo(
            Complex64::new(10.0, 0.0),
            Complex64::new(1.0, 0.0),
            Some((0.5, 2.5, 21)),
            16,
            &SolverConfig::default(),
        )
        .unwrap();
        let rows = report.sweep.unwrap();
        assert_eq!(rows.len(), 21);
        let flips: usize = rows
            .windows(2)
            .filter(|w| w[0].solvable != w[1].solvable)
            .count();
        assert_eq!(flips, 1);
        let crossing = rows.windows(2).find(|w| w[0].solvable != w[1].solvable).unwrap();
        assert!(crossing[0].c < 1.8660254037844386 && 1.8660254037844386 < crossing[1].c);
        assert_eq!(report.exit_code, EXIT_SOLVABLE);
    }
}
