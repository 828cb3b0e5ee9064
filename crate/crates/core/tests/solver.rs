//! End-to-end pipeline runs over the two-point antipodal family: verdicts
//! across the solvability threshold, witness synthesis round trips, and the
//! bordered-form transport of solver output.

use num_complex::Complex64;

use snpick::feasibility::{certify_witness, solve_rank_constrained, SolverConfig, Verdict};
use snpick::gamma::GammaPoint;
use snpick::lmi::{build_lmi, rank1_from_gamma, LmiSystem, WitnessPair};
use snpick::problem::{default_zgrid, GammaProblem, ProblemError, ZGrid};
use snpick::realization::{synthesize_interpolant, witness_from_solution};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The reduced robust-control pair: h(0) = (zeta, 0), h(1/2) = (-zeta, 0)
/// with zeta = (sqrt(3) - 2) c, solvable exactly for |c| < 1/(4 - 2 sqrt 3).
fn antipodal_problem(c: f64) -> GammaProblem {
    let zeta = c64((3.0f64.sqrt() - 2.0) * c, 0.0);
    GammaProblem::new(
        vec![c64(0.0, 0.0), c64(0.5, 0.0)],
        vec![
            GammaPoint { s: zeta, p: c64(0.0, 0.0) },
            GammaPoint { s: -zeta, p: c64(0.0, 0.0) },
        ],
    )
}

fn solve(gp: &GammaProblem) -> (LmiSystem, ZGrid, Verdict) {
    let grid = default_zgrid(gp).unwrap();
    let lmi = build_lmi(gp, &grid).unwrap();
    let bounds = lmi.entry_bounds().unwrap();
    let verdict = solve_rank_constrained(&lmi, &bounds, &SolverConfig::default());
    (lmi, grid, verdict)
}

#[test]
fn antipodal_family_is_solved_below_the_threshold() {
    for c in [0.25, 0.5, 1.0, 1.5] {
        let gp = antipodal_problem(c);
        gp.validate().unwrap();
        let (lmi, grid, verdict) = solve(&gp);
        let witness = match verdict {
            Verdict::Solvable { witness } => witness,
            other => panic!("c = {c}: expected a witness, got {}", other.kind()),
        };

        let report = certify_witness(&lmi, &witness, &SolverConfig::default());
        assert!(report.feasible, "c = {c}: witness infeasible");
        assert!(report.n_rank <= 1, "c = {c}: rank {}", report.n_rank);
        assert_eq!(report.bound_violations, 0, "c = {c}");

        let interp = synthesize_interpolant(&gp, &grid, &witness, 1e-6).unwrap();
        for (node, value) in gp.nodes.iter().zip(&gp.values) {
            let got = interp.eval_h(*node).unwrap();
            let dev = (got.s - value.s).norm().max((got.p - value.p).norm());
            assert!(dev < 1e-6, "c = {c}: node residual {dev:.3e}");
        }
    }
}

#[test]
fn antipodal_family_is_refuted_above_the_threshold() {
    for c in [2.0, 2.5] {
        let gp = antipodal_problem(c);
        gp.validate().unwrap();
        let (_, _, verdict) = solve(&gp);
        assert!(!verdict.is_solvable(), "c = {c}: verdict {}", verdict.kind());
    }
}

#[test]
fn far_targets_are_rejected_by_validation() {
    let gp = antipodal_problem(5.0);
    assert!(matches!(
        gp.validate(),
        Err(ProblemError::ValueOutsideGamma { .. })
    ));
}

#[test]
fn solver_witness_round_trips_through_synthesis() {
    let gp = antipodal_problem(1.0);
    let (lmi, grid, verdict) = solve(&gp);
    let witness = match verdict {
        Verdict::Solvable { witness } => witness,
        other => panic!("expected a witness, got {}", other.kind()),
    };
    let interp = synthesize_interpolant(&gp, &grid, &witness, 1e-6).unwrap();

    // The realization's transfer function is itself a solution, so its
    // canonical witness must satisfy the criterion with equality.
    let recovered: WitnessPair =
        witness_from_solution(|l| interp.eval_psi(l), &gp, &grid).unwrap();
    let res = lmi.residual(&recovered).unwrap();
    assert!(res.norm() < 1e-8 * (1.0 + recovered.m_mat.norm()));
    let report = certify_witness(&lmi, &recovered, &SolverConfig::default());
    assert!(report.feasible && report.n_rank <= 1);
}

#[test]
fn solver_witness_transports_to_the_bordered_form() {
    let gp = antipodal_problem(0.5);
    let (lmi, _, verdict) = solve(&gp);
    let witness = match verdict {
        Verdict::Solvable { witness } => witness,
        other => panic!("expected a witness, got {}", other.kind()),
    };
    let gamma = witness.gamma.clone().expect("solver witnesses carry the factor");

    let p = lmi.canonical_p(&gamma).unwrap();
    let (lhs, rhs) = lmi.to_schur_form(&gamma, &witness.m_mat, &p).unwrap();
    let diff = &lhs - &rhs;
    let dim = lmi.dim();

    // Borders vanish and the corner block is the flat residual.
    assert!(diff.view((0, 0), (2, dim + 2)).norm() < 1e-10);
    let res = lmi.residual(&witness).unwrap();
    assert!((diff.view((2, 2), (dim, dim)) - &res).norm() < 1e-8);

    let back = lmi.from_schur_form(&witness.m_mat, &gamma, &p).unwrap();
    assert!((back.n_mat - rank1_from_gamma(&gamma)).norm() < 1e-10);
    assert!((back.m_mat - &witness.m_mat).norm() < 1e-12);
}
