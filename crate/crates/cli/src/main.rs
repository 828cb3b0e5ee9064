use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use snpick_cli::{
    cmd_mu_demo, cmd_oracle, cmd_solve, cmd_witness, parse_complex, parse_sweep, parse_zgrid,
    CliError, EXIT_VALIDATION,
};
use snpick::feasibility::SolverConfig;
use snpick::problem::ZGrid;

#[derive(Parser)]
#[command(name = "snpick", version, about = "Two-by-two spectral interpolation solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write witness, realization, and report JSON
    /// next to it.
    Solve {
        problem: PathBuf,
        /// Solver configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the evaluation grid: three comma-separated complex points.
        #[arg(long)]
        zgrid: Option<String>,
        /// Override the restart seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form two-point solvability check.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        l1: String,
        #[arg(long, allow_hyphen_values = true)]
        l2: String,
        #[arg(long, allow_hyphen_values = true)]
        zeta: String,
    },
    /// Robust stabilization demo: criterion, solver cross-check, controller.
    MuDemo {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        /// Verdict table over real c: start:stop:steps.
        #[arg(long)]
        sweep: Option<String>,
        /// Boundary grid size for the closed-loop sweep.
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recover and certify a witness from a stored realization.
    Witness { problem: PathBuf, realization: PathBuf },
}

fn arg_complex(name: &'static str, text: &str) -> Result<Complex64, CliError> {
    parse_complex(text).map_err(|message| CliError::Argument { name, message })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { problem, config, zgrid, seed } => {
            let grid: Option<ZGrid> = match zgrid {
                Some(text) => Some(
                    parse_zgrid(&text)
                        .map_err(|message| CliError::Argument { name: "zgrid", message })?,
                ),
                None => None,
            };
            let report = cmd_solve(&problem, config.as_deref(), grid, seed)?;
            println!("verdict: {}", report.verdict);
            if let Some(floor) = report.relaxation_floor {
                println!("relaxation floor: {floor:.6e}");
            }
            if let Some(obj) = report.best_objective {
                println!("best rank objective: {obj:.6e}");
            }
            if let Some(v) = &report.verification {
                println!(
                    "verification: node residual {:.3e}, domain sweep {} ({} samples){}",
                    v.max_node_residual,
                    if v.grid_in_gamma { "ok" } else { "FAILED" },
                    v.grid_samples,
                    match v.max_matrix_residual {
                        Some(r) => format!(", matrix residual {r:.3e}"),
                        None => String::new(),
                    }
                );
            }
            for path in [&report.witness_path, &report.realization_path, &report.report_path]
                .into_iter()
                .flatten()
            {
                println!("wrote {path}");
            }
            for note in &report.notes {
                println!("note: {note}");
            }
            println!("{} ms total ({} ms solve)", report.total_ms, report.solve_ms);
            Ok(report.exit_code)
        }
        Command::Oracle { l1, l2, zeta } => {
            let report = cmd_oracle(
                arg_complex("l1", &l1)?,
                arg_complex("l2", &l2)?,
                arg_complex("zeta", &zeta)?,
            )?;
            println!("d(l1, l2) = {:.17}", report.distance);
            println!("|zeta|    = {:.17}", report.zeta_modulus);
            println!(
                "verdict: {}",
                if report.solvable { "SOLVABLE (|zeta| < d)" } else { "UNSOLVABLE (|zeta| >= d)" }
            );
            Ok(report.exit_code)
        }
        Command::MuDemo { a, c, sweep, grid, seed } => {
            let a = arg_complex("a", &a)?;
            let c = arg_complex("c", &c)?;
            let sweep = match sweep {
                Some(text) => Some(
                    parse_sweep(&text)
                        .map_err(|message| CliError::Argument { name: "sweep", message })?,
                ),
                None => None,
            };
            let mut cfg = SolverConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = cmd_mu_demo(a, c, sweep, grid, &cfg)?;
            if let Some(rows) = &report.sweep {
                println!("{:>12}  {:>12}  verdict", "c", "|zeta|");
                for row in rows {
                    println!(
                        "{:>12.6}  {:>12.6}  {}",
                        row.c,
                        row.zeta_modulus,
                        if row.solvable { "solvable" } else { "unsolvable" }
                    );
                }
            } else {
                println!("threshold |c| < {:.16}", report.threshold);
                println!("|zeta| = {:.16}", report.zeta_modulus);
                println!(
                    "closed form: {}",
                    if report.closed_form_solvable { "solvable" } else { "unsolvable" }
                );
                println!("solver verdict: {}", report.solver_verdict);
                if let Some(s) = &report.synthesis {
                    println!(
                        "synthesis: shrink {:.4}, node residual {:.3e}",
                        s.shrink, s.node_residual
                    );
                    println!(
                        "closed-loop sup radius {:.12} -> {}",
                        s.sup_radius,
                        if s.robust_pass { "pass" } else { "FAIL" }
                    );
                }
                for note in &report.notes {
                    println!("note: {note}");
                }
            }
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            Ok(report.exit_code)
        }
        Command::Witness { problem, realization } => {
            let report = cmd_witness(&problem, &realization)?;
            let c = &report.certificate;
            println!(
                "witness: feasible {}, rank {}, objective {:.3e}, residual eig {:.3e}",
                c.feasible, c.n_rank, c.objective, c.min_residual_eig
            );
            println!("wrote {}", report.witness_path);
            Ok(report.exit_code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code().clamp(0, 255) as u8;
            ExitCode::from(if code == 0 { EXIT_VALIDATION as u8 } else { code })
        }
    }
}
