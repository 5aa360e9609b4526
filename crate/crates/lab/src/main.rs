//! `smvar` — command-line laboratory for Schrödinger–Maxwell systems on
//! periodic 3-manifolds.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smvar::commands;
use smvar::config::{ExperimentConfig, RunOptions};
use smvar::{exit_codes, LabError};

#[derive(Parser)]
#[command(
    name = "smvar",
    about = "Variational experiments for Schrödinger–Maxwell systems on the periodic 3-torus",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the configured RNG seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for the λ-grid (default: sequential).
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,

    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Also write field snapshots of every reported solution.
    #[arg(long, global = true, value_name = "DIR")]
    save_fields: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized identity battery; exit 0 iff every suite passes.
    Verify,
    /// Threshold constants plus the λ-grid regime scan (sublinear family).
    Thresholds,
    /// Well-component analysis and deflated multi-start multiplicity scan.
    Multiwell,
    /// Superlinear admissibility bound λ₀(τ) and the two-solution run.
    Superlinear,
    /// Single minimize / mountain-pass run from the configured start.
    Solve,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config FILE is required");
            return ExitCode::from(exit_codes::CONFIG as u8);
        }
    };
    let cfg = match ExperimentConfig::from_file(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_codes::CONFIG as u8);
        }
    };
    let opts = RunOptions {
        seed: cli.seed,
        workers: cli.workers,
        out_dir: cli.out,
        save_fields: cli.save_fields,
    };

    let result: Result<i32, LabError> = match cli.command {
        Command::Verify => commands::run_verify(&cfg, &opts).map(|out| {
            if out.battery.all_passed {
                exit_codes::OK
            } else {
                exit_codes::BATTERY
            }
        }),
        Command::Thresholds => commands::run_thresholds(&cfg, &opts).map(|out| {
            println!(
                "c_f = {:.9}  c_F = {:.9}  gap interval = [{:.6}, {:.6}]",
                out.constants.c_f,
                out.constants.c_big_f,
                out.constants.gap_interval.0,
                out.constants.gap_interval.1
            );
            for row in &out.rows {
                println!(
                    "lambda {:>12.6}: trivial {:>3}  negative-min {:>3}  mountain-pass {}  min E {:+.6e}",
                    row.lambda, row.n_trivial, row.n_negative_min, row.n_mountain_pass, row.min_energy
                );
            }
            exit_codes::OK
        }),
        Command::Multiwell => commands::run_multiwell(&cfg, &opts).map(|out| {
            println!(
                "Φ components m = {} (min value {:.6e}), tau = {}",
                out.components.m, out.components.min_value, out.tau
            );
            for row in &out.rows {
                println!(
                    "lambda {:>12.6}: distinct {:>3}  below-tau {:>3}",
                    row.lambda, row.n_distinct, row.n_below_tau
                );
            }
            exit_codes::OK
        }),
        Command::Superlinear => commands::run_superlinear(&cfg, &opts).map(|out| {
            println!(
                "kappa_p = {:.6} ({}), lambda0 max = {:.6e} at tau = {:.6e}, lambda = {:.6e}",
                out.kappa_p,
                if out.kappa_estimated { "estimated" } else { "configured" },
                out.lambda0_max.value,
                out.lambda0_max.at,
                out.lambda
            );
            println!(
                "trivial: {:?} (grad {:.3e}), second: {:?} (E {:+.6e}, grad {:.3e})",
                out.trivial.classification,
                out.trivial.grad_norm,
                out.second.classification,
                out.second.energy.total,
                out.second.grad_norm
            );
            exit_codes::OK
        }),
        Command::Solve => commands::run_solve(&cfg, &opts).map(|out| {
            println!(
                "lambda {:.6}: {:?}, E = {:+.6e}, grad = {:.3e}",
                out.lambda,
                out.solution.classification,
                out.solution.energy.total,
                out.solution.grad_norm
            );
            exit_codes::OK
        }),
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
