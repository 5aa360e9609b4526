//! The five CLI commands: `verify`, `thresholds`, `multiwell`,
//! `superlinear`, `solve`.
//!
//! Each command parses its section of the experiment config, runs the
//! corresponding suite over the λ-grid (in parallel when `--workers` asks
//! for it; per-λ results are merged in grid order so outputs stay
//! deterministic), and emits `report.json`, `scan.csv` and a gnuplot script
//! into the output directory.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smvar_core::critical::{
    estimate_embedding_constant, find_negative_endpoint, minimize, mountain_pass,
    multi_start_deflated, Classification, CriticalPointReport, Termination,
};
use smvar_core::energy::{EnergyBreakdown, Evaluator, PsiMode};
use smvar_core::manifold::Manifold;
use smvar_core::nonlinearity::{
    lambda0_bound, lambda0_max, phi_components, ArParams, ConstantsReport,
    PhiComponents,
};
use smvar_core::onedim::Peak;
use smvar_core::snapshot::save_field;

use crate::battery::{run_battery, BatteryOutcome};
use crate::config::{ExperimentConfig, RunOptions, SolveMode, StartSpec};
use crate::report::{
    fnum, multiwell_plot, superlinear_plot, thresholds_plot, write_csv, write_json,
    write_plot_script, RegimeRow,
};
use crate::LabError;

/// Deterministic per-λ seed derivation.
fn lambda_seed(base: u64, idx: usize) -> u64 {
    base.wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const WEAK_TEST_FIELDS: usize = 10;
const WEAK_SEED_SALT: u64 = 0x5EAF;

/// JSON-friendly digest of a critical-point report, with the weak-form
/// certification attached.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub classification: Classification,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
    pub u_h1_norm: f64,
    pub u_mean: f64,
    pub weak_schrodinger: f64,
    pub weak_maxwell: f64,
}

fn summarize(
    ev: &Evaluator,
    report: &CriticalPointReport,
    seed: u64,
) -> Result<SolutionSummary, LabError> {
    let weak = ev.weak_residuals(&report.u, &report.phi, WEAK_TEST_FIELDS, seed)?;
    Ok(SolutionSummary {
        classification: report.classification,
        converged: report.converged,
        termination: report.termination,
        iterations: report.iterations,
        energy: report.energy,
        grad_norm: report.grad_norm,
        u_h1_norm: report.u_h1_norm,
        u_mean: report.u.values().iter().sum::<f64>() / report.u.len() as f64,
        weak_schrodinger: weak.schrodinger_max,
        weak_maxwell: weak.maxwell_max,
    })
}

fn save_report_fields(
    dir: &Path,
    prefix: &str,
    m: &Manifold,
    report: &CriticalPointReport,
) -> Result<(), LabError> {
    save_field(dir, &format!("{prefix}_u"), m, &report.u)?;
    save_field(dir, &format!("{prefix}_phi"), m, &report.phi)?;
    Ok(())
}


// ── verify ──────────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct VerifyOutcome {
    pub battery: BatteryOutcome,
}

pub fn run_verify(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<VerifyOutcome, LabError> {
    let m = cfg.build_manifold()?;
    let seed = opts.seed.unwrap_or(cfg.solver.rng_seed);
    let out_dir = cfg.out_dir(opts);
    let battery = run_battery(&m, cfg.params.e, cfg.params.q, seed, 100, Some(&out_dir))?;
    battery.print_table();
    write_json(&out_dir, "report.json", &battery)?;
    Ok(VerifyOutcome { battery })
}

// ── thresholds ──────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct LambdaDetail {
    pub lambda: f64,
    pub minimum: Option<SolutionSummary>,
    pub mountain_pass: Option<SolutionSummary>,
}

#[derive(Debug, Serialize)]
pub struct ThresholdsOutcome {
    pub constants: ConstantsReport,
    /// `c_f⁻¹·‖α‖_∞⁻¹`.
    pub threshold_trivial: f64,
    /// `c_F⁻¹·‖α‖₁⁻¹`.
    pub threshold_multiple: f64,
    pub rows: Vec<RegimeRow>,
    pub details: Vec<LambdaDetail>,
    pub seed: u64,
}

pub fn run_thresholds(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<ThresholdsOutcome, LabError> {
    if cfg.params.psi_mode != PsiMode::LambdaAlpha {
        return Err(LabError::Config(
            "thresholds requires psi_mode = \"lambda_alpha\"".into(),
        ));
    }
    let m = cfg.build_manifold()?;
    let base_params = cfg.build_params(&m)?;
    if (m.volume() - 1.0).abs() > 1e-9 {
        eprintln!(
            "warning: threshold scan assumes unit volume, got Vol_g = {}",
            m.volume()
        );
    }
    let nl = cfg.nonlinearity.clone();
    nl.validate_params()?;

    let constants = nl.constants_report(cfg.params.e, cfg.params.q)?;
    let alpha_sup = base_params.alpha.max();
    let alpha_l1 = m.integrate(&base_params.alpha)?;
    let threshold_trivial = 1.0 / (constants.c_f * alpha_sup);
    let threshold_multiple = 1.0 / (constants.c_big_f * alpha_l1);

    let seed = opts.seed.unwrap_or(cfg.solver.rng_seed);
    let solver = cfg.solver.to_solver_config(opts.seed);
    let lambdas = cfg.lambda_values()?;
    let n_starts = cfg.solver.n_starts;
    let s_star = constants.s_star_big_f;

    let scan_one = |(idx, lambda): (usize, f64)| -> Result<(RegimeRow, LambdaDetail), LabError> {
        let params = base_params.with_lambda(lambda);
        let ev = Evaluator::new(Arc::clone(&m), params, nl.clone())?;
        let lseed = lambda_seed(seed, idx);
        let mut rng = ChaCha8Rng::seed_from_u64(lseed);

        let mut starts = Vec::with_capacity(n_starts + 1);
        starts.push(m.constant_field(s_star));
        for _ in 0..n_starts {
            starts.push(m.random_smooth_field(6, 2, 0.5, rng_range(&mut rng, 0.0, s_star), &mut rng));
        }

        let mut n_trivial = 0;
        let mut n_negative = 0;
        let mut min_energy = f64::INFINITY;
        let mut best_min: Option<CriticalPointReport> = None;
        for start in &starts {
            let report = minimize(&ev, start, &solver)?;
            if !report.converged {
                continue;
            }
            match report.classification {
                Classification::Trivial => n_trivial += 1,
                Classification::NegativeEnergyMin => n_negative += 1,
                _ => {}
            }
            if report.energy.total < min_energy {
                min_energy = report.energy.total;
            }
            let better = match &best_min {
                None => true,
                Some(b) => report.energy.total < b.energy.total,
            };
            if better {
                best_min = Some(report);
            }
        }

        let mp_report = match find_negative_endpoint(&ev, s_star, 40) {
            Ok((w, _)) => Some(mountain_pass(&ev, &w, &solver)?),
            Err(_) => None,
        };
        let n_mountain_pass = mp_report
            .as_ref()
            .map(|r| {
                usize::from(r.converged && r.classification == Classification::MountainPass)
            })
            .unwrap_or(0);

        let minimum = best_min
            .as_ref()
            .map(|r| summarize(&ev, r, lseed ^ WEAK_SEED_SALT))
            .transpose()?;
        let mp_summary = mp_report
            .as_ref()
            .map(|r| summarize(&ev, r, lseed ^ (WEAK_SEED_SALT + 1)))
            .transpose()?;

        if let Some(dir) = &opts.save_fields {
            if let Some(r) = &best_min {
                save_report_fields(dir, &format!("lambda{idx}_min"), &m, r)?;
            }
            if let Some(r) = &mp_report {
                save_report_fields(dir, &format!("lambda{idx}_mp"), &m, r)?;
            }
        }

        Ok((
            RegimeRow {
                lambda,
                n_starts: starts.len(),
                n_trivial,
                n_negative_min: n_negative,
                n_mountain_pass,
                min_energy,
                threshold_trivial,
                threshold_multiple,
            },
            LambdaDetail {
                lambda,
                minimum,
                mountain_pass: mp_summary,
            },
        ))
    };

    let indexed: Vec<(usize, f64)> = lambdas.iter().copied().enumerate().collect();
    let results = parallel_map(opts.workers, indexed, scan_one)?;

    let mut rows = Vec::with_capacity(results.len());
    let mut details = Vec::with_capacity(results.len());
    for (row, detail) in results {
        rows.push(row);
        details.push(detail);
    }

    let out_dir = cfg.out_dir(opts);
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fnum(r.lambda),
                r.n_starts.to_string(),
                r.n_trivial.to_string(),
                r.n_negative_min.to_string(),
                r.n_mountain_pass.to_string(),
                fnum(r.min_energy),
                fnum(r.threshold_trivial),
                fnum(r.threshold_multiple),
            ]
        })
        .collect();
    write_csv(
        &out_dir,
        "scan.csv",
        &[
            "lambda",
            "n_starts",
            "n_trivial",
            "n_negative_min",
            "n_mountain_pass",
            "min_energy",
            "threshold_trivial",
            "threshold_multiple",
        ],
        &csv_rows,
    )?;

    let energy_rows: Vec<Vec<String>> = details
        .iter()
        .flat_map(|d| {
            [("min", &d.minimum), ("mp", &d.mountain_pass)]
                .into_iter()
                .filter_map(move |(kind, s)| {
                    s.as_ref().map(|s| {
                        vec![
                            fnum(d.lambda),
                            fnum(cfg.params.e),
                            fnum(cfg.params.q),
                            fnum(s.energy.total),
                            fnum(s.energy.dirichlet_mass),
                            fnum(s.energy.coupling),
                            fnum(s.energy.potential),
                            fnum(s.grad_norm),
                            kind.to_string(),
                        ]
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    write_csv(
        &out_dir,
        "energies.csv",
        &[
            "lambda",
            "e",
            "q",
            "total",
            "dirichlet_mass",
            "coupling",
            "potential",
            "grad_norm",
            "kind",
        ],
        &energy_rows,
    )?;

    write_plot_script(
        &out_dir,
        "plot.gp",
        &thresholds_plot("scan.csv", threshold_trivial, threshold_multiple),
    )?;

    let outcome = ThresholdsOutcome {
        constants,
        threshold_trivial,
        threshold_multiple,
        rows,
        details,
        seed,
    };
    write_json(&out_dir, "report.json", &outcome)?;
    Ok(outcome)
}

fn rng_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Maps `job` over the items, on a rayon pool when `workers` requests
/// parallelism; results come back in input order either way.
fn parallel_map<I, O, F>(workers: Option<usize>, items: Vec<I>, job: F) -> Result<Vec<O>, LabError>
where
    I: Send,
    O: Send,
    F: Fn(I) -> Result<O, LabError> + Sync + Send,
{
    match workers {
        Some(k) if k > 1 => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| LabError::Solver(format!("worker pool: {e}")))?;
            pool.install(|| items.into_par_iter().map(&job).collect())
        }
        _ => items.into_iter().map(job).collect(),
    }
}

// ── multiwell ───────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct MultiwellRow {
    pub lambda: f64,
    pub n_distinct: usize,
    pub n_below_tau: usize,
    pub min_energy: f64,
    pub min_n_value: f64,
}

#[derive(Debug, Serialize)]
pub struct MultiwellOutcome {
    pub components: PhiComponents,
    pub tau: f64,
    /// `‖β‖_{L¹}·inf Φ_{μ₀}` — the legal lower bound for τ.
    pub tau_lower_bound: f64,
    pub rows: Vec<MultiwellRow>,
    pub solutions: Vec<Vec<SolutionSummary>>,
    pub seed: u64,
}

pub fn run_multiwell(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<MultiwellOutcome, LabError> {
    if cfg.params.psi_mode != PsiMode::LambdaAlphaPlusMu0Beta {
        return Err(LabError::Config(
            "multiwell requires psi_mode = \"lambda_alpha_plus_mu0_beta\"".into(),
        ));
    }
    let spec = cfg
        .multiwell
        .clone()
        .ok_or_else(|| LabError::Config("missing [multiwell] section".into()))?;
    let m = cfg.build_manifold()?;
    let base_params = cfg.build_params(&m)?;
    let nl = cfg.nonlinearity.clone();
    nl.validate_params()?;

    let components = phi_components(&nl, base_params.mu0, spec.domain, spec.grid)?;
    let beta_l1 = m.integrate(&base_params.beta)?;
    let tau_lower_bound = beta_l1 * components.min_value;
    if !(spec.tau > tau_lower_bound) {
        return Err(LabError::Config(format!(
            "tau = {} must exceed the lower bound ‖β‖₁·inf Φ = {}",
            spec.tau, tau_lower_bound
        )));
    }

    let seed = opts.seed.unwrap_or(cfg.solver.rng_seed);
    let lambdas = cfg.lambda_values()?;
    let n_starts = cfg.solver.n_starts;

    let scan_one = |(idx, lambda): (usize, f64)| -> Result<(MultiwellRow, Vec<SolutionSummary>), LabError> {
        let params = base_params.with_lambda_equals_e(lambda);
        let ev = Evaluator::new(Arc::clone(&m), params, nl.clone())?;
        let mut solver = cfg.solver.to_solver_config(opts.seed);
        solver.rng_seed = lambda_seed(seed, idx);
        let out = multi_start_deflated(&ev, &solver, n_starts, spec.domain, spec.grid, spec.tau)?;

        let mut summaries = Vec::with_capacity(out.solutions.len());
        for (k, r) in out.solutions.iter().enumerate() {
            summaries.push(summarize(&ev, r, lambda_seed(seed, idx) ^ (WEAK_SEED_SALT + k as u64))?);
            if let Some(dir) = &opts.save_fields {
                save_report_fields(dir, &format!("lambda{idx}_sol{k}"), &m, r)?;
            }
        }

        let min_energy = out
            .solutions
            .first()
            .map(|r| r.energy.total)
            .unwrap_or(f64::INFINITY);
        let min_n_value = out
            .n_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok((
            MultiwellRow {
                lambda,
                n_distinct: out.solutions.len(),
                n_below_tau: out.n_below_tau,
                min_energy,
                min_n_value,
            },
            summaries,
        ))
    };

    let indexed: Vec<(usize, f64)> = lambdas.iter().copied().enumerate().collect();
    let results = parallel_map(opts.workers, indexed, scan_one)?;

    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    for (row, sums) in results {
        rows.push(row);
        solutions.push(sums);
    }

    let out_dir = cfg.out_dir(opts);
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fnum(r.lambda),
                r.n_distinct.to_string(),
                r.n_below_tau.to_string(),
                fnum(r.min_energy),
                fnum(r.min_n_value),
            ]
        })
        .collect();
    write_csv(
        &out_dir,
        "scan.csv",
        &["lambda", "n_distinct", "n_below_tau", "min_energy", "min_n_value"],
        &csv_rows,
    )?;
    write_plot_script(&out_dir, "plot.gp", &multiwell_plot("scan.csv"))?;

    let outcome = MultiwellOutcome {
        components,
        tau: spec.tau,
        tau_lower_bound,
        rows,
        solutions,
        seed,
    };
    write_json(&out_dir, "report.json", &outcome)?;
    Ok(outcome)
}

// ── superlinear ─────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct SuperlinearOutcome {
    pub ar: ArParams,
    pub kappa_p: f64,
    pub kappa_estimated: bool,
    pub lambda0_table: Vec<(f64, f64)>,
    pub lambda0_max: Peak,
    pub lambda: f64,
    pub trivial: SolutionSummary,
    pub second: SolutionSummary,
    /// `(t, J_μ(t·u₀))` along the unboundedness ray.
    pub j_values: Vec<(f64, f64)>,
    pub j_decreasing_at_top: bool,
    pub seed: u64,
}

pub fn run_superlinear(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<SuperlinearOutcome, LabError> {
    if cfg.params.psi_mode != PsiMode::LambdaConstant {
        return Err(LabError::Config(
            "superlinear requires psi_mode = \"lambda_constant\"".into(),
        ));
    }
    let spec = cfg
        .superlinear
        .clone()
        .ok_or_else(|| LabError::Config("missing [superlinear] section".into()))?;
    let m = cfg.build_manifold()?;
    let base_params = cfg.build_params(&m)?;
    let nl = cfg.nonlinearity.clone();
    nl.validate_params()?;

    let ar = ArParams {
        p: spec.p,
        growth_const: spec.growth_const,
        eta: spec.eta,
        tau0: spec.tau0,
    };
    ar.check_against(&nl)?;

    let seed = opts.seed.unwrap_or(cfg.solver.rng_seed);
    let solver = cfg.solver.to_solver_config(opts.seed);

    let (kappa_p, kappa_estimated) = match spec.kappa_p {
        Some(k) => (k, false),
        None => (estimate_embedding_constant(&m, spec.p, &solver)?, true),
    };

    let (tau_lo, tau_hi, tau_n) = spec.tau_grid;
    let lambda0_table: Vec<(f64, f64)> = (0..tau_n)
        .map(|i| {
            let tau = if tau_n <= 1 {
                tau_lo
            } else {
                (tau_lo.ln() + (tau_hi.ln() - tau_lo.ln()) * i as f64 / (tau_n - 1) as f64).exp()
            };
            (tau, lambda0_bound(&ar, kappa_p, tau))
        })
        .collect();
    let lambda0_peak = lambda0_max(&ar, kappa_p);
    let lambda = spec.lambda_fraction * lambda0_peak.value;

    let params = base_params.with_lambda(lambda);
    let ev = Evaluator::new(Arc::clone(&m), params, nl.clone())?;

    // below the admissibility bound, u = 0 is a strict local minimum: a
    // small random start must fall back into it
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small_start = m.random_smooth_field(6, 2, 0.05, 0.0, &mut rng);
    let trivial_report = minimize(&ev, &small_start, &solver)?;
    let trivial = summarize(&ev, &trivial_report, seed ^ WEAK_SEED_SALT)?;

    let (w, _) = find_negative_endpoint(&ev, spec.tau0.max(1.0), 40)?;
    let second_report = mountain_pass(&ev, &w, &solver)?;
    let second = summarize(&ev, &second_report, seed ^ (WEAK_SEED_SALT + 1))?;

    if let Some(dir) = &opts.save_fields {
        save_report_fields(dir, "trivial", &m, &trivial_report)?;
        save_report_fields(dir, "mountain_pass", &m, &second_report)?;
    }

    // J_μ(t·u₀) with μ = 1/(2λ) decreases without bound once t is large
    let mu = 1.0 / (2.0 * lambda);
    let u0 = m.constant_field(2.0 * spec.tau0);
    let j_values: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&t| ev.j_mu(&u0.scale(t), mu).map(|j| (t, j)))
        .collect::<Result<_, _>>()?;
    let j_decreasing_at_top = j_values.windows(2).rev().take(2).all(|w| w[1].1 < w[0].1);

    let out_dir = cfg.out_dir(opts);
    let csv_rows: Vec<Vec<String>> = lambda0_table
        .iter()
        .map(|(tau, l0)| vec![fnum(*tau), fnum(*l0)])
        .collect();
    write_csv(&out_dir, "scan.csv", &["tau", "lambda0"], &csv_rows)?;
    write_plot_script(&out_dir, "plot.gp", &superlinear_plot("scan.csv"))?;

    let outcome = SuperlinearOutcome {
        ar,
        kappa_p,
        kappa_estimated,
        lambda0_table,
        lambda0_max: lambda0_peak,
        lambda,
        trivial,
        second,
        j_values,
        j_decreasing_at_top,
        seed,
    };
    write_json(&out_dir, "report.json", &outcome)?;
    Ok(outcome)
}

// ── solve ───────────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct SolveOutcome {
    pub lambda: f64,
    pub solution: SolutionSummary,
    pub seed: u64,
}

pub fn run_solve(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SolveOutcome, LabError> {
    let spec = cfg.solve.clone().unwrap_or(crate::config::SolveSpec {
        start: StartSpec::default(),
        mode: SolveMode::default(),
    });
    let m = cfg.build_manifold()?;
    let params = cfg.build_params(&m)?;
    let lambda = params.lambda;
    let nl = cfg.nonlinearity.clone();
    nl.validate_params()?;
    let ev = Evaluator::new(Arc::clone(&m), params, nl)?;
    let seed = opts.seed.unwrap_or(cfg.solver.rng_seed);
    let solver = cfg.solver.to_solver_config(opts.seed);

    let start = match spec.start {
        StartSpec::Zero => m.zero_field(),
        StartSpec::Constant { value } => m.constant_field(value),
        StartSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            m.random_smooth_field(6, 2, 0.5, 0.5, &mut rng)
        }
    };

    let report = match spec.mode {
        SolveMode::Minimize => minimize(&ev, &start, &solver)?,
        SolveMode::MountainPass => {
            let (w, _) = find_negative_endpoint(&ev, 1.0, 40)?;
            mountain_pass(&ev, &w, &solver)?
        }
    };
    if !report.converged {
        return Err(LabError::Solver(format!(
            "solve did not converge: termination {:?}, gradient norm {:.3e}",
            report.termination, report.grad_norm
        )));
    }

    let solution = summarize(&ev, &report, seed ^ WEAK_SEED_SALT)?;
    let out_dir = cfg.out_dir(opts);
    if let Some(dir) = &opts.save_fields {
        save_report_fields(dir, "solution", &m, &report)?;
    }
    let outcome = SolveOutcome {
        lambda,
        solution,
        seed,
    };
    write_json(&out_dir, "report.json", &outcome)?;
    Ok(outcome)
}
