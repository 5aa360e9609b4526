//! The randomized identity battery behind `smvar verify`.
//!
//! Six seeded suites, each checking one exact property of the electrostatic
//! reduction on randomized inputs:
//!
//! 1. `coupling` — `∫ φ_u u² dv_g = q⁻¹‖φ_u‖²_{H¹_g}`
//! 2. `symmetry` — the cross-multiplication triple agrees pairwise
//! 3. `monotone` — `∫ (uφ_u − vφ_v)(u − v) dv_g ≥ 0`
//! 4. `scaling` — `φ_{tu} = t²φ_u`
//! 5. `convexity` — `u ↦ ∫ φ_u u² dv_g` is convex along segments
//! 6. `gradient` — central finite differences of the energy match
//!    `∫ r·v dv_g` in every Ψ-mode
//!
//! A failing trial dumps the offending fields as snapshots for post-mortem.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smvar_core::energy::{Evaluator, PsiMode, SystemParams};
use smvar_core::manifold::Manifold;
use smvar_core::maxwell::{
    check_convexity, check_monotone, check_scaling, check_symmetry, coupling_energy,
    solve_maxwell,
};
use smvar_core::nonlinearity::Nonlinearity;
use smvar_core::snapshot::save_field;
use smvar_core::ScalarField;

use crate::LabError;

pub const COUPLING_REL_TOL: f64 = 1e-8;
pub const SYMMETRY_REL_TOL: f64 = 1e-8;
pub const MONOTONE_TOL: f64 = 1e-10;
pub const SCALING_TOL: f64 = 1e-10;
pub const CONVEXITY_TOL: f64 = 1e-9;
pub const GRADIENT_REL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: usize,
    /// Worst normalized violation observed (≤ 1 passes; the tolerance is
    /// folded into the normalization).
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct BatteryOutcome {
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
    pub seed: u64,
    pub trials: usize,
}

impl BatteryOutcome {
    pub fn print_table(&self) {
        println!("{:<12} {:>7} {:>14} {:>10}   status", "suite", "trials", "worst", "tol");
        for s in &self.suites {
            println!(
                "{:<12} {:>7} {:>14.3e} {:>10.1e}   {}",
                s.name,
                s.trials,
                s.worst,
                s.tol,
                if s.passed { "PASS" } else { "FAIL" }
            );
        }
    }
}

struct Dumper<'a> {
    dir: Option<&'a Path>,
    manifold: &'a Manifold,
}

impl Dumper<'_> {
    fn dump(&self, suite: &str, trial: usize, fields: &[(&str, &ScalarField)]) {
        if let Some(dir) = self.dir {
            let sub = dir.join("failures");
            for (name, field) in fields {
                let _ = save_field(
                    &sub,
                    &format!("{suite}_trial{trial}_{name}"),
                    self.manifold,
                    field,
                );
            }
        }
    }
}

/// Runs the battery on a prebuilt manifold. `e`, `q` come from the experiment
/// config; `dump_dir` receives field snapshots of failing trials.
pub fn run_battery(
    m: &Arc<Manifold>,
    e: f64,
    q: f64,
    seed: u64,
    trials: usize,
    dump_dir: Option<&Path>,
) -> Result<BatteryOutcome, LabError> {
    let dumper = Dumper {
        dir: dump_dir,
        manifold: m,
    };
    let mut suites = Vec::new();

    // 1. coupling identity
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
        let mut worst = 0.0_f64;
        for trial in 0..trials {
            let u = m.random_field(2.0, &mut rng);
            let violation = if q == 0.0 {
                let sol = solve_maxwell(m, &u, q)?;
                sol.phi.max().abs()
            } else {
                let sol = solve_maxwell(m, &u, q)?;
                let coupling = coupling_energy(m, &u, &sol)?;
                let h1 = m.h1_norm_sq(&sol.phi)?;
                (coupling - h1 / q).abs() / coupling.abs().max(1e-300)
            };
            if violation > worst {
                worst = violation;
                if violation > COUPLING_REL_TOL {
                    dumper.dump("coupling", trial, &[("u", &u)]);
                }
            }
        }
        suites.push(SuiteResult {
            name: "coupling",
            trials,
            worst,
            tol: COUPLING_REL_TOL,
            passed: worst <= COUPLING_REL_TOL,
        });
    }

    // 2. symmetry triple
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x02);
        let mut worst = 0.0_f64;
        for trial in 0..trials {
            let u = m.random_field(1.5, &mut rng);
            let v = m.random_field(1.5, &mut rng);
            let (lhs, mid, rhs) = check_symmetry(m, &u, &v, q)?;
            let scale = lhs.abs().max(mid.abs()).max(rhs.abs()).max(1e-300);
            let violation = ((lhs - mid).abs().max((mid - rhs).abs()).max((lhs - rhs).abs()))
                / scale;
            if violation > worst {
                worst = violation;
                if violation > SYMMETRY_REL_TOL {
                    dumper.dump("symmetry", trial, &[("u", &u), ("v", &v)]);
                }
            }
        }
        suites.push(SuiteResult {
            name: "symmetry",
            trials,
            worst,
            tol: SYMMETRY_REL_TOL,
            passed: worst <= SYMMETRY_REL_TOL,
        });
    }

    // 3. monotonicity
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x03);
        let mut worst = 0.0_f64;
        for trial in 0..trials {
            let u = m.random_field(1.5, &mut rng);
            let v = m.random_field(1.5, &mut rng);
            let value = check_monotone(m, &u, &v, q)?;
            let su = solve_maxwell(m, &u, q)?;
            let sv = solve_maxwell(m, &v, q)?;
            let scale = (coupling_energy(m, &u, &su)?.abs()
                + coupling_energy(m, &v, &sv)?.abs())
            .max(1.0);
            let violation = (-value / scale).max(0.0);
            if violation > worst {
                worst = violation;
                if violation > MONOTONE_TOL {
                    dumper.dump("monotone", trial, &[("u", &u), ("v", &v)]);
                }
            }
        }
        suites.push(SuiteResult {
            name: "monotone",
            trials,
            worst,
            tol: MONOTONE_TOL,
            passed: worst <= MONOTONE_TOL,
        });
    }

    // 4. quadratic scaling
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
        let mut worst = 0.0_f64;
        for trial in 0..trials {
            let u = m.random_field(1.0, &mut rng);
            let t: f64 = rng.gen_range(-3.0..3.0);
            let deviation = check_scaling(m, &u, t, q)?;
            let sol = solve_maxwell(m, &u, q)?;
            let scale = (t * t * m.l2_norm(&sol.phi)?).abs().max(1.0);
            let violation = deviation / scale;
            if violation > worst {
                worst = violation;
                if violation > SCALING_TOL {
                    dumper.dump("scaling", trial, &[("u", &u)]);
                }
            }
        }
        suites.push(SuiteResult {
            name: "scaling",
            trials,
            worst,
            tol: SCALING_TOL,
            passed: worst <= SCALING_TOL,
        });
    }

    // 5. convexity of the coupling map
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05);
        let mut worst = 0.0_f64;
        for trial in 0..trials {
            let u = m.random_field(1.5, &mut rng);
            let v = m.random_field(1.5, &mut rng);
            let t: f64 = rng.gen_range(0.0..=1.0);
            let (lhs, rhs) = check_convexity(m, &u, &v, t, q)?;
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            let violation = ((lhs - rhs) / scale).max(0.0);
            if violation > worst {
                worst = violation;
                if violation > CONVEXITY_TOL {
                    dumper.dump("convexity", trial, &[("u", &u), ("v", &v)]);
                }
            }
        }
        suites.push(SuiteResult {
            name: "convexity",
            trials,
            worst,
            tol: CONVEXITY_TOL,
            passed: worst <= CONVEXITY_TOL,
        });
    }

    // 6. gradient consistency per Ψ-mode
    {
        let pairs_per_mode = 20.max(trials / 5);
        let mut worst = 0.0_f64;
        let mode_setups: [(PsiMode, Nonlinearity, f64, f64); 3] = [
            (PsiMode::LambdaAlpha, Nonlinearity::LogSquare, e, 0.7),
            (
                PsiMode::LambdaAlphaPlusMu0Beta,
                Nonlinearity::SyntheticWells { mu0: 1.0 },
                0.4,
                0.4,
            ),
            (
                PsiMode::LambdaConstant,
                Nonlinearity::ArPower { p: 5.0 },
                e,
                0.3,
            ),
        ];
        for (i, (mode, nl, e_mode, lambda)) in mode_setups.into_iter().enumerate() {
            let params = SystemParams {
                e: e_mode,
                q,
                lambda,
                mu0: if mode == PsiMode::LambdaAlphaPlusMu0Beta { 1.0 } else { 0.0 },
                alpha: m.constant_field(1.0),
                beta: m.constant_field(1.0),
                psi_mode: mode,
            };
            let ev = Evaluator::new(Arc::clone(m), params, nl)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x06 + i as u64));
            for trial in 0..pairs_per_mode {
                let u = m.random_smooth_field(6, 2, 0.5, 0.8, &mut rng);
                let v = m.random_smooth_field(6, 2, 0.5, 0.0, &mut rng);
                let grad = ev.gradient(&u)?;
                // a Sobolev gradient norm that is not a finite non-negative
                // number means the operator itself is broken
                if !grad.norm.is_finite() {
                    worst = f64::INFINITY;
                    dumper.dump("gradient", trial, &[("u", &u)]);
                    break;
                }
                let pairing = m.l2_inner(&grad.residual, &v)?;
                let h = 1e-5;
                let plus = ev.energy(&u.lin_comb(1.0, &v, h))?.total;
                let minus = ev.energy(&u.lin_comb(1.0, &v, -h))?.total;
                let fd = (plus - minus) / (2.0 * h);
                // floor the denominator at a fraction of ‖r‖‖v‖ so the rare
                // near-orthogonal pair does not amplify round-off into a
                // spurious failure
                let floor = 1e-6 * m.l2_norm(&grad.residual)? * m.l2_norm(&v)?;
                let violation = (fd - pairing).abs() / pairing.abs().max(floor).max(1e-300);
                if violation > worst {
                    worst = violation;
                    if violation > GRADIENT_REL_TOL {
                        dumper.dump("gradient", trial, &[("u", &u), ("v", &v)]);
                    }
                }
            }
        }
        suites.push(SuiteResult {
            name: "gradient",
            trials: pairs_per_mode * 3,
            worst,
            tol: GRADIENT_REL_TOL,
            passed: worst <= GRADIENT_REL_TOL,
        });
    }

    let all_passed = suites.iter().all(|s| s.passed);
    Ok(BatteryOutcome {
        suites,
        all_passed,
        seed,
        trials,
    })
}
