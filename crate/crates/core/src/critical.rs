//! Critical-point solvers for the reduced functional.
//!
//! Three search strategies, all certified a posteriori by the gradient norm
//! and the weak-form residual test rather than by trusting the iteration:
//!
//! - [`minimize`]: descent along the `H¹_β`-preconditioned (Sobolev)
//!   gradient with Armijo backtracking. Plain `L²` gradient flow on a grid
//!   is stiff with mesh-dependent step limits; preconditioning by
//!   `(-Δ_g + β)⁻¹` makes iteration counts essentially independent of `N`.
//! - [`mountain_pass`]: path deformation between the origin and a
//!   negative-energy endpoint. Each sweep locates the continuous maximum
//!   along the polyline (golden section on the two segments adjacent to the
//!   highest node — a nodal maximum alone saturates at the node spacing),
//!   moves that point one descent step, and redistributes nodes by `H¹_β`
//!   arc length. The minimax level decreases monotonically and the limiting
//!   max-node is the saddle candidate.
//! - [`multi_start_deflated`]: seeded multi-start over the well-component
//!   representatives plus random smooth fields, with `H¹_g`-distance
//!   clustering of the converged set.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{EnergyBreakdown, Evaluator, PsiMode};
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::manifold::Manifold;
use crate::nonlinearity::{phi_components, PhiComponents};

const ARMIJO_SLOPE_FRACTION: f64 = 1e-4;
const STEP_UNDERFLOW: f64 = 1e-16;

/// Tolerances and knobs shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Convergence threshold on the `H¹_β` norm of the Sobolev gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// `‖u‖_{H¹_g}` at or below this is the trivial solution.
    pub trivial_tol: f64,
    /// Mountain-pass path resolution (≥ 3, odd).
    pub path_points: usize,
    /// `H¹_g` clustering radius for deflated multi-start.
    pub deflation_radius: f64,
    pub rng_seed: u64,
    /// Energy-sign margin used by the classification (configuration, never
    /// hard-coded: regime scans sweep it).
    pub energy_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-8,
            max_iters: 10_000,
            trivial_tol: 1e-6,
            path_points: 41,
            deflation_radius: 1e-2,
            rng_seed: 1_398_164_481,
            energy_tol: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| CoreError::BadSolverConfig(msg);
        if !(self.grad_tol > 0.0 && self.trivial_tol > 0.0 && self.deflation_radius > 0.0) {
            return Err(bad("tolerances must be positive".into()));
        }
        if self.energy_tol < 0.0 {
            return Err(bad("energy_tol must be non-negative".into()));
        }
        if self.path_points < 3 || self.path_points.is_multiple_of(2) {
            return Err(bad(format!(
                "path_points must be ≥ 3 and odd, got {}",
                self.path_points
            )));
        }
        if self.max_iters == 0 {
            return Err(bad("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    NegativeEnergyMin,
    MountainPass,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    MaxIters,
    StepUnderflow,
    PathCollapse,
}

/// A converged (or diagnosed) critical-point candidate with telemetry.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    #[serde(skip)]
    pub u: ScalarField,
    #[serde(skip)]
    pub phi: ScalarField,
    pub energy: EnergyBreakdown,
    /// `H¹_β` norm of the Sobolev gradient at `u`.
    pub grad_norm: f64,
    pub classification: Classification,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// `‖u‖_{H¹_g}`, the scale the classification thresholds act on.
    pub u_h1_norm: f64,
    /// Pointwise minimum of `u`. Sublinear solutions are expected
    /// non-negative; a visibly negative minimum is reported rather than
    /// projected away.
    pub u_min: f64,
}

fn classify(
    h1_norm: f64,
    total_energy: f64,
    from_mountain_pass: bool,
    cfg: &SolverConfig,
) -> Classification {
    if h1_norm <= cfg.trivial_tol {
        Classification::Trivial
    } else if from_mountain_pass && total_energy > cfg.energy_tol {
        Classification::MountainPass
    } else if total_energy < -cfg.energy_tol {
        Classification::NegativeEnergyMin
    } else {
        Classification::Other
    }
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    ev: &Evaluator,
    u: ScalarField,
    energy: EnergyBreakdown,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    termination: Termination,
    from_mountain_pass: bool,
    cfg: &SolverConfig,
) -> Result<CriticalPointReport> {
    let phi = ev.phi(&u)?.phi.clone();
    let h1 = ev.manifold().h1_norm(&u)?;
    let u_min = u.min();
    Ok(CriticalPointReport {
        classification: classify(h1, energy.total, from_mountain_pass, cfg),
        u,
        phi,
        energy,
        grad_norm,
        iterations,
        converged,
        termination,
        u_h1_norm: h1,
        u_min,
    })
}

/// Round-off floor of an energy comparison: the total is a difference of the
/// breakdown terms, so decreases below this are not observable in `f64`.
fn energy_noise_floor(bd: &EnergyBreakdown) -> f64 {
    1e-14 * (bd.dirichlet_mass.abs() + bd.coupling.abs() + bd.potential.abs())
}

/// An accepted descent step, with the trial gradient when the acceptance
/// already had to compute it.
struct AcceptedStep {
    u: ScalarField,
    energy: EnergyBreakdown,
    step: f64,
    gradient: Option<crate::energy::GradientPair>,
}

/// One backtracked descent step from `(u, energy)` along `-direction`.
///
/// Two acceptance regimes. While the Armijo demand `c₁·t·slope` is above the
/// round-off floor of the energy, the plain sufficient-decrease test runs.
/// Once the demand drops below what the energy evaluation can resolve,
/// energy comparisons are noise; the step is then accepted on gradient
/// contraction instead (with the energy still barred from rising beyond the
/// floor), which lets the iteration descend to gradient norms far below the
/// `√ε` value-resolution limit.
///
/// Returns `None` on step underflow.
fn armijo_step(
    ev: &Evaluator,
    u: &ScalarField,
    energy: &EnergyBreakdown,
    direction: &ScalarField,
    slope: f64,
    grad_norm: f64,
    step0: f64,
) -> Result<Option<AcceptedStep>> {
    let floor = energy_noise_floor(energy);
    let mut t = step0;
    loop {
        let trial = u.lin_comb(1.0, direction, -t);
        let trial_energy = ev.energy(&trial)?;
        let demand = ARMIJO_SLOPE_FRACTION * t * slope;
        if demand.abs() >= floor {
            if trial_energy.total <= energy.total + demand {
                return Ok(Some(AcceptedStep {
                    u: trial,
                    energy: trial_energy,
                    step: t,
                    gradient: None,
                }));
            }
        } else if trial_energy.total <= energy.total + floor {
            let trial_grad = ev.gradient(&trial)?;
            if trial_grad.norm < grad_norm {
                return Ok(Some(AcceptedStep {
                    u: trial,
                    energy: trial_energy,
                    step: t,
                    gradient: Some(trial_grad),
                }));
            }
        }
        t *= 0.5;
        if t < STEP_UNDERFLOW {
            return Ok(None);
        }
    }
}

/// Sobolev-gradient descent on `E_λ` from `u0`.
///
/// Energy is non-increasing across accepted steps; terminates when the
/// gradient norm drops to `grad_tol`, on iteration exhaustion, or on
/// line-search underflow (reported unconverged with diagnostics).
pub fn minimize(ev: &Evaluator, u0: &ScalarField, cfg: &SolverConfig) -> Result<CriticalPointReport> {
    cfg.validate()?;
    let mut u = u0.clone();
    let mut energy = ev.energy(&u)?;
    let mut grad = ev.gradient(&u)?;
    let mut step = 1.0;

    for iter in 0..cfg.max_iters {
        if grad.norm <= cfg.grad_tol {
            return build_report(ev, u, energy, grad.norm, iter, true, Termination::GradTol, false, cfg);
        }
        let slope = -grad.norm * grad.norm;
        match armijo_step(ev, &u, &energy, &grad.sobolev, slope, grad.norm, step)? {
            Some(accepted) => {
                u = accepted.u;
                energy = accepted.energy;
                step = (accepted.step * 2.0).min(1e3);
                grad = match accepted.gradient {
                    Some(g) => g,
                    None => ev.gradient(&u)?,
                };
            }
            None => {
                return build_report(
                    ev,
                    u,
                    energy,
                    grad.norm,
                    iter,
                    false,
                    Termination::StepUnderflow,
                    false,
                    cfg,
                );
            }
        }
    }
    build_report(
        ev,
        u,
        energy,
        grad.norm,
        cfg.max_iters,
        false,
        Termination::MaxIters,
        false,
        cfg,
    )
}

/// Scales the constant field `start` up by doubling (at most `max_doublings`
/// times) until the energy goes negative; the mountain-pass endpoint.
pub fn find_negative_endpoint(
    ev: &Evaluator,
    start: f64,
    max_doublings: usize,
) -> Result<(ScalarField, EnergyBreakdown)> {
    let mut t = if start > 0.0 { start } else { 1.0 };
    let mut last = 0.0;
    for _ in 0..=max_doublings {
        let w = ev.manifold().constant_field(t);
        let e = ev.energy(&w)?;
        if e.total < 0.0 {
            return Ok((w, e));
        }
        last = e.total;
        t *= 2.0;
    }
    Err(CoreError::EndpointNotNegative { energy: last })
}

/// Numerical mountain pass between `0` and `endpoint_w` (which must have
/// strictly negative energy).
///
/// Each sweep: (a) locate the path maximum — the highest node, sharpened by
/// golden-section maximization along its two adjacent segments; (b) move that
/// point one Sobolev descent step; (c) redistribute the nodes along the
/// deformed path by `H¹_β` arc length. Terminates when the max point's
/// gradient norm reaches `grad_tol`; a maximum at either endpoint means the
/// saddle is no longer bracketed and is reported as a path collapse.
pub fn mountain_pass(
    ev: &Evaluator,
    endpoint_w: &ScalarField,
    cfg: &SolverConfig,
) -> Result<CriticalPointReport> {
    cfg.validate()?;
    let zero = ev.manifold().zero_field();
    let e_zero = ev.energy(&zero)?.total;
    if e_zero.abs() > 1e-10 {
        return Err(CoreError::InvalidParameter {
            what: "E(0) must vanish (F(0) = 0)",
            value: e_zero,
        });
    }
    let e_w = ev.energy(endpoint_w)?;
    if e_w.total >= 0.0 {
        return Err(CoreError::EndpointNotNegative { energy: e_w.total });
    }

    let p = cfg.path_points;
    let mut nodes: Vec<ScalarField> = (0..p)
        .map(|i| endpoint_w.scale(i as f64 / (p - 1) as f64))
        .collect();
    let mut energies: Vec<f64> = nodes
        .iter()
        .map(|n| ev.energy(n).map(|e| e.total))
        .collect::<Result<_>>()?;

    let mut step = 1.0;
    for iter in 0..cfg.max_iters {
        let i_max = energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        if i_max == 0 || i_max == p - 1 {
            let u = nodes[i_max].clone();
            let energy = ev.energy(&u)?;
            let grad = ev.gradient(&u)?;
            return build_report(
                ev,
                u,
                energy,
                grad.norm,
                iter,
                false,
                Termination::PathCollapse,
                true,
                cfg,
            );
        }

        // (a) continuous path maximum near the highest node
        let candidate = refine_path_max(ev, &nodes, i_max)?;
        let energy = ev.energy(&candidate)?;
        let grad = ev.gradient(&candidate)?;
        if grad.norm <= cfg.grad_tol {
            return build_report(
                ev,
                candidate,
                energy,
                grad.norm,
                iter,
                true,
                Termination::GradTol,
                true,
                cfg,
            );
        }

        // (b) one descent step on the max point
        let slope = -grad.norm * grad.norm;
        match armijo_step(ev, &candidate, &energy, &grad.sobolev, slope, grad.norm, step)? {
            Some(accepted) => {
                step = (accepted.step * 2.0).min(1e3);
                energies[i_max] = accepted.energy.total;
                nodes[i_max] = accepted.u;
            }
            None => {
                return build_report(
                    ev,
                    candidate,
                    energy,
                    grad.norm,
                    iter,
                    false,
                    Termination::StepUnderflow,
                    true,
                    cfg,
                );
            }
        }

        // (c) re-spline: uniform H¹_β arc-length redistribution
        nodes = redistribute(ev, nodes)?;
        for (n, e) in nodes.iter().zip(energies.iter_mut()) {
            *e = ev.energy(n)?.total;
        }
    }

    let i_max = energies
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let u = nodes[i_max].clone();
    let energy = ev.energy(&u)?;
    let grad = ev.gradient(&u)?;
    build_report(
        ev,
        u,
        energy,
        grad.norm,
        cfg.max_iters,
        false,
        Termination::MaxIters,
        true,
        cfg,
    )
}

/// Sharpens the discrete path maximum at node `i_max` to the continuous
/// maximum along the two adjacent polyline segments.
///
/// Works on the tangential derivative `g(σ) = ∫ r(γ(σ))·(b−a) dv_g` rather
/// than on energy values: locating a smooth maximum from values alone is
/// `√ε`-limited, while a bisection on the sign change of `g` pins the
/// stationary point to machine precision. When neither segment brackets a
/// sign change the node itself is the (kinked) path maximum.
fn refine_path_max(ev: &Evaluator, nodes: &[ScalarField], i_max: usize) -> Result<ScalarField> {
    let m = ev.manifold();
    let tangential =
        |point: &ScalarField, dir: &ScalarField| -> Result<f64> {
            m.l2_inner(&ev.residual(point)?, dir)
        };

    for (a, b) in [(i_max - 1, i_max), (i_max, i_max + 1)] {
        let (na, nb) = (&nodes[a], &nodes[b]);
        let dir = nb - na;
        let g0 = tangential(na, &dir)?;
        let g1 = tangential(nb, &dir)?;
        if !(g0 > 0.0 && g1 < 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..52 {
            let mid = 0.5 * (lo + hi);
            let gm = tangential(&na.lin_comb(1.0 - mid, nb, mid), &dir)?;
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sigma = 0.5 * (lo + hi);
        return Ok(na.lin_comb(1.0 - sigma, nb, sigma));
    }
    Ok(nodes[i_max].clone())
}

fn redistribute(ev: &Evaluator, nodes: Vec<ScalarField>) -> Result<Vec<ScalarField>> {
    let m = ev.manifold();
    let beta = &ev.params().beta;
    let p = nodes.len();
    let mut cumulative = vec![0.0; p];
    for i in 1..p {
        let d = m
            .h1_beta_norm_sq(beta, &(&nodes[i] - &nodes[i - 1]))?
            .sqrt();
        cumulative[i] = cumulative[i - 1] + d;
    }
    let total = cumulative[p - 1];
    if total == 0.0 {
        return Ok(nodes);
    }
    let mut out = Vec::with_capacity(p);
    out.push(nodes[0].clone());
    let mut seg = 0;
    for j in 1..p - 1 {
        let target = total * j as f64 / (p - 1) as f64;
        while seg + 2 < p && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let theta = if span > 0.0 {
            (target - cumulative[seg]) / span
        } else {
            0.0
        };
        out.push(nodes[seg].lin_comb(1.0 - theta, &nodes[seg + 1], theta));
    }
    out.push(nodes[p - 1].clone());
    Ok(out)
}

/// Outcome of the deflated multi-start search.
#[derive(Debug, Serialize)]
pub struct MultiStartReport {
    /// Distinct converged representatives, sorted by energy.
    pub solutions: Vec<CriticalPointReport>,
    /// `N(u)` for each representative (the multi-well selector functional).
    pub n_values: Vec<f64>,
    /// How many representatives satisfy `N(u) < τ`.
    pub n_below_tau: usize,
    pub n_starts: usize,
    pub n_unconverged: usize,
}

/// Multi-start minimization with well-component seeding and `H¹_g`
/// clustering. Requires the multi-well mode with `e = λ`.
///
/// Seeds are the constant fields at each component representative of
/// `Φ_{μ₀}` plus seeded random smooth fields up to `n_starts`. Converged
/// results within `deflation_radius` of an already-kept representative (in
/// `H¹_g`) deflate into that cluster; representatives are kept in order of
/// increasing energy. An empty list is a valid outcome.
#[allow(clippy::too_many_arguments)]
pub fn multi_start_deflated(
    ev: &Evaluator,
    cfg: &SolverConfig,
    n_starts: usize,
    component_domain: (f64, f64),
    component_grid: usize,
    tau: f64,
) -> Result<MultiStartReport> {
    cfg.validate()?;
    if ev.params().psi_mode != PsiMode::LambdaAlphaPlusMu0Beta {
        return Err(CoreError::WrongPsiMode {
            expected: PsiMode::LambdaAlphaPlusMu0Beta.name(),
            got: ev.params().psi_mode.name(),
        });
    }
    if (ev.params().e - ev.params().lambda).abs() > 1e-15 * ev.params().e.abs().max(1.0) {
        return Err(CoreError::InvalidParameter {
            what: "multi-well regime runs at e = lambda",
            value: ev.params().e - ev.params().lambda,
        });
    }

    let components = phi_components(
        ev.nonlinearity(),
        ev.params().mu0,
        component_domain,
        component_grid,
    )?;
    let reports = run_starts(ev, cfg, n_starts, &components, component_domain)?;

    let m = ev.manifold();
    let mut converged: Vec<CriticalPointReport> =
        reports.iter().filter(|r| r.converged).cloned().collect();
    let n_unconverged = reports.len() - converged.len();
    converged.sort_by(|a, b| a.energy.total.total_cmp(&b.energy.total));

    let mut kept: Vec<CriticalPointReport> = Vec::new();
    for report in converged {
        let mut distinct = true;
        for existing in &kept {
            if m.h1_dist(&report.u, &existing.u)? <= cfg.deflation_radius {
                distinct = false;
                break;
            }
        }
        if distinct {
            kept.push(report);
        }
    }

    let mut n_values = Vec::with_capacity(kept.len());
    for r in &kept {
        n_values.push(ev.functional_parts(&r.u)?.n_value);
    }
    let n_below_tau = n_values.iter().filter(|&&n| n < tau).count();

    Ok(MultiStartReport {
        n_starts: n_starts.max(components.m),
        n_unconverged,
        solutions: kept,
        n_values,
        n_below_tau,
    })
}

fn run_starts(
    ev: &Evaluator,
    cfg: &SolverConfig,
    n_starts: usize,
    components: &PhiComponents,
    domain: (f64, f64),
) -> Result<Vec<CriticalPointReport>> {
    let m = ev.manifold();
    let mut seeds: Vec<ScalarField> = components
        .representatives
        .iter()
        .map(|&t| m.constant_field(t))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let span = domain.1 - domain.0;
    while seeds.len() < n_starts {
        let offset = rng.gen_range(domain.0..=domain.1);
        seeds.push(m.random_smooth_field(6, 2, 0.2 * span, offset, &mut rng));
    }
    seeds.iter().map(|s| minimize(ev, s, cfg)).collect()
}

/// Numerical lower bound for the Sobolev embedding constant
/// `κ_p = sup ‖u‖_{L^p} / ‖u‖_{H¹_g}`, by normalized Sobolev-gradient ascent
/// of the quotient from five seeded starts.
pub fn estimate_embedding_constant(m: &Arc<Manifold>, p: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(1.0..6.0).contains(&p) {
        return Err(CoreError::InvalidParameter { what: "p", value: p });
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut starts = vec![m.constant_field(1.0)];
    for _ in 0..4 {
        starts.push(m.random_smooth_field(6, 2, 1.0, rng.gen_range(-0.5..=0.5), &mut rng));
    }

    let mut best = 0.0_f64;
    for start in starts {
        let norm0 = m.h1_norm(&start)?;
        if norm0 == 0.0 {
            continue;
        }
        let mut u = start.scale(1.0 / norm0);
        let mut ratio = m.lp_norm(&u, p)?;
        let mut eta = 0.5;
        for _ in 0..300 {
            // ascent direction: (-Δ+1)⁻¹ of δ‖u‖_p minus the radial part
            let a1p = ratio.powf(1.0 - p);
            let lp_grad = u.map(|v| a1p * v.abs().powf(p - 2.0) * v);
            let lifted = crate::maxwell::solve_spd(
                m,
                crate::maxwell::Coefficient::Const(1.0),
                &lp_grad,
                crate::maxwell::SOLVE_REL_TOL,
            )?
            .0;
            let direction = lifted.lin_comb(1.0, &u, -ratio);
            let mut improved = false;
            while eta > 1e-12 {
                let trial = u.lin_comb(1.0, &direction, eta);
                let tn = m.h1_norm(&trial)?;
                if tn > 0.0 {
                    let normalized = trial.scale(1.0 / tn);
                    let trial_ratio = m.lp_norm(&normalized, p)?;
                    if trial_ratio > ratio {
                        u = normalized;
                        ratio = trial_ratio;
                        eta *= 1.2;
                        improved = true;
                        break;
                    }
                }
                eta *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(ratio);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::SystemParams;
    use crate::nonlinearity::{GVariant, Nonlinearity};

    fn evaluator(
        n: usize,
        nl: Nonlinearity,
        psi_mode: PsiMode,
        e: f64,
        q: f64,
        lambda: f64,
        mu0: f64,
    ) -> (Arc<Manifold>, Evaluator) {
        let m = Arc::new(Manifold::build_torus(n, 1.0, None).unwrap());
        let params = SystemParams {
            e,
            q,
            lambda,
            mu0,
            alpha: m.constant_field(1.0),
            beta: m.constant_field(1.0),
            psi_mode,
        };
        let ev = Evaluator::new(Arc::clone(&m), params, nl).unwrap();
        (m, ev)
    }

    #[test]
    fn lambda_zero_descends_to_trivial() {
        let (m, ev) = evaluator(8, Nonlinearity::LogSquare, PsiMode::LambdaAlpha, 1.0, 1.0, 0.0, 0.0);
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let u0 = m.random_smooth_field(4, 2, 0.5, 0.3, &mut rng);
        let report = minimize(&ev, &u0, &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.classification, Classification::Trivial);
        assert!(report.energy.total.abs() < 1e-12);
    }

    #[test]
    fn subthreshold_lambda_only_finds_trivial() {
        let nl = Nonlinearity::PiecewiseG {
            variant: GVariant::MinusOne,
            a: 2.0,
        };
        let c_f = nl.max_slope().unwrap().value;
        let (m, ev) = evaluator(8, nl, PsiMode::LambdaAlpha, 1.0, 1.0, 0.9 / c_f, 0.0);
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let u0 = m.random_smooth_field(5, 2, 0.6, rng.gen_range(0.0..2.0), &mut rng);
            let report = minimize(&ev, &u0, &cfg).unwrap();
            assert!(report.converged);
            assert_eq!(report.classification, Classification::Trivial);
        }
    }

    #[test]
    fn two_solution_regime_produces_min_and_pass() {
        let nl = Nonlinearity::PiecewiseG {
            variant: GVariant::MinusOne,
            a: 2.0,
        };
        let quotient = nl.max_energy_quotient(1.0, 1.0).unwrap();
        let lambda = 1.1 / quotient.value;
        let (m, ev) = evaluator(8, nl, PsiMode::LambdaAlpha, 1.0, 1.0, lambda, 0.0);
        let cfg = SolverConfig::default();

        let start = m.constant_field(quotient.at);
        let min_report = minimize(&ev, &start, &cfg).unwrap();
        assert!(min_report.converged);
        assert_eq!(min_report.classification, Classification::NegativeEnergyMin);
        assert!(min_report.energy.total < 0.0);

        let (w, _) = find_negative_endpoint(&ev, quotient.at, 40).unwrap();
        let mp_report = mountain_pass(&ev, &w, &cfg).unwrap();
        assert!(mp_report.converged, "termination {:?}", mp_report.termination);
        assert_eq!(mp_report.classification, Classification::MountainPass);
        assert!(mp_report.energy.total > 0.0);
        let separation = m.h1_dist(&min_report.u, &mp_report.u).unwrap();
        assert!(separation > 1e-3, "separation {separation}");
        // minimax level dominates the minimum level
        assert!(mp_report.energy.total > min_report.energy.total);
    }

    #[test]
    fn mountain_pass_rejects_nonnegative_endpoint() {
        let (m, ev) = evaluator(8, Nonlinearity::LogSquare, PsiMode::LambdaAlpha, 1.0, 1.0, 0.1, 0.0);
        let w = m.constant_field(1.0);
        assert!(matches!(
            mountain_pass(&ev, &w, &SolverConfig::default()),
            Err(CoreError::EndpointNotNegative { .. })
        ));
    }

    #[test]
    fn endpoint_search_fails_for_vanishing_nonlinearity() {
        let zero_nl = Nonlinearity::Tabulated {
            knots: vec![(-1.0, 0.0), (1.0, 0.0)],
        };
        let (_, ev) = evaluator(8, zero_nl, PsiMode::LambdaAlpha, 1.0, 1.0, 5.0, 0.0);
        assert!(matches!(
            find_negative_endpoint(&ev, 1.0, 40),
            Err(CoreError::EndpointNotNegative { .. })
        ));
    }

    #[test]
    fn multistart_finds_all_three_wells() {
        let nl = Nonlinearity::SyntheticWells { mu0: 1.0 };
        let lambda = 1e-3;
        let m = Arc::new(Manifold::build_torus(8, 1.0, None).unwrap());
        let params = SystemParams {
            e: lambda,
            q: 1.0,
            lambda,
            mu0: 1.0,
            alpha: m.constant_field(1.0),
            beta: m.constant_field(1.0),
            psi_mode: PsiMode::LambdaAlphaPlusMu0Beta,
        };
        let ev = Evaluator::new(Arc::clone(&m), params, nl).unwrap();
        let cfg = SolverConfig::default();
        let tau = 0.1; // ‖β‖₁·inf Φ = 0, so anything below 0.1 counts
        let out = multi_start_deflated(&ev, &cfg, 8, (-1.0, 4.0), 20_001, tau).unwrap();
        assert!(out.solutions.len() >= 3, "found {}", out.solutions.len());
        assert!(out.n_below_tau >= 3);
        // wells sit near the constants 0, 1, 2
        for expect in [0.0, 1.0, 2.0] {
            let hit = out.solutions.iter().any(|r| {
                let mean = r.u.values().iter().sum::<f64>() / r.u.len() as f64;
                (mean - expect).abs() < 0.2
            });
            assert!(hit, "no cluster near the well at {expect}");
        }
    }

    #[test]
    fn multistart_is_bitwise_deterministic() {
        let nl = Nonlinearity::SyntheticWells { mu0: 1.0 };
        let lambda = 1e-3;
        let m = Arc::new(Manifold::build_torus(8, 1.0, None).unwrap());
        let params = SystemParams {
            e: lambda,
            q: 1.0,
            lambda,
            mu0: 1.0,
            alpha: m.constant_field(1.0),
            beta: m.constant_field(1.0),
            psi_mode: PsiMode::LambdaAlphaPlusMu0Beta,
        };
        let ev = Evaluator::new(Arc::clone(&m), params.clone(), nl.clone()).unwrap();
        let cfg = SolverConfig::default();
        let a = multi_start_deflated(&ev, &cfg, 6, (-1.0, 4.0), 20_001, 0.1).unwrap();
        let ev2 = Evaluator::new(Arc::clone(&m), params, nl).unwrap();
        let b = multi_start_deflated(&ev2, &cfg, 6, (-1.0, 4.0), 20_001, 0.1).unwrap();
        assert_eq!(a.solutions.len(), b.solutions.len());
        for (ra, rb) in a.solutions.iter().zip(&b.solutions) {
            assert_eq!(ra.u.values(), rb.u.values(), "reports must be bitwise equal");
        }
    }

    #[test]
    fn multistart_lambda_to_zero_limit_recovers_pure_wells() {
        // at vanishing coupling the distinct solutions are the constant
        // minimizers of Φ_{μ₀} themselves
        let nl = Nonlinearity::SyntheticWells { mu0: 1.0 };
        let lambda = 1e-9;
        let m = Arc::new(Manifold::build_torus(8, 1.0, None).unwrap());
        let params = SystemParams {
            e: lambda,
            q: 1.0,
            lambda,
            mu0: 1.0,
            alpha: m.constant_field(1.0),
            beta: m.constant_field(1.0),
            psi_mode: PsiMode::LambdaAlphaPlusMu0Beta,
        };
        let ev = Evaluator::new(Arc::clone(&m), params, nl).unwrap();
        let out =
            multi_start_deflated(&ev, &SolverConfig::default(), 3, (-1.0, 4.0), 20_001, 0.1)
                .unwrap();
        assert_eq!(out.solutions.len(), 3);
        let mut means: Vec<f64> = out
            .solutions
            .iter()
            .map(|r| r.u.values().iter().sum::<f64>() / r.u.len() as f64)
            .collect();
        means.sort_by(f64::total_cmp);
        for (mean, well) in means.iter().zip([0.0, 1.0, 2.0]) {
            assert!((mean - well).abs() < 1e-5, "well {well}, got {mean}");
        }
        // sublinear-style solutions report no visible negativity
        for r in &out.solutions {
            assert!(r.u_min >= -1e-6, "negative part flagged: {}", r.u_min);
        }
    }

    #[test]
    fn multistart_single_well_gives_one_cluster() {
        // f(t) = t with μ₀ = ½ gives Φ = ¼t²: a single well at the origin
        let nl = Nonlinearity::Tabulated {
            knots: vec![(0.0, 0.0), (1e3, 1e3)],
        };
        let lambda = 1e-3;
        let m = Arc::new(Manifold::build_torus(8, 1.0, None).unwrap());
        let params = SystemParams {
            e: lambda,
            q: 1.0,
            lambda,
            mu0: 0.5,
            alpha: m.constant_field(1.0),
            beta: m.constant_field(1.0),
            psi_mode: PsiMode::LambdaAlphaPlusMu0Beta,
        };
        let ev = Evaluator::new(Arc::clone(&m), params, nl).unwrap();
        let out =
            multi_start_deflated(&ev, &SolverConfig::default(), 5, (-2.0, 2.0), 20_001, 0.1)
                .unwrap();
        assert_eq!(out.solutions.len(), 1);
        assert!(out.solutions[0].u_h1_norm < 1e-5);
    }

    #[test]
    fn multistart_guards_the_regime() {
        let (_, ev) = evaluator(8, Nonlinearity::LogSquare, PsiMode::LambdaAlpha, 1.0, 1.0, 0.1, 0.0);
        assert!(matches!(
            multi_start_deflated(&ev, &SolverConfig::default(), 4, (-1.0, 1.0), 10_000, 1.0),
            Err(CoreError::WrongPsiMode { .. })
        ));
    }

    #[test]
    fn embedding_constant_bounds() {
        let m = Arc::new(Manifold::build_torus(8, 1.0, None).unwrap());
        let cfg = SolverConfig::default();
        // constant test field gives ‖u‖_p/‖u‖_{H¹} = Vol^{1/p - 1/2} = 1 here
        let k2 = estimate_embedding_constant(&m, 2.0, &cfg).unwrap();
        assert!(k2 >= 1.0 - 1e-9);
        assert!(k2 <= 1.0 + 1e-9, "κ₂ = 1 exactly on the unit torus, got {k2}");
        let k4 = estimate_embedding_constant(&m, 4.0, &cfg).unwrap();
        assert!(k4 >= 1.0 - 1e-9);
        assert!(estimate_embedding_constant(&m, 6.0, &cfg).is_err());
    }
}
