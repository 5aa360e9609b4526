//! The reduced one-variable energy functional and its gradient.
//!
//! Substituting the unique Maxwell solution `φ_u` into the two-field action
//! leaves a functional of `u` alone:
//!
//! ```text
//!   E_λ(u) = ½‖u‖_β² + (e/4) ∫ φ_u u² dv_g − ∫ Ψ(λ,x) F(u) dv_g,
//! ```
//!
//! whose Gâteaux derivative — the nontrivial point being that the implicit
//! `φ_u` dependence contributes exactly `e·φ_u·u` and nothing else — has the
//! `L²(dv_g)` representation
//!
//! ```text
//!   r = -Δ_g u + β u + e φ_u u − Ψ(λ,·) f(u),
//! ```
//!
//! so that `E'_λ(u)(v) = ∫ r·v dv_g` for every test field `v`. Optimizers use
//! the Sobolev representation `s` solving `(-Δ_g + β) s = r` instead: the
//! `H¹_β`-preconditioned direction makes descent step sizes mesh-independent.
//!
//! `Ψ(λ,x)` is a closed enumeration of three shapes — `λα(x)`,
//! `λα(x) + μ₀β(x)` and the constant `λ` — one per analysis regime, so each
//! regime's hypotheses stay checkable.

use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::manifold::Manifold;
use crate::maxwell::{solve_spd, Coefficient, MaxwellSolution, SOLVE_REL_TOL};
use crate::nonlinearity::Nonlinearity;

/// Shape of the forcing weight `Ψ(λ, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    /// `Ψ = λ·α(x)` — the sublinear two-threshold regime.
    LambdaAlpha,
    /// `Ψ = λ·α(x) + μ₀·β(x)` with `e = λ` — the multi-well regime.
    LambdaAlphaPlusMu0Beta,
    /// `Ψ = λ` — the superlinear regime.
    LambdaConstant,
}

impl PsiMode {
    pub fn name(self) -> &'static str {
        match self {
            PsiMode::LambdaAlpha => "lambda_alpha",
            PsiMode::LambdaAlphaPlusMu0Beta => "lambda_alpha_plus_mu0_beta",
            PsiMode::LambdaConstant => "lambda_constant",
        }
    }
}

/// One instance of the coupled system: scalars plus coefficient fields.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Coupling strength `e > 0`.
    pub e: f64,
    /// Maxwell source coefficient `q ≥ 0`.
    pub q: f64,
    pub lambda: f64,
    pub mu0: f64,
    /// `α > 0` pointwise.
    pub alpha: ScalarField,
    /// `β > 0` pointwise.
    pub beta: ScalarField,
    pub psi_mode: PsiMode,
}

impl SystemParams {
    pub fn validate(&self, m: &Manifold) -> Result<()> {
        m.integrate(&self.alpha)?;
        m.integrate(&self.beta)?;
        let bad = |what: &'static str, value: f64| CoreError::InvalidParameter { what, value };
        if !(self.e > 0.0) {
            return Err(bad("e (need e>0)", self.e));
        }
        if !(self.q >= 0.0) {
            return Err(bad("q (need q≥0)", self.q));
        }
        if !(self.lambda >= 0.0) {
            return Err(bad("lambda (need λ≥0)", self.lambda));
        }
        if !(self.mu0 >= 0.0) {
            return Err(bad("mu0 (need μ₀≥0)", self.mu0));
        }
        for (field, what) in [(&self.alpha, "alpha"), (&self.beta, "beta")] {
            let min = field.min();
            if !(min > 0.0) {
                return Err(CoreError::NonPositiveCoefficient { what, min });
            }
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> SystemParams {
        SystemParams {
            lambda,
            ..self.clone()
        }
    }

    /// Sets both `λ` and `e` to the same value (the multi-well regime runs
    /// the system at `e = λ`).
    pub fn with_lambda_equals_e(&self, lambda: f64) -> SystemParams {
        SystemParams {
            lambda,
            e: lambda,
            ..self.clone()
        }
    }

    /// Samples `Ψ(λ, ·)` on the grid.
    pub fn psi_field(&self, m: &Manifold) -> Result<ScalarField> {
        m.integrate(&self.alpha)?;
        Ok(match self.psi_mode {
            PsiMode::LambdaAlpha => self.alpha.scale(self.lambda),
            PsiMode::LambdaAlphaPlusMu0Beta => {
                self.alpha.zip_map(&self.beta, |a, b| self.lambda * a + self.mu0 * b)
            }
            PsiMode::LambdaConstant => m.constant_field(self.lambda),
        })
    }
}

/// Value of the reduced functional split into its constituents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `E_λ(u)`.
    pub total: f64,
    /// `½‖u‖_β²`.
    pub dirichlet_mass: f64,
    /// `(e/4) ∫ φ_u u² dv_g`.
    pub coupling: f64,
    /// `∫ Ψ(λ,x) F(u) dv_g`.
    pub potential: f64,
    /// `H(u) = dirichlet_mass + coupling`, the coercive quadratic-quartic part.
    pub h_value: f64,
}

/// Both gradient representations at a point.
#[derive(Debug, Clone)]
pub struct GradientPair {
    /// `L²(dv_g)` representation `r = -Δ_g u + βu + eφ_u u − Ψ f(u)`.
    pub residual: ScalarField,
    /// `H¹_β` (Sobolev) representation: `(-Δ_g + β) s = r`.
    pub sobolev: ScalarField,
    /// `‖s‖_{H¹_β}` — the gradient norm the solvers converge on.
    pub norm: f64,
}

/// The decomposition `E_λ = N + λ·G` of the multi-well regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParts {
    /// `N(u) = ½‖u‖_β² − μ₀ ∫ β F(u) dv_g`.
    pub n_value: f64,
    /// `G(u) = ¼ ∫ φ_u u² dv_g − ∫ α F(u) dv_g`.
    pub g_value: f64,
}

/// Worst weak-form defect over a set of normalized random test fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResiduals {
    pub schrodinger_max: f64,
    pub maxwell_max: f64,
}

/// Evaluation session for one `(manifold, params, nonlinearity)` triple.
///
/// Owns a single-entry Maxwell cache keyed by a content hash of `(u, q)`:
/// the reduction evaluates `φ_u` in both the energy and its derivative, so
/// an energy-plus-gradient evaluation at the same point costs one solve.
/// Distinct sessions never share the cache, so independent solver instances
/// do not serialize each other.
pub struct Evaluator {
    manifold: Arc<Manifold>,
    params: SystemParams,
    nl: Nonlinearity,
    psi: ScalarField,
    beta_is_const: bool,
    phi_cache: Mutex<Option<(u64, Arc<MaxwellSolution>)>>,
}

impl Evaluator {
    pub fn new(manifold: Arc<Manifold>, params: SystemParams, nl: Nonlinearity) -> Result<Evaluator> {
        params.validate(&manifold)?;
        nl.validate_params()?;
        let psi = params.psi_field(&manifold)?;
        let beta_is_const = params.beta.min() == params.beta.max();
        Ok(Evaluator {
            manifold,
            params,
            nl,
            psi,
            beta_is_const,
            phi_cache: Mutex::new(None),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn manifold_arc(&self) -> Arc<Manifold> {
        Arc::clone(&self.manifold)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// The Maxwell potential `φ_u`, reused from the session cache when `u`
    /// has not changed.
    pub fn phi(&self, u: &ScalarField) -> Result<Arc<MaxwellSolution>> {
        let key = {
            use std::hash::{Hash, Hasher};
            let mut h = std::collections::hash_map::DefaultHasher::new();
            u.content_hash().hash(&mut h);
            self.params.q.to_bits().hash(&mut h);
            h.finish()
        };
        if let Some((k, sol)) = self.phi_cache.lock().unwrap().as_ref() {
            if *k == key {
                return Ok(Arc::clone(sol));
            }
        }
        let sol = Arc::new(crate::maxwell::solve_maxwell(&self.manifold, u, self.params.q)?);
        *self.phi_cache.lock().unwrap() = Some((key, Arc::clone(&sol)));
        Ok(sol)
    }

    /// Evaluates `E_λ(u)` with its breakdown.
    pub fn energy(&self, u: &ScalarField) -> Result<EnergyBreakdown> {
        let m = &*self.manifold;
        let dirichlet_mass = 0.5 * m.h1_beta_norm_sq(&self.params.beta, u)?;
        let phi = self.phi(u)?;
        let coupling =
            0.25 * self.params.e * crate::maxwell::coupling_energy(m, u, &phi)?;
        let big_f = u.map(|s| self.nl.primitive(s));
        let potential = m.integrate(&self.psi.zip_map(&big_f, |p, f| p * f))?;
        let h_value = dirichlet_mass + coupling;
        Ok(EnergyBreakdown {
            total: h_value - potential,
            dirichlet_mass,
            coupling,
            potential,
            h_value,
        })
    }

    /// The `L²(dv_g)` gradient representation alone (no Sobolev lift):
    /// `r = -Δ_g u + βu + eφ_u u − Ψ f(u)`.
    pub fn residual(&self, u: &ScalarField) -> Result<ScalarField> {
        let m = &*self.manifold;
        let phi = self.phi(u)?;
        let lap = m.laplace_beltrami(u)?;
        let e = self.params.e;
        Ok(ScalarField::from_values(
            u.manifold_id(),
            (0..u.len())
                .map(|i| {
                    let ui = u.values()[i];
                    -lap.values()[i] + self.params.beta.values()[i] * ui
                        + e * phi.phi.values()[i] * ui
                        - self.psi.values()[i] * self.nl.f(ui)
                })
                .collect(),
        ))
    }

    /// Evaluates the derivative in both representations.
    pub fn gradient(&self, u: &ScalarField) -> Result<GradientPair> {
        let m = &*self.manifold;
        let residual = self.residual(u)?;
        let sobolev = if m.is_flat() && self.beta_is_const {
            ScalarField::from_values(
                u.manifold_id(),
                m.spectral_shift_solve(residual.values(), self.params.beta.values()[0]),
            )
        } else {
            solve_spd(m, Coefficient::Field(&self.params.beta), &residual, SOLVE_REL_TOL)?.0
        };
        let norm = m.h1_beta_norm_sq(&self.params.beta, &sobolev)?.sqrt();
        Ok(GradientPair {
            residual,
            sobolev,
            norm,
        })
    }

    /// Energy and gradient at the same point (one Maxwell solve via the cache).
    pub fn energy_and_gradient(&self, u: &ScalarField) -> Result<(EnergyBreakdown, GradientPair)> {
        let e = self.energy(u)?;
        let g = self.gradient(u)?;
        Ok((e, g))
    }

    /// The decomposition `N`, `G` with `E_λ = N + λG` when `e = λ`.
    /// Only meaningful in the multi-well mode.
    pub fn functional_parts(&self, u: &ScalarField) -> Result<FunctionalParts> {
        if self.params.psi_mode != PsiMode::LambdaAlphaPlusMu0Beta {
            return Err(CoreError::WrongPsiMode {
                expected: PsiMode::LambdaAlphaPlusMu0Beta.name(),
                got: self.params.psi_mode.name(),
            });
        }
        let m = &*self.manifold;
        let big_f = u.map(|s| self.nl.primitive(s));
        let n_value = 0.5 * m.h1_beta_norm_sq(&self.params.beta, u)?
            - self.params.mu0 * m.integrate(&self.params.beta.zip_map(&big_f, |b, f| b * f))?;
        let phi = self.phi(u)?;
        let g_value = 0.25 * crate::maxwell::coupling_energy(m, u, &phi)?
            - m.integrate(&self.params.alpha.zip_map(&big_f, |a, f| a * f))?;
        Ok(FunctionalParts { n_value, g_value })
    }

    /// `J_μ(u) = μ·H(u) − ∫ F(u) dv_g`; with `μ = 1/(2λ)` this is the
    /// auxiliary functional of the superlinear argument. Requires the
    /// constant-`Ψ` mode.
    pub fn j_mu(&self, u: &ScalarField, mu: f64) -> Result<f64> {
        if self.params.psi_mode != PsiMode::LambdaConstant {
            return Err(CoreError::WrongPsiMode {
                expected: PsiMode::LambdaConstant.name(),
                got: self.params.psi_mode.name(),
            });
        }
        let m = &*self.manifold;
        let dirichlet_mass = 0.5 * m.h1_beta_norm_sq(&self.params.beta, u)?;
        let phi = self.phi(u)?;
        let coupling = 0.25 * self.params.e * crate::maxwell::coupling_energy(m, u, &phi)?;
        let big_f = m.integrate(&u.map(|s| self.nl.primitive(s)))?;
        Ok(mu * (dirichlet_mass + coupling) - big_f)
    }

    /// Tests both weak equations against `n_tests` random test fields
    /// normalized in `H¹_g`, returning the worst defect for each equation.
    ///
    /// At a converged critical point both maxima sit at the solver tolerance:
    /// the pair `(u, φ_u)` is a weak solution of the full system.
    pub fn weak_residuals(
        &self,
        u: &ScalarField,
        phi: &ScalarField,
        n_tests: usize,
        seed: u64,
    ) -> Result<WeakResiduals> {
        let m = &*self.manifold;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = self.params.e;
        let q = self.params.q;
        let fu = u.map(|s| self.nl.f(s));
        let u_sq = u.map(|s| s * s);
        let mut worst_s = 0.0_f64;
        let mut worst_m = 0.0_f64;
        for _ in 0..n_tests {
            let v_raw = m.random_field(1.0, &mut rng);
            let v = v_raw.scale(1.0 / m.h1_norm(&v_raw)?);
            let schrodinger = m.grad_inner(u, &v)?
                + m.integrate(&self.params.beta.zip_map(u, |b, ui| b * ui).zip_map(&v, |a, b| a * b))?
                + e * m.integrate(&phi.zip_map(u, |p, ui| p * ui).zip_map(&v, |a, b| a * b))?
                - m.integrate(&self.psi.zip_map(&fu, |p, f| p * f).zip_map(&v, |a, b| a * b))?;
            let maxwell = m.grad_inner(phi, &v)? + m.l2_inner(phi, &v)?
                - q * m.integrate(&u_sq.zip_map(&v, |a, b| a * b))?;
            worst_s = worst_s.max(schrodinger.abs());
            worst_m = worst_m.max(maxwell.abs());
        }
        Ok(WeakResiduals {
            schrodinger_max: worst_s,
            maxwell_max: worst_m,
        })
    }
}
