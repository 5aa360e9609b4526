//! Experiment configuration: a single TOML document with section tables for
//! the manifold, the nonlinearity, the system parameters, the λ-grid, the
//! solver and the outputs. Coefficient fields are closed-form expressions
//! over `(x, y, z)` in the small grammar of [`smvar_core::expr`].

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smvar_core::critical::SolverConfig;
use smvar_core::energy::{PsiMode, SystemParams};
use smvar_core::expr::sample_expr;
use smvar_core::manifold::Manifold;
use smvar_core::nonlinearity::Nonlinearity;

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSpec,
    pub nonlinearity: Nonlinearity,
    pub params: ParamsSpec,
    pub lambda_grid: LambdaGrid,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiwell: Option<MultiwellSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superlinear: Option<SuperlinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    /// Grid points per axis (power of two ≥ 4).
    pub n: usize,
    /// Torus period.
    #[serde(rename = "L")]
    pub l: f64,
    /// Optional conformal factor expression; flat metric when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub e: f64,
    pub q: f64,
    #[serde(default)]
    pub mu0: f64,
    /// Expression for α(x, y, z) > 0.
    pub alpha: String,
    /// Expression for β(x, y, z) > 0.
    pub beta: String,
    pub psi_mode: PsiMode,
}

/// λ values either listed explicitly or as a uniform range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    Values { values: Vec<f64> },
    Range { start: f64, stop: f64, count: usize },
}

impl LambdaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaGrid::Values { values } => values.clone(),
            LambdaGrid::Range { start, stop, count } => {
                if *count <= 1 {
                    vec![*start]
                } else {
                    (0..*count)
                        .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                        .collect()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub trivial_tol: f64,
    pub path_points: usize,
    pub deflation_radius: f64,
    pub rng_seed: u64,
    pub energy_tol: f64,
    /// Multi-start count per λ.
    pub n_starts: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSpec {
            grad_tol: c.grad_tol,
            max_iters: c.max_iters,
            trivial_tol: c.trivial_tol,
            path_points: c.path_points,
            deflation_radius: c.deflation_radius,
            rng_seed: c.rng_seed,
            energy_tol: c.energy_tol,
            n_starts: 20,
        }
    }
}

impl SolverSpec {
    pub fn to_solver_config(self, seed_override: Option<u64>) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            trivial_tol: self.trivial_tol,
            path_points: self.path_points,
            deflation_radius: self.deflation_radius,
            rng_seed: seed_override.unwrap_or(self.rng_seed),
            energy_tol: self.energy_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into(), "gnuplot".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiwellSpec {
    /// Selection threshold τ; must exceed `‖β‖_{L¹}·inf Φ_{μ₀}`.
    pub tau: f64,
    #[serde(default = "default_domain")]
    pub domain: (f64, f64),
    #[serde(default = "default_component_grid")]
    pub grid: usize,
}

fn default_domain() -> (f64, f64) {
    (-3.0, 6.0)
}

fn default_component_grid() -> usize {
    20_001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperlinearSpec {
    /// Growth exponent p ∈ (2, 6).
    pub p: f64,
    #[serde(default = "one", rename = "C")]
    pub growth_const: f64,
    pub eta: f64,
    #[serde(default = "one")]
    pub tau0: f64,
    /// Embedding constant override; estimated numerically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_p: Option<f64>,
    /// τ-grid for the λ₀(τ) table (log-spaced).
    #[serde(default = "default_tau_grid")]
    pub tau_grid: (f64, f64, usize),
    /// λ is this fraction of the maximized λ₀ bound.
    #[serde(default = "default_lambda_fraction")]
    pub lambda_fraction: f64,
}

fn one() -> f64 {
    1.0
}

fn default_tau_grid() -> (f64, f64, usize) {
    (1e-3, 1e3, 25)
}

fn default_lambda_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub mode: SolveMode,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Zero,
    Constant { value: f64 },
    #[default]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Minimize,
    MountainPass,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub save_fields: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<ExperimentConfig, LabError> {
        Ok(toml::from_str(src)?)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig, LabError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> Result<String, LabError> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Builds the configured manifold (evaluating the ψ expression on a
    /// flat scaffold grid when a conformal factor is requested).
    pub fn build_manifold(&self) -> Result<Arc<Manifold>, LabError> {
        let flat = Manifold::build_torus(self.manifold.n, self.manifold.l, None)?;
        match &self.manifold.psi {
            None => Ok(Arc::new(flat)),
            Some(expr) => {
                let psi = sample_expr(expr, &flat)?;
                Ok(Arc::new(Manifold::build_torus(
                    self.manifold.n,
                    self.manifold.l,
                    Some(&psi),
                )?))
            }
        }
    }

    /// Samples α, β and assembles [`SystemParams`] at the first grid λ.
    pub fn build_params(&self, m: &Manifold) -> Result<SystemParams, LabError> {
        let alpha = sample_expr(&self.params.alpha, m)?;
        let beta = sample_expr(&self.params.beta, m)?;
        let lambda0 = self.lambda_grid.values().first().copied().unwrap_or(0.0);
        let params = SystemParams {
            e: self.params.e,
            q: self.params.q,
            lambda: lambda0,
            mu0: self.params.mu0,
            alpha,
            beta,
            psi_mode: self.params.psi_mode,
        };
        params.validate(m)?;
        Ok(params)
    }

    pub fn lambda_values(&self) -> Result<Vec<f64>, LabError> {
        let values = self.lambda_grid.values();
        if values.is_empty() {
            return Err(LabError::Config("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LabError::Config("lambda values must be finite and ≥ 0".into()));
        }
        Ok(values)
    }

    pub fn out_dir(&self, opts: &RunOptions) -> PathBuf {
        opts.out_dir.clone().unwrap_or_else(|| self.outputs.dir.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[manifold]
n = 16
L = 1.0

[nonlinearity]
kind = "piecewise_g"
variant = "minus_one"
a = 2.0

[params]
e = 1.0
q = 1.0
alpha = "1"
beta = "1"
psi_mode = "lambda_alpha"

[lambda_grid]
values = [0.5, 1.0]
"#;

    #[test]
    fn parses_sample_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let emitted = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&emitted).unwrap();
        assert_eq!(cfg, back, "emit → parse must be the identity");
    }

    #[test]
    fn range_grid_expands_uniformly() {
        let grid = LambdaGrid::Range {
            start: 0.0,
            stop: 1.0,
            count: 5,
        };
        assert_eq!(grid.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = SAMPLE.replace("[params]", "[params]\nbogus_knob = 3\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn builds_manifold_and_params() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let m = cfg.build_manifold().unwrap();
        assert_eq!(m.n_per_axis(), 16);
        let params = cfg.build_params(&m).unwrap();
        assert_eq!(params.lambda, 0.5);
        assert_eq!(params.psi_mode, PsiMode::LambdaAlpha);
    }
}
