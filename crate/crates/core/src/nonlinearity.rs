//! The nonlinearity catalog and its one-dimensional analysis.
//!
//! A [`Nonlinearity`] is a pair `(f, F)` with `F' = f` and `F(0) = 0`. For
//! the sublinear catalog (`f(s)/s → 0` both at `0⁺` and at `∞`, `F` positive
//! somewhere, `f ≡ 0` for `s ≤ 0`) the two threshold constants
//!
//! ```text
//!   c_f = max_{s>0} f(s)/s,
//!   c_F = max_{s>0} 4F(s)/(2s² + e·q·s⁴)       (ĉ_F at q = 0)
//! ```
//!
//! are well-defined, positive, and satisfy `c_f > c_F` strictly: their
//! reciprocals delimit the trivial-only and two-solution ranges of the
//! coupling parameter λ. They are located by a log-spaced scan followed by
//! golden-section refinement — the catalog contains kinked members, so the
//! search is derivative-free by design.
//!
//! The module also counts the connected components of the global minima of
//! the well potential `Φ_{μ₀}(t) = ½t² − μ₀F(t)` (which drives the
//! multiplicity count of the multi-well regime) and evaluates the closed-form
//! admissibility bound `λ₀(τ)` of the superlinear regime.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::onedim::{golden_max, scan_then_refine_log, Peak, ScanOutcome};

/// Scan range and resolution for the ratio maximizations.
const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e6;
const SCAN_POINTS: usize = 2048;
const REFINE_REL_TOL: f64 = 1e-10;

/// Piecewise slope family: which `g` the kinked member uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GVariant {
    /// `g ≡ -1`: `c_f = (a-1)/a`, `ĉ_F = (a-1)/(a+1)`.
    MinusOne,
    /// `g(s) = 1/s - 2`: `c_f = (a-1)²/a²`, `ĉ_F = (a-1)⁴/(a²(a²-2·ln a-1))`.
    OneOverSMinusTwo,
}

/// A nonlinearity `f` with primitive `F`.
///
/// All catalog members extend by `f(s) = 0` for `s ≤ 0` except [`ArPower`],
/// which is odd-symmetric on the whole line (the superlinear regime needs
/// both signs).
///
/// [`ArPower`]: Nonlinearity::ArPower
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f(s) = min(s^r, s^p)`, `0 < r < 1 < p`.
    MinPow { r: f64, p: f64 },
    /// `f(s) = ln(1 + s²)`.
    LogSquare,
    /// The kinked slope family: `f = 0` on `[0,1)`, `s + g(s)` on `[1,a)`,
    /// constant `a + g(a)` beyond.
    PiecewiseG { variant: GVariant, a: f64 },
    /// `f(s) = |s|^{p-2} s`, the model superlinear power, `p ∈ (2,6)`.
    ArPower { p: f64 },
    /// Synthetic three-well member: constructed so that
    /// `Φ_{μ₀}(t) = ½t² − μ₀F(t)` equals `sin²(πt)` on `[0,2]` and grows
    /// quadratically outside, giving exactly the global-minimum components
    /// `{0}, {1}, {2}`.
    SyntheticWells { mu0: f64 },
    /// Piecewise-linear interpolation of tabulated `(s, f(s))` knots, clamped
    /// to the end values outside the table; `F` by adaptive Simpson.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl Nonlinearity {
    /// Parameter sanity for each catalog member.
    pub fn validate_params(&self) -> Result<()> {
        let bad = |what: &'static str, value: f64| CoreError::InvalidParameter { what, value };
        match self {
            Nonlinearity::MinPow { r, p } => {
                if !(0.0 < *r && *r < 1.0) {
                    return Err(bad("min_pow r (need 0<r<1)", *r));
                }
                if !(*p > 1.0) {
                    return Err(bad("min_pow p (need p>1)", *p));
                }
            }
            Nonlinearity::LogSquare => {}
            Nonlinearity::PiecewiseG { a, .. } => {
                if !(*a > 1.0) {
                    return Err(bad("piecewise_g a (need a>1)", *a));
                }
            }
            Nonlinearity::ArPower { p } => {
                if !(2.0 < *p && *p < 6.0) {
                    return Err(bad("ar_power p (need 2<p<6)", *p));
                }
            }
            Nonlinearity::SyntheticWells { mu0 } => {
                if !(*mu0 > 0.0) {
                    return Err(bad("synthetic_wells mu0 (need mu0>0)", *mu0));
                }
            }
            Nonlinearity::Tabulated { knots } => {
                if knots.len() < 2 {
                    return Err(bad("tabulated knot count", knots.len() as f64));
                }
                for w in knots.windows(2) {
                    if !(w[0].0 < w[1].0) || !w[0].1.is_finite() || !w[1].1.is_finite() {
                        return Err(bad("tabulated knots (need increasing, finite)", w[1].0));
                    }
                }
            }
        }
        Ok(())
    }

    /// `f(s)`.
    pub fn f(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::MinPow { r, p } => {
                if s <= 0.0 {
                    0.0
                } else if s <= 1.0 {
                    s.powf(*p)
                } else {
                    s.powf(*r)
                }
            }
            Nonlinearity::LogSquare => {
                if s <= 0.0 {
                    0.0
                } else {
                    (1.0 + s * s).ln()
                }
            }
            Nonlinearity::PiecewiseG { variant, a } => {
                if s < 1.0 {
                    0.0
                } else if s < *a {
                    s + variant.g(s)
                } else {
                    *a + variant.g(*a)
                }
            }
            Nonlinearity::ArPower { p } => s.abs().powf(p - 2.0) * s,
            Nonlinearity::SyntheticWells { mu0 } => {
                if s <= 0.0 {
                    0.0
                } else if s < 2.0 {
                    (s - std::f64::consts::PI * (2.0 * std::f64::consts::PI * s).sin()) / mu0
                } else {
                    2.0 / mu0
                }
            }
            Nonlinearity::Tabulated { knots } => tabulated_eval(knots, s),
        }
    }

    /// The primitive `F(s) = ∫₀^s f`, with `F(0) = 0`.
    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::MinPow { r, p } => {
                if s <= 0.0 {
                    0.0
                } else if s <= 1.0 {
                    s.powf(p + 1.0) / (p + 1.0)
                } else {
                    1.0 / (p + 1.0) + (s.powf(r + 1.0) - 1.0) / (r + 1.0)
                }
            }
            Nonlinearity::LogSquare => {
                if s <= 0.0 {
                    0.0
                } else {
                    s * (1.0 + s * s).ln() - 2.0 * s + 2.0 * s.atan()
                }
            }
            Nonlinearity::PiecewiseG { variant, a } => {
                if s < 1.0 {
                    0.0
                } else if s < *a {
                    0.5 * s * s + variant.g_int(s) - 0.5
                } else {
                    let fa = *a + variant.g(*a);
                    fa * s - 0.5 * a * a + variant.g_int(*a) - a * variant.g(*a) - 0.5
                }
            }
            Nonlinearity::ArPower { p } => s.abs().powf(*p) / p,
            Nonlinearity::SyntheticWells { mu0 } => {
                if s <= 0.0 {
                    0.0
                } else if s < 2.0 {
                    let sp = (std::f64::consts::PI * s).sin();
                    (0.5 * s * s - sp * sp) / mu0
                } else {
                    (2.0 * s - 2.0) / mu0
                }
            }
            Nonlinearity::Tabulated { knots } => {
                adaptive_simpson(&|t| tabulated_eval(knots, t), 0.0, s, 1e-12)
            }
        }
    }

    /// Human-readable catalog label for reports.
    pub fn label(&self) -> String {
        match self {
            Nonlinearity::MinPow { r, p } => format!("min_pow(r={r}, p={p})"),
            Nonlinearity::LogSquare => "log_square".to_string(),
            Nonlinearity::PiecewiseG { variant, a } => {
                let v = match variant {
                    GVariant::MinusOne => "minus_one",
                    GVariant::OneOverSMinusTwo => "one_over_s_minus_two",
                };
                format!("piecewise_g({v}, a={a})")
            }
            Nonlinearity::ArPower { p } => format!("ar_power(p={p})"),
            Nonlinearity::SyntheticWells { mu0 } => format!("synthetic_wells(mu0={mu0})"),
            Nonlinearity::Tabulated { knots } => format!("tabulated({} knots)", knots.len()),
        }
    }

    /// Sampled verification of the sublinear hypotheses: `F' = f` by central
    /// differences at 10³ points, `f(s)/s` small at `s = 10⁻⁶` and `10⁶`, and
    /// `F > 0` somewhere.
    pub fn validate_sublinear(&self) -> Result<()> {
        // F' = f to finite-difference accuracy 1e-6
        for i in 0..1000 {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / 999.0);
            let h = 1e-7 * s.max(1.0);
            let fd = (self.primitive(s + h) - self.primitive(s - h)) / (2.0 * h);
            let f = self.f(s);
            if (fd - f).abs() > 1e-6 * f.abs().max(1.0) {
                return Err(CoreError::InvalidParameter {
                    what: "catalog member: F' != f",
                    value: s,
                });
            }
        }
        // superlinear at the origin, sublinear at infinity
        for s in [1e-6, 1e6] {
            let ratio = self.f(s) / s;
            if ratio.abs() > 1.000_001e-3 {
                return Err(CoreError::InvalidParameter {
                    what: "catalog member: f(s)/s not small at scan boundary",
                    value: s,
                });
            }
        }
        // F positive somewhere
        let positive_somewhere = (0..256)
            .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 255.0))
            .any(|s| self.primitive(s) > 0.0);
        if !positive_somewhere {
            return Err(CoreError::InvalidParameter {
                what: "catalog member: F never positive",
                value: f64::NAN,
            });
        }
        Ok(())
    }

    /// `c_f = max_{s>0} f(s)/s` and its maximizer.
    ///
    /// Errors with [`CoreError::UnboundedSuspect`] when the ratio is still
    /// rising at a scan boundary (superlinear members have no such maximum).
    pub fn max_slope(&self) -> Result<Peak> {
        match scan_then_refine_log(
            |s| self.f(s) / s,
            SCAN_LO,
            SCAN_HI,
            SCAN_POINTS,
            REFINE_REL_TOL,
        ) {
            ScanOutcome::Found(p) => Ok(p),
            ScanOutcome::RisingAtBoundary { side, last } => Err(CoreError::UnboundedSuspect {
                what: "c_f",
                side,
                last,
            }),
        }
    }

    /// `c_F = max_{s>0} 4F(s)/(2s² + e·q·s⁴)` and its maximizer.
    ///
    /// At `q = 0` this is the limit constant `ĉ_F = max 2F(s)/s²`.
    pub fn max_energy_quotient(&self, e: f64, q: f64) -> Result<Peak> {
        if !(e > 0.0) {
            return Err(CoreError::InvalidParameter { what: "e", value: e });
        }
        if !(q >= 0.0) {
            return Err(CoreError::InvalidParameter { what: "q", value: q });
        }
        let eq = e * q;
        match scan_then_refine_log(
            |s| 4.0 * self.primitive(s) / (2.0 * s * s + eq * s * s * s * s),
            SCAN_LO,
            SCAN_HI,
            SCAN_POINTS,
            REFINE_REL_TOL,
        ) {
            ScanOutcome::Found(p) => Ok(p),
            ScanOutcome::RisingAtBoundary { side, last } => Err(CoreError::UnboundedSuspect {
                what: "c_F",
                side,
                last,
            }),
        }
    }

    /// Checks the strict gap `c_f > c_F` and reports the margin.
    pub fn gap_margin(&self, e: f64, q: f64) -> Result<GapReport> {
        let slope = self.max_slope()?;
        let quotient = self.max_energy_quotient(e, q)?;
        Ok(GapReport {
            margin: slope.value - quotient.value,
            holds: slope.value > quotient.value,
            c_f: slope,
            c_big_f: quotient,
        })
    }

    /// Full constants report for a parameter pair, including the `q → 0`
    /// limit constant and the gap interval `[c_f⁻¹, c_F⁻¹]`.
    pub fn constants_report(&self, e: f64, q: f64) -> Result<ConstantsReport> {
        let slope = self.max_slope()?;
        let quotient = self.max_energy_quotient(e, q)?;
        let limit = self.max_energy_quotient(e, 0.0)?;
        Ok(ConstantsReport {
            c_f: slope.value,
            s_star_f: slope.at,
            c_big_f: quotient.value,
            s_star_big_f: quotient.at,
            c_big_f_hat: limit.value,
            gap_interval: (1.0 / slope.value, 1.0 / quotient.value),
        })
    }

    /// Closed forms for the kinked family, used as oracles by the tests and
    /// reports: `c_f = (a + g(a))/a` and
    /// `ĉ_F = (a + g(a))² / (a² + 2a·g(a) − 2G(a) + 1)`.
    pub fn piecewise_closed_forms(&self) -> Option<(f64, f64)> {
        match self {
            Nonlinearity::PiecewiseG { variant, a } => {
                let (ga, gia) = (variant.g(*a), variant.g_int(*a));
                let top = *a + ga;
                Some((
                    top / a,
                    top * top / (a * a + 2.0 * a * ga - 2.0 * gia + 1.0),
                ))
            }
            _ => None,
        }
    }
}

impl GVariant {
    fn g(&self, s: f64) -> f64 {
        match self {
            GVariant::MinusOne => -1.0,
            GVariant::OneOverSMinusTwo => 1.0 / s - 2.0,
        }
    }

    /// `G(s) = ∫₁^s g`.
    fn g_int(&self, s: f64) -> f64 {
        match self {
            GVariant::MinusOne => 1.0 - s,
            GVariant::OneOverSMinusTwo => s.ln() - 2.0 * (s - 1.0),
        }
    }
}

fn tabulated_eval(knots: &[(f64, f64)], s: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    let mut i = knots.partition_point(|k| k.0 <= s);
    i = i.clamp(1, knots.len() - 1);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// The two threshold constants and the gap interval between their
/// reciprocals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub c_f: f64,
    pub s_star_f: f64,
    #[serde(rename = "c_F")]
    pub c_big_f: f64,
    #[serde(rename = "s_star_F")]
    pub s_star_big_f: f64,
    #[serde(rename = "c_F_hat")]
    pub c_big_f_hat: f64,
    /// `[c_f⁻¹, c_F⁻¹]` — no information on the solution count inside it.
    pub gap_interval: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub c_f: Peak,
    #[serde(rename = "c_F")]
    pub c_big_f: Peak,
    pub margin: f64,
    pub holds: bool,
}

/// Ambrosetti–Rabinowitz data: growth `|f(s)| ≤ C(1+|s|^{p-1})` and
/// superlinearity `0 < ηF(s) ≤ s·f(s)` for `|s| ≥ τ₀`, with `η > 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArParams {
    pub p: f64,
    /// Growth constant `C`.
    pub growth_const: f64,
    pub eta: f64,
    pub tau0: f64,
}

impl ArParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &'static str, value: f64| CoreError::InvalidParameter { what, value };
        if !(2.0 < self.p && self.p < 6.0) {
            return Err(bad("ar p (need 2<p<6)", self.p));
        }
        if !(self.growth_const > 0.0) {
            return Err(bad("ar growth constant", self.growth_const));
        }
        if !(self.eta > 4.0) {
            return Err(bad("ar eta (need eta>4)", self.eta));
        }
        if !(self.tau0 > 0.0) {
            return Err(bad("ar tau0", self.tau0));
        }
        Ok(())
    }

    /// Sampled check of both conditions against a concrete nonlinearity.
    pub fn check_against(&self, nl: &Nonlinearity) -> Result<()> {
        self.validate()?;
        let slack = 1.0 + 1e-12;
        for i in 0..2048 {
            let mag = 1e-3 + (1e3 - 1e-3) * i as f64 / 2047.0;
            for s in [mag, -mag] {
                let growth = self.growth_const * (1.0 + s.abs().powf(self.p - 1.0));
                if nl.f(s).abs() > growth * slack {
                    return Err(CoreError::InvalidParameter {
                        what: "AR growth bound violated",
                        value: s,
                    });
                }
                if s.abs() >= self.tau0 {
                    let lhs = self.eta * nl.primitive(s);
                    let rhs = s * nl.f(s);
                    if !(lhs > 0.0) || lhs > rhs * slack {
                        return Err(CoreError::InvalidParameter {
                            what: "AR superlinearity violated",
                            value: s,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Default AR data for the model power `f(s) = |s|^{p-2}s`: `C = 1`,
/// `η = p`, `τ₀ = 1`, for which `ηF(s) = s·f(s)` holds exactly.
pub fn ar_params_for_power(p: f64) -> ArParams {
    ArParams {
        p,
        growth_const: 1.0,
        eta: p,
        tau0: 1.0,
    }
}

/// The closed-form admissibility bound of the superlinear regime:
///
/// ```text
///   λ₀(τ) = p·τ^{1/2} / (2pC + 2C·κ_p^p·τ^{(p-1)/2})
/// ```
pub fn lambda0_bound(ar: &ArParams, kappa_p: f64, tau: f64) -> f64 {
    let c = ar.growth_const;
    ar.p * tau.sqrt() / (2.0 * ar.p * c + 2.0 * c * kappa_p.powf(ar.p) * tau.powf((ar.p - 1.0) / 2.0))
}

/// Maximizes `λ₀(τ)` over `τ > 0` by golden section on the log axis.
pub fn lambda0_max(ar: &ArParams, kappa_p: f64) -> Peak {
    let g = |y: f64| lambda0_bound(ar, kappa_p, y.exp());
    let p = golden_max(g, (1e-8_f64).ln(), (1e8_f64).ln(), 1e-12, 400);
    Peak {
        value: p.value,
        at: p.at.exp(),
    }
}

/// Connected components of the global minima of `Φ_{μ₀}(t) = ½t² − μ₀F(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiComponents {
    /// Number of components `m`.
    pub m: usize,
    /// Component intervals `[t_lo, t_hi]` at grid resolution.
    pub intervals: Vec<(f64, f64)>,
    /// Per-component argmin, used as constant-field seeds by the solvers.
    pub representatives: Vec<f64>,
    /// The global minimum value of `Φ_{μ₀}`.
    pub min_value: f64,
}

/// `Φ_{μ₀}(t)`.
pub fn phi_mu(nl: &Nonlinearity, mu0: f64, t: f64) -> f64 {
    0.5 * t * t - mu0 * nl.primitive(t)
}

/// Scans `Φ_{μ₀}` on a uniform grid over `[t_min, t_max]` and returns the
/// maximal runs of grid points within `10⁻⁹·max(1,|v*|)` of the global
/// minimum `v*` as connected components.
///
/// The value-tolerance band (rather than exact equality) is what makes flat
/// -bottomed wells come out as single components at grid resolution.
pub fn phi_components(
    nl: &Nonlinearity,
    mu0: f64,
    domain: (f64, f64),
    grid: usize,
) -> Result<PhiComponents> {
    if grid < 10_000 {
        return Err(CoreError::InvalidParameter {
            what: "component grid (need ≥ 10⁴ points)",
            value: grid as f64,
        });
    }
    let (lo, hi) = domain;
    if !(hi > lo) {
        return Err(CoreError::InvalidParameter {
            what: "component domain",
            value: hi - lo,
        });
    }
    let dt = (hi - lo) / (grid - 1) as f64;
    let values: Vec<f64> = (0..grid)
        .map(|i| phi_mu(nl, mu0, lo + i as f64 * dt))
        .collect();
    let (argmin, &min_value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if argmin == 0 || argmin == grid - 1 {
        return Err(CoreError::DomainTooSmall { lo, hi });
    }

    let atol = 1e-9 * min_value.abs().max(1.0);
    let mut intervals = Vec::new();
    let mut representatives = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=grid {
        let inside = i < grid && values[i] <= min_value + atol;
        match (inside, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                let e = i - 1;
                let best = (s..=e).min_by(|&x, &y| values[x].total_cmp(&values[y])).unwrap();
                intervals.push((lo + s as f64 * dt, lo + e as f64 * dt));
                representatives.push(lo + best as f64 * dt);
                run_start = None;
            }
            _ => {}
        }
    }

    Ok(PhiComponents {
        m: intervals.len(),
        intervals,
        representatives,
        min_value,
    })
}
