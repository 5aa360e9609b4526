//! Periodic 3-manifolds: grid, quadrature, Laplace–Beltrami operator, norms.
//!
//! The canonical manifold is the flat 3-torus `[0,L)³` with an equispaced
//! `N×N×N` grid, on which the Laplacian diagonalizes exactly in Fourier
//! space (multiplier `-|k|²`, `k ∈ (2π/L)·ℤ³` folded to the symmetric
//! range). Conformally flat metrics `g = e^{2ψ}δ` are supported through the
//! divergence form
//!
//! ```text
//!   Δ_g u = e^{-3ψ} div(e^{ψ} ∇u),       dv_g = e^{3ψ} dx,
//! ```
//!
//! discretized with centered second-order differences on face-averaged
//! coefficients `e^{ψ}`, which makes the discrete operator self-adjoint with
//! respect to the `dv_g`-weighted inner product by construction.
//!
//! Quadrature is the plain node sum against per-node cell volumes
//! `e^{3ψ(x)}(L/N)³`; on the flat torus it is exact (to round-off) for
//! trigonometric polynomials of degree < N/2.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use crate::field::{ManifoldId, ScalarField};

/// Compact flat or conformally flat 3-torus with its measure and operators.
pub struct Manifold {
    id: ManifoldId,
    n: usize,
    side: f64,
    spacing: f64,
    cell_volumes: Vec<f64>,
    volume: f64,
    conformal: Option<Conformal>,
    spectral: Spectral,
}

/// Conformal metric data: `g = e^{2ψ}δ`.
struct Conformal {
    /// `e^{-3ψ}` per node, the inverse volume weight of the divergence form.
    inv_weight: Vec<f64>,
    /// Face-averaged `e^{ψ}` between node `i` and its `+axis` neighbor.
    face_coef: [Vec<f64>; 3],
}

/// Fourier-side data for the flat Laplacian (also the conformal-case
/// preconditioner).
struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `|k|²` per node in grid order, with integer frequencies folded to the
    /// symmetric range.
    ksq: Vec<f64>,
}

impl Manifold {
    /// Builds the periodic torus `[0, side)³` sampled with `n` points per
    /// axis (power of two, ≥ 4). An optional conformal factor `ψ` (sampled on
    /// the same grid, x-fastest) selects the metric `g = e^{2ψ}δ`.
    pub fn build_torus(
        n: usize,
        side: f64,
        conformal_factor: Option<&ScalarField>,
    ) -> Result<Manifold> {
        if n < 4 || !n.is_power_of_two() {
            return Err(CoreError::GridSize { n });
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(CoreError::SideLength(side));
        }
        let node_count = n * n * n;
        let spacing = side / n as f64;
        let h3 = spacing * spacing * spacing;

        let conformal = match conformal_factor {
            None => None,
            Some(psi) => {
                psi.ensure_finite("conformal factor")?;
                if psi.len() != node_count {
                    return Err(CoreError::SnapshotMismatch(format!(
                        "conformal factor has {} samples, grid has {}",
                        psi.len(),
                        node_count
                    )));
                }
                Some(Conformal::build(n, psi.values()))
            }
        };

        let cell_volumes: Vec<f64> = match &conformal {
            None => vec![h3; node_count],
            // dv_g = e^{3ψ} h³; inv_weight already holds e^{-3ψ}
            Some(c) => c.inv_weight.iter().map(|w| h3 / w).collect(),
        };
        let volume = cell_volumes.iter().sum();

        let mut planner = FftPlanner::new();
        let spectral = Spectral {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            ksq: build_ksq(n, side),
        };

        Ok(Manifold {
            id: ManifoldId::fresh(),
            n,
            side,
            spacing,
            cell_volumes,
            volume,
            conformal,
            spectral,
        })
    }

    pub fn id(&self) -> ManifoldId {
        self.id
    }

    /// Grid points per axis.
    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    /// Torus period `L`.
    pub fn side_length(&self) -> f64 {
        self.side
    }

    /// Grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_flat(&self) -> bool {
        self.conformal.is_none()
    }

    /// Total Riemannian volume `Vol_g = Σ cell volumes`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    /// Physical coordinates of a node index (grid order is x-fastest).
    pub fn coords(&self, idx: usize) -> (f64, f64, f64) {
        let ix = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let iz = idx / (self.n * self.n);
        (
            ix as f64 * self.spacing,
            iy as f64 * self.spacing,
            iz as f64 * self.spacing,
        )
    }

    fn ensure_bound(&self, u: &ScalarField) -> Result<()> {
        if u.manifold_id() == self.id {
            Ok(())
        } else {
            Err(CoreError::ManifoldMismatch {
                expected: self.id.raw(),
                got: u.manifold_id().raw(),
            })
        }
    }

    // ── field constructors ──────────────────────────────────────────────

    pub fn constant_field(&self, c: f64) -> ScalarField {
        ScalarField::from_values(self.id, vec![c; self.node_count()])
    }

    pub fn zero_field(&self) -> ScalarField {
        self.constant_field(0.0)
    }

    /// Samples `f(x, y, z)` at the grid nodes, x-fastest.
    pub fn field_from_fn(&self, mut f: impl FnMut(f64, f64, f64) -> f64) -> ScalarField {
        let values = (0..self.node_count())
            .map(|i| {
                let (x, y, z) = self.coords(i);
                f(x, y, z)
            })
            .collect();
        ScalarField::from_values(self.id, values)
    }

    /// I.i.d. uniform noise in `[-amplitude, amplitude]` at every node.
    pub fn random_field<R: Rng>(&self, amplitude: f64, rng: &mut R) -> ScalarField {
        ScalarField::random_uniform(self.id, self.node_count(), amplitude, rng)
    }

    /// Band-limited random field: a sum of `modes` cosine waves with integer
    /// wave vectors bounded by `max_wavenumber`, plus a constant offset.
    /// Smooth seeds of this kind are what the descent solvers start from.
    pub fn random_smooth_field<R: Rng>(
        &self,
        modes: usize,
        max_wavenumber: i32,
        amplitude: f64,
        offset: f64,
        rng: &mut R,
    ) -> ScalarField {
        let two_pi_over_l = 2.0 * std::f64::consts::PI / self.side;
        let mut waves = Vec::with_capacity(modes);
        for _ in 0..modes {
            let k = loop {
                let k = (
                    rng.gen_range(-max_wavenumber..=max_wavenumber),
                    rng.gen_range(-max_wavenumber..=max_wavenumber),
                    rng.gen_range(-max_wavenumber..=max_wavenumber),
                );
                if k != (0, 0, 0) {
                    break k;
                }
            };
            let amp = rng.gen_range(-amplitude..=amplitude);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            waves.push((k, amp, phase));
        }
        self.field_from_fn(|x, y, z| {
            let mut v = offset;
            for &((kx, ky, kz), amp, phase) in &waves {
                let arg =
                    two_pi_over_l * (kx as f64 * x + ky as f64 * y + kz as f64 * z) + phase;
                v += amp * arg.cos();
            }
            v
        })
    }

    // ── quadrature and norms ────────────────────────────────────────────

    /// `∫_M w dv_g` by the node-sum rule.
    pub fn integrate(&self, w: &ScalarField) -> Result<f64> {
        self.ensure_bound(w)?;
        Ok(w.values()
            .iter()
            .zip(&self.cell_volumes)
            .map(|(v, dv)| v * dv)
            .sum())
    }

    /// `∫_M u v dv_g`.
    pub fn l2_inner(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.ensure_bound(u)?;
        self.ensure_bound(v)?;
        Ok(u.values()
            .iter()
            .zip(v.values())
            .zip(&self.cell_volumes)
            .map(|((a, b), dv)| a * b * dv)
            .sum())
    }

    pub fn l2_norm_sq(&self, u: &ScalarField) -> Result<f64> {
        self.l2_inner(u, u)
    }

    pub fn l2_norm(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.l2_norm_sq(u)?.sqrt())
    }

    /// `‖u‖_{L^p}` with respect to `dv_g`.
    pub fn lp_norm(&self, u: &ScalarField, p: f64) -> Result<f64> {
        self.ensure_bound(u)?;
        let s: f64 = u
            .values()
            .iter()
            .zip(&self.cell_volumes)
            .map(|(v, dv)| v.abs().powf(p) * dv)
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Dirichlet cross term `∫ ⟨∇_g u, ∇_g v⟩ dv_g`.
    ///
    /// Flat case: Parseval sum `Σ |k|² û·conj(v̂)`, arithmetically consistent
    /// with the spectral Laplacian. Conformal case: the face-averaged edge
    /// sum `h Σ_faces e^{ψ}_face (Δu)(Δv)`, consistent with the stencil.
    pub fn grad_inner(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.ensure_bound(u)?;
        self.ensure_bound(v)?;
        match &self.conformal {
            None => {
                let uh = self.fft3_forward(u.values());
                let vh = if std::ptr::eq(u, v) || u.values() == v.values() {
                    None
                } else {
                    Some(self.fft3_forward(v.values()))
                };
                let scale = self.parseval_scale();
                let s: f64 = match &vh {
                    None => uh
                        .iter()
                        .zip(&self.spectral.ksq)
                        .map(|(a, k)| k * a.norm_sqr())
                        .sum(),
                    Some(vh) => uh
                        .iter()
                        .zip(vh)
                        .zip(&self.spectral.ksq)
                        .map(|((a, b), k)| k * (a * b.conj()).re)
                        .sum(),
                };
                Ok(scale * s)
            }
            Some(c) => {
                let n = self.n;
                let (uu, vv) = (u.values(), v.values());
                let mut acc = 0.0;
                for axis in 0..3 {
                    let coef = &c.face_coef[axis];
                    for idx in 0..self.node_count() {
                        let j = neighbor_plus(idx, axis, n);
                        acc += coef[idx] * (uu[j] - uu[idx]) * (vv[j] - vv[idx]);
                    }
                }
                Ok(self.spacing * acc)
            }
        }
    }

    /// Dirichlet energy `∫ |∇_g u|² dv_g`.
    pub fn grad_energy(&self, u: &ScalarField) -> Result<f64> {
        self.grad_inner(u, u)
    }

    /// `‖u‖²_{H¹_g} = ∫ |∇_g u|² + u² dv_g`.
    pub fn h1_norm_sq(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.grad_energy(u)? + self.l2_norm_sq(u)?)
    }

    pub fn h1_norm(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.h1_norm_sq(u)?.sqrt())
    }

    /// `‖u‖²_β = ∫ |∇_g u|² + β(x) u² dv_g`, requiring `β > 0` everywhere.
    ///
    /// The norm is equivalent to the standard `H¹_g` norm with the sandwich
    /// constants `min{1, √min β}` and `max{1, √max β}`.
    pub fn h1_beta_norm_sq(&self, beta: &ScalarField, u: &ScalarField) -> Result<f64> {
        self.ensure_bound(beta)?;
        let min = beta.min();
        if !(min > 0.0) {
            return Err(CoreError::NonPositiveCoefficient { what: "beta", min });
        }
        let mass = self.l2_inner(&u.zip_map(beta, |a, b| a * b), u)?;
        Ok(self.grad_energy(u)? + mass)
    }

    /// `H¹_g` distance between two fields.
    pub fn h1_dist(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.h1_norm(&(u - v))
    }

    // ── the Laplace–Beltrami operator ───────────────────────────────────

    /// `Δ_g u`. Flat case: exact Fourier multiplier `-|k|²`. Conformal case:
    /// `e^{-3ψ} div(e^{ψ}∇u)` with face-averaged coefficients.
    pub fn laplace_beltrami(&self, u: &ScalarField) -> Result<ScalarField> {
        self.ensure_bound(u)?;
        match &self.conformal {
            None => {
                let mut hat = self.fft3_forward(u.values());
                for (h, k) in hat.iter_mut().zip(&self.spectral.ksq) {
                    *h *= -k;
                }
                Ok(ScalarField::from_values(
                    self.id,
                    self.fft3_inverse_real(hat),
                ))
            }
            Some(c) => {
                let n = self.n;
                let inv_h2 = 1.0 / (self.spacing * self.spacing);
                let uu = u.values();
                let mut out = vec![0.0; self.node_count()];
                for axis in 0..3 {
                    let coef = &c.face_coef[axis];
                    for idx in 0..self.node_count() {
                        let jp = neighbor_plus(idx, axis, n);
                        let jm = neighbor_minus(idx, axis, n);
                        out[idx] += coef[idx] * (uu[jp] - uu[idx])
                            - coef[jm] * (uu[idx] - uu[jm]);
                    }
                }
                for (o, w) in out.iter_mut().zip(&c.inv_weight) {
                    *o *= w * inv_h2;
                }
                Ok(ScalarField::from_values(self.id, out))
            }
        }
    }

    /// Solves `(-Δ_g + shift) φ = rhs` exactly in Fourier space.
    ///
    /// Only valid on the flat torus; the variable-coefficient and conformal
    /// cases go through the preconditioned CG solver in [`crate::maxwell`],
    /// which uses this routine (on the flat symbols) as its preconditioner.
    pub(crate) fn spectral_shift_solve(&self, rhs: &[f64], shift: f64) -> Vec<f64> {
        let mut hat = self.fft3_forward(rhs);
        for (h, k) in hat.iter_mut().zip(&self.spectral.ksq) {
            *h /= k + shift;
        }
        self.fft3_inverse_real(hat)
    }

    /// `-Δ_g u + coef·u` applied pointwise; `coef` given per node.
    pub(crate) fn apply_shifted_laplace(
        &self,
        u: &ScalarField,
        coef: &dyn Fn(usize) -> f64,
    ) -> Result<ScalarField> {
        let lap = self.laplace_beltrami(u)?;
        let values = u
            .values()
            .iter()
            .zip(lap.values())
            .enumerate()
            .map(|(i, (ui, li))| -li + coef(i) * ui)
            .collect();
        Ok(ScalarField::from_values(self.id, values))
    }

    // ── spectral plumbing ───────────────────────────────────────────────

    fn parseval_scale(&self) -> f64 {
        let h3 = self.spacing.powi(3);
        h3 / self.node_count() as f64
    }

    pub(crate) fn fft3_forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> =
            values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft3_axes(&mut data, &self.spectral.fwd);
        data
    }

    pub(crate) fn fft3_inverse_real(&self, mut hat: Vec<Complex<f64>>) -> Vec<f64> {
        self.fft3_axes(&mut hat, &self.spectral.inv);
        let norm = 1.0 / self.node_count() as f64;
        hat.iter().map(|c| c.re * norm).collect()
    }

    fn fft3_axes(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut line = vec![Complex::new(0.0, 0.0); n];
        // axis 0: contiguous runs
        for chunk in data.chunks_exact_mut(n) {
            plan.process(chunk);
        }
        // axis 1: stride n
        for iz in 0..n {
            for ix in 0..n {
                let base = iz * n * n + ix;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * n];
                }
                plan.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * n] = *l;
                }
            }
        }
        // axis 2: stride n²
        for iy in 0..n {
            for ix in 0..n {
                let base = iy * n + ix;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * n * n];
                }
                plan.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * n * n] = *l;
                }
            }
        }
    }

    /// Mutable access to the Fourier symbols of `-Δ`. Test hook for fault
    /// injection in the verification battery; not part of the public contract.
    #[doc(hidden)]
    pub fn spectral_symbols_mut(&mut self) -> &mut [f64] {
        &mut self.spectral.ksq
    }
}

impl Conformal {
    fn build(n: usize, psi: &[f64]) -> Conformal {
        let node_count = n * n * n;
        let exp_psi: Vec<f64> = psi.iter().map(|p| p.exp()).collect();
        let inv_weight: Vec<f64> = psi.iter().map(|p| (-3.0 * p).exp()).collect();
        let mut face_coef = [
            vec![0.0; node_count],
            vec![0.0; node_count],
            vec![0.0; node_count],
        ];
        for (axis, coef) in face_coef.iter_mut().enumerate() {
            for (idx, c) in coef.iter_mut().enumerate() {
                let j = neighbor_plus(idx, axis, n);
                *c = 0.5 * (exp_psi[idx] + exp_psi[j]);
            }
        }
        Conformal {
            inv_weight,
            face_coef,
        }
    }
}

fn neighbor_plus(idx: usize, axis: usize, n: usize) -> usize {
    let (ix, iy, iz) = (idx % n, (idx / n) % n, idx / (n * n));
    match axis {
        0 => (iz * n + iy) * n + (ix + 1) % n,
        1 => (iz * n + (iy + 1) % n) * n + ix,
        _ => (((iz + 1) % n) * n + iy) * n + ix,
    }
}

fn neighbor_minus(idx: usize, axis: usize, n: usize) -> usize {
    let (ix, iy, iz) = (idx % n, (idx / n) % n, idx / (n * n));
    match axis {
        0 => (iz * n + iy) * n + (ix + n - 1) % n,
        1 => (iz * n + (iy + n - 1) % n) * n + ix,
        _ => (((iz + n - 1) % n) * n + iy) * n + ix,
    }
}

fn build_ksq(n: usize, side: f64) -> Vec<f64> {
    let two_pi_over_l = 2.0 * std::f64::consts::PI / side;
    let freq: Vec<f64> = (0..n)
        .map(|m| {
            let folded = if m <= n / 2 {
                m as f64
            } else {
                m as f64 - n as f64
            };
            folded * two_pi_over_l
        })
        .collect();
    let mut ksq = Vec::with_capacity(n * n * n);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                ksq.push(freq[ix] * freq[ix] + freq[iy] * freq[iy] + freq[iz] * freq[iz]);
            }
        }
    }
    ksq
}
