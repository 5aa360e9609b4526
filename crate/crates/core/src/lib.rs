//! Variational toolbox for Schrödinger–Maxwell (Schrödinger–Poisson) systems
//! on compact periodic 3-manifolds.
//!
//! The system under study couples a Schrödinger-type equation for a matter
//! field `u` with a linear Maxwell equation for the electrostatic potential
//! `φ`:
//!
//! ```text
//!   -Δ_g u + β(x) u + e u φ = Ψ(λ,x) f(u)     on M,
//!   -Δ_g φ + φ = q u²                          on M,
//! ```
//!
//! where `(M, g)` is a flat or conformally flat 3-torus. The Maxwell equation
//! has a unique solution `φ_u` for every `u`, which reduces the system to a
//! single energy functional
//!
//! ```text
//!   E_λ(u) = ½‖u‖_β² + (e/4)∫ φ_u u² dv_g − ∫ Ψ(λ,x) F(u) dv_g
//! ```
//!
//! whose critical points are exactly the weak solutions of the system.
//!
//! The crate is organized around that reduction:
//!
//! - [`manifold`] — periodic grids, quadrature, the Laplace–Beltrami operator
//!   and Sobolev norms; [`field`] holds the sampled scalar fields.
//! - [`maxwell`] — the electrostatic solve `u ↦ φ_u` and the integral
//!   identities (monotonicity, symmetry, scaling, convexity) it satisfies.
//! - [`energy`] — the reduced functional, its gradient in both `L²` and
//!   Sobolev representations, and the decompositions used by the
//!   multiplicity arguments.
//! - [`nonlinearity`] — the catalog of nonlinearities `(f, F)` together with
//!   the one-dimensional analysis: the constants `c_f`, `c_F`, well-component
//!   counting and the superlinear admissibility bound.
//! - [`critical`] — critical-point solvers: Sobolev-gradient descent, a
//!   numerical mountain-pass search, and deflated multi-start.
//! - [`expr`], [`snapshot`] — the small expression grammar for coefficient
//!   fields and the on-disk field snapshot format.

// Validation guards are written as negated comparisons (`!(x > 0.0)`) on
// purpose: they must reject NaN, which `x <= 0.0` silently lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod energy;
pub mod error;
pub mod expr;
pub mod field;
pub mod manifold;
pub mod maxwell;
pub mod nonlinearity;
pub mod onedim;
pub mod snapshot;

pub use error::{CoreError, Result};
pub use field::{ManifoldId, ScalarField};
pub use manifold::Manifold;
