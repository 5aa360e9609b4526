//! Property tests for the discrete geometry: operator self-adjointness,
//! sign structure, quadrature exactness, and the β-norm sandwich.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smvar_core::manifold::Manifold;

fn torus() -> Manifold {
    Manifold::build_torus(8, 1.0, None).unwrap()
}

#[test]
fn self_adjointness_over_seeded_pairs() {
    let m = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..100 {
        let u = m.random_field(1.0, &mut rng);
        let v = m.random_field(1.0, &mut rng);
        let lhs = m.l2_inner(&m.laplace_beltrami(&u).unwrap(), &v).unwrap();
        let rhs = m.l2_inner(&u, &m.laplace_beltrami(&v).unwrap()).unwrap();
        let scale = m.l2_norm(&u).unwrap() * m.l2_norm(&v).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn negative_semidefinite_with_constant_kernel() {
    let m = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..50 {
        let u = m.random_field(1.0, &mut rng);
        let dirichlet = -m.l2_inner(&m.laplace_beltrami(&u).unwrap(), &u).unwrap();
        assert!(dirichlet >= -1e-12);
    }
    let c = m.constant_field(4.2);
    let zero_energy = -m.l2_inner(&m.laplace_beltrami(&c).unwrap(), &c).unwrap();
    assert!(zero_energy.abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Equispaced quadrature integrates band-limited products exactly:
    /// ∫ cos(2πk·x)cos(2πl·y) dx = 0 unless both modes vanish.
    #[test]
    fn quadrature_kills_low_modes(kx in 1i32..4, ky in 1i32..4, amp in 0.1f64..10.0) {
        let m = torus();
        let two_pi = 2.0 * std::f64::consts::PI;
        let w = m.field_from_fn(|x, y, _| amp * (two_pi * kx as f64 * x).cos() * (two_pi * ky as f64 * y).cos());
        prop_assert!(m.integrate(&w).unwrap().abs() <= 1e-12 * amp);
    }

    /// `min(1,√min β)·‖u‖_{H¹} ≤ ‖u‖_β ≤ max(1,√max β)·‖u‖_{H¹}`.
    #[test]
    fn beta_norm_sandwich(seed in 0u64..1_000_000, beta_lo in 0.05f64..1.0, beta_span in 0.0f64..20.0) {
        let m = torus();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = m.random_field(1.0, &mut rng);
        let beta = m.random_field(1.0, &mut rng).map(|v| beta_lo + (v.abs()) * beta_span);
        let h1 = m.h1_norm_sq(&u).unwrap().sqrt();
        let hb = m.h1_beta_norm_sq(&beta, &u).unwrap().sqrt();
        let lo = beta.min().sqrt().min(1.0);
        let hi = beta.max().sqrt().max(1.0);
        prop_assert!(hb >= lo * h1 * (1.0 - 1e-12));
        prop_assert!(hb <= hi * h1 * (1.0 + 1e-12));
    }

    /// The flat Laplacian diagonalizes plane waves: Δ e_k = -|k|² e_k.
    #[test]
    fn plane_wave_symbols(kx in 0i32..4, ky in 0i32..4, kz in 0i32..4) {
        let m = torus();
        let two_pi = 2.0 * std::f64::consts::PI;
        let u = m.field_from_fn(|x, y, z| (two_pi * (kx as f64 * x + ky as f64 * y + kz as f64 * z)).cos());
        let lap = m.laplace_beltrami(&u).unwrap();
        let ksq = (two_pi * kx as f64).powi(2) + (two_pi * ky as f64).powi(2) + (two_pi * kz as f64).powi(2);
        for (l, v) in lap.values().iter().zip(u.values()) {
            prop_assert!((l + ksq * v).abs() <= 1e-8 * ksq.max(1.0));
        }
    }
}
