//! Independent oracle for the electrostatic solver: at N = 8 the assembled
//! 512×512 operator is solved by dense LU factorization and compared with
//! the spectral (flat) and preconditioned-CG (conformal) paths.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smvar_core::manifold::Manifold;
use smvar_core::maxwell::solve_maxwell;

/// Plain LU with partial pivoting; the test-side reference solver.
fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        perm.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 1e-14, "singular operator matrix");
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            a[row][col] = 0.0;
            for k in col + 1..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

fn field_with_values(m: &Manifold, values: Vec<f64>) -> smvar_core::ScalarField {
    let mut iter = values.into_iter();
    m.field_from_fn(|_, _, _| iter.next().unwrap())
}

/// Assembles `-Δ_g + 1` densely by applying it to every basis vector.
fn assemble_operator(m: &Manifold) -> Vec<Vec<f64>> {
    let n = m.node_count();
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let basis = field_with_values(m, e);
        let lap = m.laplace_beltrami(&basis).unwrap();
        for i in 0..n {
            rows[i][j] = -lap.values()[i] + basis.values()[i];
        }
    }
    rows
}

#[test]
fn spectral_solve_matches_dense_lu_flat() {
    let m = Manifold::build_torus(8, 1.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let u = m.random_field(1.5, &mut rng);
    let q = 1.3;

    let sol = solve_maxwell(&m, &u, q).unwrap();

    let a = assemble_operator(&m);
    let rhs: Vec<f64> = u.values().iter().map(|v| q * v * v).collect();
    let reference = lu_solve(a, rhs);

    let worst = sol
        .phi
        .values()
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-9, "max-norm deviation {worst}");
}

#[test]
fn cg_solve_matches_dense_lu_conformal() {
    let base = Manifold::build_torus(8, 1.0, None).unwrap();
    let psi = base.field_from_fn(|x, y, z| {
        0.2 * (2.0 * PI * x).sin() + 0.15 * (2.0 * PI * y).cos() - 0.1 * (2.0 * PI * z).sin()
    });
    let m = Manifold::build_torus(8, 1.0, Some(&psi)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let u = m.random_field(1.0, &mut rng);
    let q = 0.8;

    let sol = solve_maxwell(&m, &u, q).unwrap();
    assert!(sol.iterations > 0, "conformal path must use CG");

    let a = assemble_operator(&m);
    let rhs: Vec<f64> = u.values().iter().map(|v| q * v * v).collect();
    let reference = lu_solve(a, rhs);

    let worst = sol
        .phi
        .values()
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-9, "max-norm deviation {worst}");
}

#[test]
fn manufactured_potential_recovered_to_l2_tolerance() {
    // φ* = 2 + sin(2πx/L) on the torus of period 2π: the source
    // (-Δ+1)φ* = 2 + 2 sin is non-negative by construction, so u = √source
    // is admissible and the solve must reproduce φ* to 1e-10 in L².
    let m = Manifold::build_torus(8, 2.0 * PI, None).unwrap();
    let phi_star = m.field_from_fn(|x, _, _| 2.0 + x.sin());
    let u = m.field_from_fn(|x, _, _| (2.0 + 2.0 * x.sin()).max(0.0).sqrt());
    let sol = solve_maxwell(&m, &u, 1.0).unwrap();
    let err = m.l2_norm(&(&sol.phi - &phi_star)).unwrap();
    assert!(err <= 1e-10, "L² recovery error {err}");
}

#[test]
fn maximum_principle_over_seeded_suite() {
    let m = Manifold::build_torus(8, 1.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..25 {
        let u = m.random_field(3.0, &mut rng);
        let sol = solve_maxwell(&m, &u, 2.0).unwrap();
        assert!(sol.phi.min() >= -1e-10);
        let src_norm = m.l2_norm(&u.map(|v| 2.0 * v * v)).unwrap();
        assert!(sol.residual_norm <= 1e-10 * src_norm.max(1.0));
    }
}
