use eelab::densities::DensityModel;
use eelab::ensemble::EnsembleConfig;
use eelab::lattice::{
    build_hamiltonian, sample_potential, BoxGeometry, HamiltonianMatrix, PotentialField,
};
use eelab::resolvent::solve::solve_dense;
use eelab::resolvent::{
    decoupled_resolvent_check, fractional_moment_scan, greens_column, greens_entry,
    rank_one_shift_identity_check, weyl_factorization_residual, weyl_solutions, SpectralParameter,
};
use eelab::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn disordered(d: usize, n: usize, seed: u64) -> HamiltonianMatrix {
    let g = BoxGeometry::new(d, n, 0).unwrap();
    build_hamiltonian(&sample_potential(&DensityModel::exponential(1.0), g, seed, 0).unwrap())
}

fn z(lambda: f64, eta: f64) -> SpectralParameter {
    SpectralParameter::new(lambda, eta).unwrap()
}

#[test]
fn one_by_one_solve() {
    let c = 3.0;
    let zz = Complex64::new(0.5, 0.2);
    let g = solve_dense(
        vec![Complex64::new(c, 0.0) - zz],
        1,
        &[Complex64::new(1.0, 0.0)],
    )
    .unwrap();
    assert!((g[0] - 1.0 / (c - zz)).norm() < 1e-15);
}

#[test]
fn dense_column_matches_nalgebra_inverse() {
    let h = disordered(2, 3, 4);
    let n = h.dim();
    let zp = z(1.3, 0.1);
    let dense = h.to_dense();
    let a = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let v = Complex64::new(dense[(i, j)], 0.0);
        if i == j {
            v - zp.z()
        } else {
            v
        }
    });
    let inv = a.try_inverse().unwrap();
    for y in [0, 10, 24, 48] {
        let col = greens_column(&h, zp, y).unwrap();
        assert!(col.residual(&h) <= 1e-10 * (1.0 + h.max_abs()));
        for x in 0..n {
            assert!((col.entries[x] - inv[(x, y)]).norm() < 1e-10);
        }
    }
}

#[test]
fn tridiagonal_column_matches_nalgebra_inverse() {
    let h = disordered(1, 30, 12);
    let n = h.dim();
    let zp = z(0.4, -0.05);
    let dense = h.to_dense();
    let a = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        Complex64::new(dense[(i, j)], 0.0)
            - if i == j {
                zp.z()
            } else {
                Complex64::new(0.0, 0.0)
            }
    });
    let inv = a.try_inverse().unwrap();
    let col = greens_column(&h, zp, 17).unwrap();
    for x in 0..n {
        assert!((col.entries[x] - inv[(x, 17)]).norm() < 1e-10 * (1.0 + inv[(x, 17)].norm()));
    }
}

#[test]
fn rank_one_limits() {
    let h = disordered(1, 40, 1);
    let o = h.geometry.origin();
    let zp = z(0.5, 0.1);
    let plain = rank_one_shift_identity_check(&h, 0.0, zp, o + 3, o - 2).unwrap();
    let g = greens_entry(&h, zp, o + 3, o - 2).unwrap();
    assert!((plain.direct - g).norm() < 1e-13);
    assert!((plain.updated - g).norm() < 1e-13);

    let huge = rank_one_shift_identity_check(&h, 1e6, zp, o, o).unwrap();
    assert!(huge.direct.norm() < 1e-5);
    assert!(huge.updated.norm() < 1e-5);
    assert!(rank_one_shift_identity_check(&h, -1.0, zp, o, o).is_err());
}

#[test]
fn rank_one_at_t_fifty() {
    for seed in 0..10 {
        let h = disordered(1, 60, seed);
        let o = h.geometry.origin();
        let c = rank_one_shift_identity_check(&h, 50.0, z(0.8, 0.1), o + 5, o - 7).unwrap();
        assert!(c.relative_gap() <= 1e-9);
    }
}

#[test]
fn decoupling_near_the_origin() {
    let h = disordered(1, 200, 7);
    let r = decoupled_resolvent_check(&h, z(0.5, 0.1), 1, -1).unwrap();
    assert!(r.via_plus <= 1e-6 && r.via_minus <= 1e-6);
    assert!(matches!(
        decoupled_resolvent_check(&h, z(0.5, 0.1), 150, -1),
        Err(Error::Range(_))
    ));
}

#[test]
fn decoupling_with_huge_origin_shift() {
    let h = disordered(1, 100, 2);
    let shifted = h.with_diagonal_shift(h.geometry.origin(), 1e6);
    let r = decoupled_resolvent_check(&shifted, z(0.5, 0.1), 3, -4).unwrap();
    // the origin nearly decouples the halves, so G(x, y) itself is tiny
    assert!(r.g_xy.norm() < 1e-5);
    assert!(r.via_plus <= 1e-6 && r.via_minus <= 1e-6);
}

#[test]
fn decoupling_is_reflection_symmetric() {
    let g = BoxGeometry::line(60, 0).unwrap();
    let raw = sample_potential(&DensityModel::exponential(1.0), g, 5, 0).unwrap();
    let n = 60i64;
    let values: Vec<f64> = (-n..=n)
        .map(|x| raw.values[(x.abs() + n) as usize])
        .collect();
    let h = build_hamiltonian(&PotentialField::from_values(g, values).unwrap());
    for (x, y) in [(1, -1), (4, -4), (9, -9)] {
        let r = decoupled_resolvent_check(&h, z(0.5, 0.1), x, y).unwrap();
        assert!((r.via_plus - r.via_minus).abs() <= 1e-8);
    }
}

#[test]
fn free_weyl_solution_is_a_power() {
    let g = BoxGeometry::line(200, 0).unwrap();
    let h = build_hamiltonian(&PotentialField::zero(g));
    let zp = z(2.0, 0.5);
    let w = weyl_solutions(&h, zp).unwrap();
    // roots of ρ + 1/ρ = 2 - z; take the one inside the unit disk
    let b = Complex64::new(2.0, 0.0) - zp.z();
    let disc = (b * b - 4.0).sqrt();
    let mut rho = (b + disc) / 2.0;
    if rho.norm() > 1.0 {
        rho = (b - disc) / 2.0;
    }
    assert_eq!(w.plus(0), Complex64::new(1.0, 0.0));
    assert_eq!(w.minus(0), Complex64::new(1.0, 0.0));
    for x in 0..20 {
        let exact = rho.powi(x as i32);
        assert!((w.plus(x) - exact).norm() <= 1e-8 * exact.norm().max(1e-300));
        assert!((w.minus(-x) - exact).norm() <= 1e-8 * exact.norm().max(1e-300));
    }
}

#[test]
fn weyl_factorization_in_the_interior() {
    let h = disordered(1, 120, 3);
    for eta in [0.05, 0.1, 0.5] {
        let w = weyl_solutions(&h, z(0.7, eta)).unwrap();
        assert!(w.recurrence_residual(&h) <= 1e-8);
        for x in [0, 2, 15, 30] {
            for y in [0, -1, -12, -30] {
                assert!(weyl_factorization_residual(&h, &w, x, y).unwrap() <= 1e-6);
            }
        }
    }
    assert!(weyl_solutions(&disordered(2, 2, 0), z(0.7, 0.1)).is_err());
}

#[test]
fn fractional_moments_need_s_in_unit_interval() {
    let g = BoxGeometry::line(20, 0).unwrap();
    let cfg = EnsembleConfig::new(g, DensityModel::exponential(1.0), 1.0, 20, 1);
    assert!(fractional_moment_scan(&cfg, 1.0, z(0.5, 0.1), &[(0, 0)], 0.0).is_err());
    let stats = fractional_moment_scan(&cfg, 0.5, z(0.5, 0.1), &[(0, 0), (3, -1)], 0.0).unwrap();
    assert!(stats.iter().all(|s| s.mean.is_finite() && s.mean > 0.0));
    assert!(stats[1].mean < stats[0].mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolvent_is_symmetric_and_herglotz(
        d in 1usize..=2,
        n in 1usize..5,
        seed in any::<u64>(),
        lambda in -1.0f64..9.0,
        eta in prop_oneof![-2.0f64..-0.01, 0.01f64..2.0],
    ) {
        let h = disordered(d, n, seed);
        let zp = z(lambda, eta);
        let sites = h.dim();
        let a = sites / 3;
        let b = sites - 1;
        let gab = greens_entry(&h, zp, a, b).unwrap();
        let gba = greens_entry(&h, zp, b, a).unwrap();
        prop_assert!((gab - gba).norm() <= 1e-10 * (1.0 + gab.norm()));
        let g00 = greens_entry(&h, zp, a, a).unwrap();
        prop_assert_eq!(g00.im.signum(), eta.signum());
    }

    #[test]
    fn rank_one_identity_holds(
        n in 2usize..60,
        seed in any::<u64>(),
        t in 0.0f64..100.0,
        lambda in 0.0f64..5.0,
        eta in 0.05f64..1.0,
    ) {
        let h = disordered(1, n, seed);
        let o = h.geometry.origin();
        let c = rank_one_shift_identity_check(&h, t, z(lambda, eta), o + 1, o - 1).unwrap();
        prop_assert!(c.relative_gap() <= 1e-9);
    }
}
