use eelab::densities::{
    exponential_kappa_moment, f_of_t, hcr_bound, hcr_toy_check, j_of_t, jensen_lower_bound,
    DensityModel, TabulatedDensity,
};
use eelab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `J(t) = 2 e^{t²/σ²} Φ(t/σ)` for the half-Gaussian, by completing the square.
fn half_gaussian_j(scale: f64, t: f64) -> f64 {
    let r = t / scale;
    2.0 * (r * r).exp() * std_normal_cdf(r)
}

fn exponential_table() -> DensityModel {
    let mut text = String::from("# v f(v)\n");
    for k in 0..=80 {
        let v = k as f64 * 0.125;
        text.push_str(&format!("{v} {}\n", (-v).exp()));
    }
    let (table, mass) = TabulatedDensity::parse(&text).unwrap();
    assert!((mass - 1.0).abs() < 1e-2);
    DensityModel::tabulated(table)
}

fn all_kinds() -> Vec<DensityModel> {
    vec![
        DensityModel::exponential(1.0),
        DensityModel::exponential(2.5),
        DensityModel::shifted_exponential(1.5, 0.5),
        DensityModel::half_gaussian(1.0),
        DensityModel::half_gaussian(0.7),
        exponential_table(),
    ]
}

#[test]
fn pdf_values() {
    assert_eq!(DensityModel::exponential(1.0).pdf(0.0), 1.0);
    for m in all_kinds() {
        assert_eq!(m.pdf(-1.0), 0.0);
    }
    let v = DensityModel::exponential(2.0).pdf(1.0);
    assert!((v - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    assert!((v - 0.270_670_566).abs() < 1e-9);
}

#[test]
fn every_kind_is_normalized() {
    for m in all_kinds() {
        assert!(
            (m.normalization().unwrap() - 1.0).abs() < 1e-8,
            "{}",
            m.name()
        );
    }
}

#[test]
fn exponential_f_is_closed_form() {
    for a in [0.5, 1.0, 2.0] {
        let m = DensityModel::exponential(a);
        for t in [0.5, 1.0, 2.0, 5.0] {
            let f = f_of_t(&m, t).unwrap();
            assert!((f - (a * t).exp_m1()).abs() <= 1e-6 * (a * t).exp_m1());
        }
    }
    let f = f_of_t(&DensityModel::exponential(1.0), 5.0).unwrap();
    assert!((f - 147.413_159).abs() < 1e-5);
}

#[test]
fn shifted_exponential_f_ignores_offset() {
    let m = DensityModel::shifted_exponential(1.0, 0.8);
    let f = f_of_t(&m, 1.5).unwrap();
    assert!((f - 1.5f64.exp_m1()).abs() <= 1e-6 * 1.5f64.exp_m1());
}

#[test]
fn half_gaussian_j_is_closed_form() {
    for scale in [0.5, 1.0, 2.0] {
        let m = DensityModel::half_gaussian(scale);
        for t in [0.1, 0.5, 1.0, 2.0] {
            let j = j_of_t(&m, t).unwrap();
            let exact = half_gaussian_j(scale, t);
            assert!(
                (j - exact).abs() <= 1e-8 * exact,
                "σ={scale} t={t}: {j} vs {exact}"
            );
        }
    }
}

#[test]
fn f_vanishes_as_t_goes_to_zero() {
    for m in all_kinds() {
        let small = f_of_t(&m, 1e-6).unwrap();
        assert!(small < 1e-3, "{}: {small}", m.name());
    }
    assert!(f_of_t(&DensityModel::exponential(1.0), 0.0).is_err());
}

#[test]
fn f_is_nondecreasing() {
    for m in [
        DensityModel::exponential(1.0),
        DensityModel::half_gaussian(1.0),
    ] {
        let grid = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
        let values: Vec<f64> = grid.iter().map(|&t| f_of_t(&m, t).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn jensen_bound() {
    let m = DensityModel::exponential(1.0);
    let b = jensen_lower_bound(&m, 1.0).unwrap();
    assert!((b - std::f64::consts::E).abs() < 1e-12);
    assert!((b - j_of_t(&m, 1.0).unwrap()).abs() < 1e-6);
    for m in all_kinds() {
        for t in [0.5, 1.0, 2.0] {
            assert!(jensen_lower_bound(&m, t).unwrap() <= j_of_t(&m, t).unwrap() + 1e-6);
        }
    }
    assert!((jensen_lower_bound(&m, 1e-9).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn point_mass_has_no_f() {
    assert!(matches!(
        f_of_t(&DensityModel::point_mass(0.0), 1.0),
        Err(Error::FUndefined { .. })
    ));
}

#[test]
fn bound_without_measured_eps() {
    let m = DensityModel::exponential(1.0);
    let grid: Vec<f64> = (1..=10).map(f64::from).collect();
    let b = hcr_bound(0.2, &m, &grid, None).unwrap();
    assert_eq!(b.t0, 1.0);
    assert!((b.a - 0.04 / 1f64.exp_m1()).abs() < 1e-8);
    assert_eq!(b.curve.len(), 10);

    let zero = hcr_bound(0.0, &m, &grid, None).unwrap();
    assert_eq!(zero.a, 0.0);
    assert!(zero.degenerate);
}

#[test]
fn bound_with_measured_eps_trades_off() {
    let m = DensityModel::exponential(1.0);
    let grid = [1.0, 2.0, 3.0];
    let eps = [0.9, 0.2, 0.1];
    let b = hcr_bound(1.0, &m, &grid, Some(&eps)).unwrap();
    let a = |t: f64, e: f64| (1.0 - e) * (1.0 - e) / t.exp_m1();
    let best = a(1.0, 0.9).max(a(2.0, 0.2)).max(a(3.0, 0.1));
    assert!((b.a - best).abs() < 1e-8);
    assert_eq!(b.t0, 2.0);
    assert!(hcr_bound(1.0, &m, &grid, Some(&eps[..2])).is_err());
    assert!(matches!(
        hcr_bound(1.0, &DensityModel::point_mass(0.0), &grid, None),
        Err(Error::NoBound(_))
    ));
}

#[test]
fn toy_check_holds_for_every_kind() {
    for m in all_kinds() {
        for (k, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let c = hcr_toy_check(&m, t, 20_000, 40 + k as u64).unwrap();
            assert!(c.holds, "{} t={t}: {c:?}", m.name());
        }
    }
}

#[test]
fn toy_check_closed_forms() {
    let c = hcr_toy_check(&DensityModel::exponential(1.0), 1.0, 100_000, 1).unwrap();
    assert!((c.rhs_bound - 1.0 / 1f64.exp_m1()).abs() < 1e-8);
    assert!((c.lhs_variance - 1.0).abs() < 4.0 * c.stderr);
    let c = hcr_toy_check(&DensityModel::exponential(2.0), 1.0, 100_000, 2).unwrap();
    assert!((c.rhs_bound - 0.156_518).abs() < 1e-5);
    assert!((c.lhs_variance - 0.25).abs() < 4.0 * c.stderr);
    assert!(hcr_toy_check(&DensityModel::exponential(1.0), 1.0, 10, 2).is_err());
}

#[test]
fn total_variance_dominates_conditional_variance() {
    // φ(ξ, η) = ξ + η with ξ, η independent; E{φ | ξ} = ξ + E η
    let m = DensityModel::exponential(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 50_000;
    let mut total = Vec::with_capacity(n);
    let mut conditional = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = m.quantile(rng.gen()).unwrap();
        let eta = m.quantile(rng.gen()).unwrap();
        total.push(xi + eta);
        conditional.push(xi + 1.0);
    }
    let var = |s: &[f64]| {
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64
    };
    let vt = var(&total);
    let vc = var(&conditional);
    // fourth moment of an exponential(1) difference is bounded; a loose stderr suffices
    let stderr = 3.0 * vc / (n as f64).sqrt();
    assert!(vt >= vc - 3.0 * stderr);
}

#[test]
fn tabulated_table_behaves_like_its_source() {
    let m = exponential_table();
    let f = f_of_t(&m, 1.0).unwrap();
    assert!((f - 1f64.exp_m1()).abs() < 0.05 * 1f64.exp_m1());
    assert!(m.pdf(50.0) > 0.0);
    assert!(TabulatedDensity::parse("0 1\n1 0.5\n").is_err());
    assert!(TabulatedDensity::parse("0 1\n2 0.5\n1 0.2\n").is_err());
    assert!(TabulatedDensity::parse("0 1\n1 0.5\n2 0.0\n").is_err());
}

#[test]
fn kappa_moments() {
    let m = DensityModel::exponential(2.0).with_kappa(1.5);
    let numeric = m.kappa_moment().unwrap();
    assert!((numeric - exponential_kappa_moment(2.0, 1.5)).abs() < 1e-8);
    let hg = DensityModel::half_gaussian(1.0);
    // second moment of a half-Gaussian is σ²
    assert!((hg.kappa_moment().unwrap() - 1.0).abs() < 1e-8);
}

proptest! {
    #[test]
    fn quantile_inverts_tail(u in 0.0f64..0.999_999, kind in 0usize..5) {
        let m = &all_kinds()[kind];
        let v = m.quantile(u).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((m.tail_mass(v) - (1.0 - u)).abs() <= 1e-9);
    }

    #[test]
    fn f_is_nonnegative(t in 0.01f64..4.0, kind in 0usize..6) {
        let m = &all_kinds()[kind];
        prop_assert!(f_of_t(m, t).unwrap() >= 0.0);
    }
}
