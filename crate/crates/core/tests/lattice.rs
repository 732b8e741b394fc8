use eelab::densities::DensityModel;
use eelab::lattice::{
    apply_origin_shift, build_hamiltonian, sample_potential, BoxGeometry, PotentialField,
};
use eelab::spectral::eig_sym;
use proptest::prelude::*;

#[test]
fn three_site_chain_matrix() {
    let g = BoxGeometry::line(1, 0).unwrap();
    let h = build_hamiltonian(&PotentialField::zero(g)).to_dense();
    let expected = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
    for (i, row) in expected.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(h[(i, j)], v);
        }
    }
}

#[test]
fn square_3x3_matrix() {
    let g = BoxGeometry::new(2, 1, 0).unwrap();
    let h = build_hamiltonian(&PotentialField::zero(g)).to_dense();
    let mut bonds = 0;
    for i in 0..9 {
        assert_eq!(h[(i, i)], 4.0);
        for j in 0..9 {
            assert_eq!(h[(i, j)], h[(j, i)]);
            if i < j && h[(i, j)] != 0.0 {
                assert_eq!(h[(i, j)], -1.0);
                let (a, b) = (g.coords(i), g.coords(j));
                let dist: i64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
                assert_eq!(dist, 1);
                bonds += 1;
            }
        }
    }
    assert_eq!(bonds, 12);
}

#[test]
fn free_chain_spectrum_in_band() {
    let g = BoxGeometry::line(50, 0).unwrap();
    let d = eig_sym(&build_hamiltonian(&PotentialField::zero(g))).unwrap();
    let n = g.num_sites();
    for (k, &lam) in d.eigenvalues.iter().enumerate() {
        let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((lam - exact).abs() < 1e-12);
        assert!((0.0..=4.0).contains(&lam));
    }
}

#[test]
fn point_mass_density_gives_zero_field() {
    let g = BoxGeometry::line(20, 0).unwrap();
    let f = sample_potential(&DensityModel::point_mass(0.0), g, 1, 0).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn sampling_is_reproducible() {
    let g = BoxGeometry::line(2, 0).unwrap();
    let d = DensityModel::exponential(1.0);
    let a = sample_potential(&d, g, 11, 0).unwrap();
    let b = sample_potential(&d, g, 11, 0).unwrap();
    assert_eq!(a.values.len(), 5);
    assert_eq!(a, b);
    let c = sample_potential(&d, g, 11, 1).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn site_values_do_not_depend_on_box_size() {
    // the value at a site index is a function of (seed, index, site) only
    let d = DensityModel::exponential(1.0);
    let small = sample_potential(&d, BoxGeometry::line(3, 0).unwrap(), 5, 2).unwrap();
    let large = sample_potential(&d, BoxGeometry::line(9, 0).unwrap(), 5, 2).unwrap();
    assert_eq!(small.values[..], large.values[..7]);
}

#[test]
fn exponential_sample_mean() {
    let g = BoxGeometry::line(5000, 0).unwrap();
    let f = sample_potential(&DensityModel::exponential(1.0), g, 2024, 0).unwrap();
    let n = f.values.len() as f64;
    let mean = f.values.iter().sum::<f64>() / n;
    // exact mean and standard deviation are both 1
    assert!((mean - 1.0).abs() < 4.0 / n.sqrt());
    assert!(f.values.iter().all(|&v| v >= 0.0));
}

#[test]
fn origin_shift() {
    let g = BoxGeometry::line(4, 0).unwrap();
    let mut values = vec![0.3; 9];
    values[g.origin()] = 0.7;
    let f = PotentialField::from_values(g, values).unwrap();
    assert_eq!(apply_origin_shift(&f, 0.0).unwrap().values, f.values);
    let s = apply_origin_shift(&f, 50.0).unwrap();
    assert_eq!(s.at_origin(), 50.7);
    assert_eq!(s.origin_shift_t, 50.0);
    for (i, (a, b)) in f.values.iter().zip(&s.values).enumerate() {
        if i != g.origin() {
            assert_eq!(a, b);
        }
    }
    assert!(apply_origin_shift(&f, -1.0).is_err());
}

#[test]
fn geometry_rejects_bad_shapes() {
    assert!(BoxGeometry::new(3, 4, 0).is_err());
    assert!(BoxGeometry::new(1, 0, 0).is_err());
    assert!(BoxGeometry::new(1, 4, 5).is_err());
    assert_eq!(BoxGeometry::new(2, 4, 2).unwrap().block_side(), 5);
}

proptest! {
    #[test]
    fn index_round_trips(d in 1usize..=2, n in 1usize..12) {
        let g = BoxGeometry::new(d, n, 0).unwrap();
        for i in 0..g.num_sites() {
            prop_assert_eq!(g.index(&g.coords(i)), Some(i));
        }
    }

    #[test]
    fn shifted_hamiltonian_differs_by_rank_one(
        d in 1usize..=2,
        n in 1usize..5,
        seed in any::<u64>(),
        t in 0.0f64..100.0,
    ) {
        let g = BoxGeometry::new(d, n, 0).unwrap();
        let f = sample_potential(&DensityModel::exponential(1.0), g, seed, 0).unwrap();
        let h = build_hamiltonian(&f).to_dense();
        let ht = build_hamiltonian(&apply_origin_shift(&f, t).unwrap()).to_dense();
        let o = g.origin();
        for i in 0..g.num_sites() {
            for j in 0..g.num_sites() {
                let diff = ht[(i, j)] - h[(i, j)];
                if (i, j) == (o, o) {
                    prop_assert!((diff - t).abs() <= 1e-12 * (1.0 + t));
                } else {
                    prop_assert_eq!(diff, 0.0);
                }
            }
        }
    }

    #[test]
    fn hamiltonian_is_positive_semidefinite(
        d in 1usize..=2,
        n in 1usize..6,
        seed in any::<u64>(),
    ) {
        let g = BoxGeometry::new(d, n, 0).unwrap();
        let f = sample_potential(&DensityModel::half_gaussian(1.0), g, seed, 3).unwrap();
        prop_assert!(f.values.iter().all(|&v| v >= 0.0));
        let h = build_hamiltonian(&f);
        prop_assert_eq!(h.to_dense().asymmetry(), 0.0);
        let spec = eig_sym(&h).unwrap();
        prop_assert!(spec.eigenvalues[0] >= -1e-10);
    }
}
