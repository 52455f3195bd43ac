//! Randomized invariants.

use std::collections::BTreeMap;

use localdep::{
    h_bivariate_surrogate, h_surrogate, DensityModel, GaussianModel, LocalDependence, Point,
    QuadratureScheme, Subset,
};
use proptest::prelude::*;

/// Random SPD covariance `A Aᵀ + 0.1 I` with a random mean.
fn model_strategy(n: usize, zero_mean: bool) -> impl Strategy<Value = GaussianModel> {
    (
        prop::collection::vec(-1.0f64..1.0, n * n),
        prop::collection::vec(-3.0f64..3.0, n),
        prop::collection::vec(0.2f64..3.0, n),
    )
        .prop_map(move |(a, mean, scale)| {
            let cov = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let dot: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
                            (dot + if i == j { 0.1 } else { 0.0 }) * scale[i] * scale[j]
                        })
                        .collect()
                })
                .collect();
            let mean = if zero_mean { vec![0.0; n] } else { mean };
            GaussianModel::from_parts(mean, cov).unwrap()
        })
}

fn point_strategy(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-6.0f64..6.0, n).prop_map(|c| Point::new(c).unwrap())
}

fn model_and_point(n: usize, zero_mean: bool) -> impl Strategy<Value = (GaussianModel, Point)> {
    (model_strategy(n, zero_mean), point_strategy(n))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn determinant3_matches_pivot_product(m in model_strategy(3, true)) {
        let c = m.cov();
        prop_assert!(close(c.determinant3().unwrap(), c.determinant(), 1e-10));
        prop_assert!(c.determinant() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cholesky_reconstructs(m in (2usize..7).prop_flat_map(|n| model_strategy(n, false))) {
        let n = m.dim();
        let c = m.cov();
        let l = c.cholesky_factor();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                prop_assert!(close(v, c.get(i, j), 1e-12));
            }
        }
    }

    #[test]
    fn correlations_are_inside_unit_interval(m in model_strategy(4, false)) {
        for i in 0..4 {
            prop_assert_eq!(m.cov().correlation(i, i), 1.0);
            for j in 0..4 {
                if i != j {
                    prop_assert!(m.cov().correlation(i, j).abs() < 1.0);
                }
            }
        }
    }

    #[test]
    fn conditional_mean_is_affine(
        m in model_strategy(3, false),
        a in prop::collection::vec(-5.0f64..5.0, 2),
        b in prop::collection::vec(-5.0f64..5.0, 2),
        t in -2.0f64..2.0,
        target in 0usize..3,
    ) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = m.conditional_mean(target, &mix).unwrap();
        let rhs = t * m.conditional_mean(target, &a).unwrap() + (1.0 - t) * m.conditional_mean(target, &b).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn odd_symmetry_for_centered_models((m, p) in model_and_point(3, true)) {
        let ld = LocalDependence::new(&m).unwrap();
        let neg = Point::new(p.coords().iter().map(|v| -v).collect()).unwrap();
        let a = ld.h_trivariate(&p).unwrap().h_value;
        let b = ld.h_trivariate(&neg).unwrap().h_value;
        prop_assert!((a + b).abs() <= 1e-12);
    }

    #[test]
    fn bivariate_path_matches_expansion((m, p) in model_and_point(2, false)) {
        let ld = LocalDependence::new(&m).unwrap();
        let a = ld.h_bivariate(&p).unwrap();
        let b = ld.h_nvariate(&p).unwrap();
        prop_assert!((a.h_value - b.h_value).abs() <= 1e-12);
        prop_assert!(a.h_value.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn trivariate_path_matches_expansion((m, p) in model_and_point(3, false)) {
        let ld = LocalDependence::new(&m).unwrap();
        let a = ld.h_trivariate(&p).unwrap();
        let b = ld.h_nvariate(&p).unwrap();
        prop_assert!((a.h_value - b.h_value).abs() <= 1e-12);
        prop_assert!((a.numerator - b.numerator).abs() <= 1e-12 * (1.0 + a.numerator.abs()));
        prop_assert_eq!(a.rho_terms, b.rho_terms);
    }

    #[test]
    fn surrogate_reproduces_h((m, p) in model_and_point(3, false)) {
        let ld = LocalDependence::new(&m).unwrap();
        let r = ld.h_trivariate(&p).unwrap();
        let phi = &r.phi.phi;
        let h = h_surrogate(&r.rho_terms, &[phi[2], phi[0], phi[1]]).unwrap();
        prop_assert!((h - r.h_value).abs() <= 1e-12);
    }

    #[test]
    fn surrogate_pairing_symmetry(
        rho in prop::collection::vec(-0.9f64..0.9, 4),
        args in prop::collection::vec(-10.0f64..10.0, 3),
        perm in 0usize..6,
    ) {
        // Couples (t, rho_XY), (s, rho_YZ), (w, rho_XZ).
        let pair_sets = [mask(&[0, 1]), mask(&[1, 2]), mask(&[0, 2])];
        let terms = |r: [f64; 3]| -> BTreeMap<Subset, f64> {
            let mut m: BTreeMap<Subset, f64> = pair_sets.iter().copied().zip(r).collect();
            m.insert(mask(&[0, 1, 2]), rho[3]);
            m
        };
        let base = h_surrogate(&terms([rho[0], rho[1], rho[2]]), &args).unwrap();
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let o = orders[perm];
        let permuted = h_surrogate(&terms([rho[o[0]], rho[o[1]], rho[o[2]]]), &[args[o[0]], args[o[1]], args[o[2]]]).unwrap();
        prop_assert!((base - permuted).abs() <= 1e-12);
    }

    #[test]
    fn bivariate_origin_is_a_saddle(rho in -0.99f64..0.99) {
        prop_assume!(rho.abs() > 1e-3);
        let h = |t: f64, s: f64| h_bivariate_surrogate(rho, t, s);
        let d = 1e-4;
        let htt = (h(d, 0.0) - 2.0 * h(0.0, 0.0) + h(-d, 0.0)) / (d * d);
        let hss = (h(0.0, d) - 2.0 * h(0.0, 0.0) + h(0.0, -d)) / (d * d);
        let hts = (h(d, d) - h(d, -d) - h(-d, d) + h(-d, -d)) / (4.0 * d * d);
        prop_assert!((h(d, 0.0) - h(-d, 0.0)).abs() / (2.0 * d) <= 1e-6);
        prop_assert!((h(0.0, d) - h(0.0, -d)).abs() / (2.0 * d) <= 1e-6);
        prop_assert!(htt * hss - hts * hts < 0.0);
        prop_assert!((htt - -rho).abs() < 1e-5 && (hts - 1.0).abs() < 1e-5);
    }

    #[test]
    fn json_round_trip(m in model_strategy(3, false)) {
        let text = serde_json::to_string(&m.to_file()).unwrap();
        let back = GaussianModel::from_json(&text).unwrap();
        prop_assert_eq!(back.to_file(), m.to_file());
    }
}

fn mask(indices: &[usize]) -> Subset {
    Subset::from_indices(indices, 3).unwrap()
}

#[test]
fn pairwise_independent_gaussian_has_exact_reduction() {
    let m = GaussianModel::from_parts(
        vec![1.0, 0.0, -1.0],
        vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.5],
        ],
    )
    .unwrap();
    let ld = LocalDependence::new(&m).unwrap();
    let r = ld
        .h_trivariate(&Point::new(vec![0.3, -2.0, 4.0]).unwrap())
        .unwrap();
    for (s, v) in &r.rho_terms {
        if s.len() == 2 {
            assert_eq!(*v, 0.0, "{s}");
        }
    }
    let phi = &r.phi.phi;
    let reduced = (r.rho_terms[&mask(&[0, 1, 2])] + phi.iter().product::<f64>())
        / phi.iter().map(|f| (1.0 + f * f).sqrt()).product::<f64>();
    assert_eq!(r.h_value, reduced);
}

#[test]
fn pairwise_independent_density_keeps_triple_term() {
    // Pairwise independent but not jointly independent.
    let d = DensityModel::new(
        vec![(0.0, 1.0); 3],
        |x| 1.0 + 0.8 * (2.0 * x[0] - 1.0) * (2.0 * x[1] - 1.0) * (2.0 * x[2] - 1.0),
        QuadratureScheme::new(16).unwrap(),
        1e-12,
    )
    .unwrap();
    let ld = LocalDependence::new(&d).unwrap();
    let top = ld.rho_top();
    // With u = 2x - 1: E[uvw] = 0.8 E[u^2]^3 = 0.8/27, the central triple moment
    // is that over 8, and each variance is 1/12.
    assert!((top - 0.1 / 27.0 * 12f64.powf(1.5)).abs() < 1e-12, "{top}");
    for p in [[0.2, 0.7, 0.4], [0.9, 0.9, 0.1]] {
        let r = ld.h_trivariate(&Point::new(p.to_vec()).unwrap()).unwrap();
        for (s, v) in &r.rho_terms {
            if s.len() == 2 {
                assert!(v.abs() < 1e-14, "{s}: {v}");
            }
        }
        let phi = &r.phi.phi;
        let reduced = (top + phi.iter().product::<f64>())
            / phi.iter().map(|f| (1.0 + f * f).sqrt()).product::<f64>();
        assert!((r.h_value - reduced).abs() < 1e-12);
    }
}
