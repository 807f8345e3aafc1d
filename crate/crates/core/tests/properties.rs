use ndarray::Array2;
use proptest::prelude::*;
use surecov::theory::{coeffs, risk_profile, var_n, VarMethod};
use surecov::{
    frob_sq_dist, mle_cov, sample_dataset, select_tau, sure_constants, sure_eq2_reference, sure_profile, taper,
    CovModel, Dataset, SymMatrix, WeightScheme,
};

fn sym_strategy(max_p: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_p).prop_flat_map(|p| {
        prop::collection::vec(-3.0f64..3.0, p * p).prop_map(move |v| SymMatrix::from_fn(p, |i, j| v[i * p + j]))
    })
}

fn data_strategy() -> impl Strategy<Value = Array2<f64>> {
    (4usize..20, 1usize..12).prop_flat_map(|(n, p)| {
        prop::collection::vec(-5.0f64..5.0, n * p).prop_map(move |v| Array2::from_shape_vec((n, p), v).unwrap())
    })
}

fn scheme_strategy() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![Just(WeightScheme::Banding), Just(WeightScheme::CzzTaper)]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn frobenius_distance_is_a_symmetric_nonnegative_form(a in sym_strategy(8), seed in any::<u64>()) {
        let p = a.dim();
        let b = SymMatrix::from_fn(p, |i, j| a.get(i, j) + ((seed >> ((i + j) % 60)) & 1) as f64);
        let ab = frob_sq_dist(&a, &b).unwrap();
        prop_assert_eq!(ab, frob_sq_dist(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(frob_sq_dist(&a, &a).unwrap(), 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn banding_is_idempotent(m in sym_strategy(10), tau in 1usize..12) {
        let tau = tau.min(m.dim());
        let once = taper(&m, &WeightScheme::Banding, tau).unwrap().matrix;
        let twice = taper(&once, &WeightScheme::Banding, tau).unwrap().matrix;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tapering_respects_the_weight_support(m in sym_strategy(10), tau in 1usize..12, czz in any::<bool>()) {
        let tau = tau.min(m.dim());
        let scheme = if czz { WeightScheme::CzzTaper } else { WeightScheme::Banding };
        let t = taper(&m, &scheme, tau).unwrap().matrix;
        for i in 0..m.dim() {
            prop_assert_eq!(t.get(i, i), m.get(i, i));
            for j in 0..m.dim() {
                prop_assert_eq!(t.get(i, j), t.get(j, i));
                if i.abs_diff(j) >= tau {
                    prop_assert_eq!(t.get(i, j), 0.0);
                }
                prop_assert!(t.get(i, j).abs() <= m.get(i, j).abs());
            }
        }
    }

    #[test]
    fn mle_cov_ignores_location_shifts(rows in data_strategy(), shift in prop::collection::vec(-100.0f64..100.0, 12)) {
        let p = rows.ncols();
        let mut shifted = rows.clone();
        for mut row in shifted.rows_mut() {
            for (x, s) in row.iter_mut().zip(&shift[..p]) {
                *x += s;
            }
        }
        let a = mle_cov(&Dataset::from_rows(rows).unwrap()).unwrap();
        let b = mle_cov(&Dataset::from_rows(shifted).unwrap()).unwrap();
        for i in 0..p {
            for j in 0..p {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-9, "{} vs {}", a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn sure_profile_matches_reference_and_scales_quadratically(
        rows in data_strategy(),
        scheme in scheme_strategy(),
        c in 2.0f64..6.0,
        s in 0.1f64..10.0,
    ) {
        let data = Dataset::from_rows(rows.clone()).unwrap();
        let st = mle_cov(&data).unwrap();
        let k = sure_constants(data.n(), c).unwrap();
        let grid: Vec<usize> = (1..=st.dim()).collect();
        let prof = sure_profile(&st, &k, &scheme, &grid).unwrap();
        let scaled = sure_profile(&st.scaled(s), &k, &scheme, &grid).unwrap();
        let scale = prof.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (idx, &tau) in grid.iter().enumerate() {
            let r = sure_eq2_reference(&st, &k, &scheme, tau).unwrap();
            prop_assert!((prof.values[idx] - r).abs() <= 1e-10 * scale.max(r.abs()), "tau={tau}: {} vs {r}", prof.values[idx]);
            prop_assert!((scaled.values[idx] - s * s * prof.values[idx]).abs() <= 1e-10 * s * s * scale);
        }
        prop_assert!(grid.contains(&select_tau(&prof)));
    }

    #[test]
    fn coefficient_bounds(n in 4usize..2000, frac in 0.0f64..1.0, w in prop_oneof![Just(0.0), Just(0.25), Just(0.5), Just(1.0)]) {
        let c = 2.0 + frac * ((n as f64 / 4.0) - 2.0).max(0.0);
        let k = coeffs(n, c, w);
        prop_assert!(k.big_a.abs() <= 2.0);
        prop_assert!(k.big_c.abs() <= 2.0);
        prop_assert!(k.big_b <= c + 1e-12);
        if w == 0.0 {
            prop_assert!(k.big_b.abs() < 1e-12);
        }
    }

    #[test]
    fn risk_is_quadratic_in_sigma_and_positive(
        p in 2usize..30,
        k0 in 1usize..6,
        offdiag in 0.0f64..0.3,
        n in 4usize..300,
        s in 0.1f64..5.0,
        czz in any::<bool>(),
    ) {
        let k0 = k0.min(p);
        let sigma = CovModel::banded_uniform(p, k0, offdiag).unwrap().sigma().unwrap();
        let scheme = if czz { WeightScheme::CzzTaper } else { WeightScheme::Banding };
        let grid: Vec<usize> = (1..=p).collect();
        let r = risk_profile(&sigma, n, &scheme, 2.0, &grid).unwrap();
        let rs = risk_profile(&sigma.scaled(s), n, &scheme, 2.0, &grid).unwrap();
        for (a, b) in r.values.iter().zip(&rs.values) {
            prop_assert!(*a > 0.0);
            prop_assert!(rel_close(*b, s * s * a, 1e-12));
        }
    }

    #[test]
    fn var_n_positive_and_truncation_lossless(
        p in 2usize..16,
        k0 in 1usize..5,
        offdiag in 0.0f64..0.3,
        n in 4usize..200,
        tau in 1usize..16,
        c in 2.0f64..5.0,
    ) {
        let k0 = k0.min(p);
        let tau = tau.min(p);
        let sigma = CovModel::banded_uniform(p, k0, offdiag).unwrap().sigma().unwrap();
        for scheme in [WeightScheme::Banding, WeightScheme::CzzTaper] {
            let exact = var_n(&sigma, n, &scheme, tau, c, VarMethod::Exact, None).unwrap();
            let banded = var_n(&sigma, n, &scheme, tau, c, VarMethod::BandedTruncated, Some(k0)).unwrap();
            prop_assert!(exact.value > 0.0);
            prop_assert!(rel_close(exact.value, banded.value, 1e-10), "{} vs {}", exact.value, banded.value);
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), p in 1usize..8, n in 3usize..20) {
        let sigma = CovModel::ar_decay(p, 0.5).unwrap().sigma().unwrap();
        let a = sample_dataset(&sigma, n, seed).unwrap();
        let b = sample_dataset(&sigma, n, seed).unwrap();
        prop_assert_eq!(a.rows(), b.rows());
    }
}

#[test]
fn model_matrices_are_bit_symmetric_with_unit_diagonal() {
    for model in [
        CovModel::poly_decay(60, 0.6, 0.5).unwrap(),
        CovModel::poly_decay(60, 0.6, 0.1).unwrap(),
        CovModel::ar_decay(60, 0.95).unwrap(),
        CovModel::ar_decay(60, 0.5).unwrap(),
    ] {
        let s = model.sigma().unwrap();
        for i in 0..60 {
            assert_eq!(s.get(i, i), 1.0);
            for j in 0..60 {
                assert_eq!(s.get(i, j).to_bits(), s.get(j, i).to_bits());
            }
        }
    }
}

#[test]
fn sample_means_vanish_at_root_n_rate() {
    let sigma = CovModel::ar_decay(5, 0.5).unwrap().sigma().unwrap();
    let n = 100_000;
    let data = sample_dataset(&sigma, n, 77).unwrap();
    for (j, col) in data.rows().columns().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let se = (sigma.get(j, j) / n as f64).sqrt();
        assert!(mean.abs() < 5.0 * se, "coordinate {j}: mean {mean}");
    }
}

#[test]
fn large_sample_covariance_converges() {
    let sigma = CovModel::ar_decay(50, 0.5).unwrap().sigma().unwrap();
    let st = mle_cov(&sample_dataset(&sigma, 10_000, 1).unwrap()).unwrap();
    assert!((st.get(0, 1) - 0.5).abs() < 0.05, "{}", st.get(0, 1));

    let st = mle_cov(&sample_dataset(&SymMatrix::identity(5), 100_000, 3).unwrap()).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((st.get(i, j) - target).abs() < 0.02, "({i}, {j}) = {}", st.get(i, j));
        }
    }
}
