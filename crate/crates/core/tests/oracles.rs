use surecov::sim::{consistency_experiment, rate_experiment, RateConfig};
use surecov::stats::derive_seed;
use surecov::theory::exact_sure_variance;
use surecov::{mle_cov, sure_constants, sure_profile, CovModel, ExperimentConfig, NormalSampler, SymMatrix, WeightScheme};

fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn exact_variance_matches_monte_carlo_with_jackknife_error() {
    let (n, reps, groups) = (10usize, 1_000_000usize, 100usize);
    let sigma = SymMatrix::identity(2);
    let sampler = NormalSampler::new(&sigma).unwrap();
    let consts = sure_constants(n, 2.0).unwrap();
    let values: Vec<f64> = (0..reps)
        .map(|rep| {
            let st = mle_cov(&sampler.sample(n, derive_seed(2024, rep as u64)).unwrap()).unwrap();
            sure_profile(&st, &consts, &WeightScheme::Banding, &[2]).unwrap().values[0]
        })
        .collect();
    let full = sample_variance(&values);

    // Delete-a-group jackknife for the standard error of the sample variance.
    let size = reps / groups;
    let leave_out: Vec<f64> = (0..groups)
        .map(|g| {
            let rest: Vec<f64> = values[..g * size].iter().chain(&values[(g + 1) * size..]).copied().collect();
            sample_variance(&rest)
        })
        .collect();
    let mean_lo = leave_out.iter().sum::<f64>() / groups as f64;
    let g = groups as f64;
    let se = ((g - 1.0) / g * leave_out.iter().map(|v| (v - mean_lo).powi(2)).sum::<f64>()).sqrt();

    let exact = exact_sure_variance(&sigma, n, &WeightScheme::Banding, 2, 2.0).unwrap();
    assert!((full - exact).abs() <= 3.0 * se, "Monte Carlo {full} ± {se}, exact {exact}");
}

#[test]
fn rate_targets_follow_the_smoothness_exponent() {
    let cfg = RateConfig {
        alpha: 0.1,
        rho: 0.6,
        p: 30,
        n_list: vec![20, 40, 80],
        replications: 3,
        base_seed: 1,
        scheme: WeightScheme::Banding,
    };
    let r = rate_experiment(&cfg).unwrap();
    assert!((r.target_slope + 1.2 / 2.2).abs() < 1e-15);
    assert_eq!(r.points.len(), 3);
    assert!(r.slope < 0.0 && r.oracle_slope < 0.0);
}

#[test]
fn logn_recovers_banded_model_bandwidth() {
    let mut cfg = ExperimentConfig::new(CovModel::banded_uniform(500, 5, 0.25).unwrap(), 250);
    cfg.replications = 25;
    let r = consistency_experiment(&cfg, &[250]).unwrap();
    let pt = &r.points[0];
    assert_eq!(pt.logn_recovery, 1.0, "{:?}", pt.logn_histogram);
    assert_eq!(pt.aic_window, (5, 11));
    assert_eq!(pt.aic_in_window, 1.0, "{:?}", pt.aic_histogram);
}
