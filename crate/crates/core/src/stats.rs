//! Small statistical helpers for the simulation reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::pairwise_sum;

/// Standard normal CDF via the complementary error function, which keeps
/// full relative precision in the lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance `sup_x |F̂(x) - Φ(x)|` between the sample's
/// empirical CDF and the standard normal.
pub fn ks_statistic_normal(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::Parameter(format!(
            "KS statistic needs at least 2 observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Parameter("KS sample contains NaN".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = normal_cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Mean, sample standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// `None` for a single observation.
    pub sd: Option<f64>,
    /// `sd / √count`; `None` for a single observation.
    pub se: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        let mean = pairwise_sum(values) / count as f64;
        let (sd, se) = if count > 1 {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            let sd = (pairwise_sum(&dev) / (count - 1) as f64).sqrt();
            (Some(sd), Some(sd / (count as f64).sqrt()))
        } else {
            (None, None)
        };
        Self { count, mean, sd, se }
    }

    pub fn variance(&self) -> Option<f64> {
        self.sd.map(|s| s * s)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Parameter("slope fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Parameter("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("slope fit needs at least two distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// SplitMix64 finalizer over `(base_seed, index)`; gives each replication
/// an independent stream regardless of scheduling order.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
