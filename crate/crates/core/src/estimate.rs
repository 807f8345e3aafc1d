//! Sample covariance, Toeplitz tapering weights and the generalized
//! tapering estimator `Σ̂^(τ) = ω^(τ) ∘ Σ̃`.

use ndarray::Axis;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{pairwise_sum, SymMatrix};
use crate::model::Dataset;

/// Weight family `ω^(τ)(d)`, a function of the off-diagonal distance `d`
/// only.
///
/// Every family satisfies, for each τ:
/// `ω = 1` for `d <= ⌊τ/2⌋`, `ω = 0` for `d >= τ`, and `0 <= ω <= 1` in
/// between.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `ω = I(d < τ)`.
    Banding,
    /// Linear taper `(τ - d) / ⌊τ/2⌋` on the shell `⌊τ/2⌋ < d < τ`.
    CzzTaper,
    Custom(CustomWeights),
}

/// Validated per-τ weight tables. `tables[τ - 1][d]` is `ω^(τ)(d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CustomWeights {
    tables: Vec<Vec<f64>>,
}

impl CustomWeights {
    pub fn new(tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidWeights("no tables given".into()));
        }
        for (idx, table) in tables.iter().enumerate() {
            let tau = idx + 1;
            let half = tau / 2;
            for (d, &w) in table.iter().enumerate() {
                let ok = if d <= half {
                    w == 1.0
                } else if d >= tau {
                    w == 0.0
                } else {
                    (0.0..=1.0).contains(&w)
                };
                if !ok {
                    return Err(Error::InvalidWeights(format!("tau = {tau}, d = {d}: weight {w}")));
                }
            }
            if table.len() < tau {
                return Err(Error::InvalidWeights(format!(
                    "tau = {tau}: table has {} entries, need {tau}",
                    table.len()
                )));
            }
        }
        Ok(Self { tables })
    }

    pub fn max_tau(&self) -> usize {
        self.tables.len()
    }
}

impl WeightScheme {
    pub fn custom(tables: Vec<Vec<f64>>) -> Result<Self> {
        CustomWeights::new(tables).map(Self::Custom)
    }

    /// Largest τ the scheme is defined for, if bounded.
    pub fn max_tau(&self) -> Option<usize> {
        match self {
            Self::Custom(c) => Some(c.max_tau()),
            _ => None,
        }
    }

    pub fn supports(&self, tau: usize) -> bool {
        tau >= 1 && self.max_tau().is_none_or(|m| tau <= m)
    }

    pub(crate) fn check_tau(&self, tau: usize) -> Result<()> {
        if self.supports(tau) {
            Ok(())
        } else {
            Err(Error::Parameter(format!("tau = {tau} is outside the weight scheme's range")))
        }
    }

    /// `ω^(τ)(d)`.
    ///
    /// # Panics
    /// If τ is 0 or beyond a custom scheme's table.
    pub fn weight(&self, tau: usize, d: usize) -> f64 {
        assert!(self.supports(tau), "tau = {tau} not supported by {self:?}");
        if d >= tau {
            return 0.0;
        }
        match self {
            Self::Banding => 1.0,
            Self::CzzTaper => {
                let half = tau / 2;
                // τ <= 3 coincides with banding (and τ = 1 has no divisor).
                if tau <= 3 || d <= half {
                    1.0
                } else {
                    (tau - d) as f64 / half as f64
                }
            }
            Self::Custom(c) => c.tables[tau - 1][d],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Banding => "banding",
            Self::CzzTaper => "czz",
            Self::Custom(_) => "custom",
        }
    }
}

/// Free-function form of [`WeightScheme::weight`].
pub fn weight(scheme: &WeightScheme, tau: usize, d: usize) -> f64 {
    scheme.weight(tau, d)
}

/// Maximum-likelihood covariance `Σ̃ = (1/n) Σ_k (X_k - X̄)(X_k - X̄)ᵀ`.
pub fn mle_cov(data: &Dataset) -> Result<SymMatrix> {
    let n = data.n();
    if n < 3 {
        return Err(Error::SampleSize { n, min: 3 });
    }
    let rows = data.rows();
    let mean = rows.mean_axis(Axis(0)).expect("n >= 3");
    let centered = rows - &mean;
    let gram = centered.t().dot(&centered) / n as f64;
    Ok(SymMatrix::from_upper(gram))
}

/// Unbiased sample covariance `Σ̃^s = n/(n-1) · Σ̃`.
pub fn unbiased_cov(sigma_tilde: &SymMatrix, n: usize) -> Result<SymMatrix> {
    if n < 3 {
        return Err(Error::SampleSize { n, min: 3 });
    }
    Ok(sigma_tilde.scaled(n as f64 / (n - 1) as f64))
}

/// `Σ̂^(τ)` together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperedEstimate {
    pub tau: usize,
    pub scheme: WeightScheme,
    pub matrix: SymMatrix,
}

/// Entrywise product `ω^(τ) ∘ Σ̃`.
pub fn taper(sigma_tilde: &SymMatrix, scheme: &WeightScheme, tau: usize) -> Result<TaperedEstimate> {
    scheme.check_tau(tau)?;
    let p = sigma_tilde.dim();
    let weights: Vec<f64> = (0..p).map(|d| scheme.weight(tau, d)).collect();
    let matrix = SymMatrix::from_fn(p, |i, j| weights[j - i] * sigma_tilde.get(i, j));
    Ok(TaperedEstimate { tau, scheme: scheme.clone(), matrix })
}

/// Squared Frobenius distance `Σ_{i,j} (a_ij - b_ij)²`.
pub fn frob_sq_dist(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let sq: Vec<f64> = a
        .as_array()
        .iter()
        .zip(b.as_array().iter())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok(pairwise_sum(&sq))
}
