//! Population quantities for a known Σ: the risk `R_c(τ) = E[SURE_c(τ)]`,
//! the variance approximation `Var_n(τ)`, and brute-force Gaussian moment
//! oracles used to check them.

mod moments;
mod variance;

pub use moments::{exact_sure_variance, isserlis_moment, set_partitions, EXACT_SURE_MAX_N, EXACT_SURE_MAX_P};
pub use variance::{var_n, VarApprox, VarMethod, EXACT_VAR_MAX_P};

use serde::Serialize;

use crate::criterion::sure_constants;
use crate::error::{Error, Result};
use crate::estimate::WeightScheme;
use crate::matrix::SymMatrix;
use crate::sweep::{argmin_first, Sweep};

/// Per-entry coefficients of the SURE_c decomposition for a weight ω.
///
/// ```text
/// ā = (n/(n-1) - ω)²        b̄ = c ω - n/(n-1)
/// Ā = ā + a_n b̄             B̄ = ā + (a_n + b_n (n-1)) b̄      C̄ = ā + (a_n + b_n) b̄
/// ```
///
/// Since `a_n + b_n (n-1) = n/(n-1)`, `B̄` vanishes identically at ω = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffSet {
    pub abar: f64,
    pub bbar: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub big_c: f64,
}

pub fn coeffs(n: usize, c: f64, omega: f64) -> CoeffSet {
    let nf = n as f64;
    let a_n = nf * (nf - 3.0) / ((nf - 1.0) * (nf - 2.0) * (nf + 1.0));
    let b_n = nf / ((nf + 1.0) * (nf - 2.0));
    let r = nf / (nf - 1.0);
    let abar = (r - omega) * (r - omega);
    let bbar = c * omega - r;
    CoeffSet {
        abar,
        bbar,
        big_a: abar + a_n * bbar,
        big_b: abar + (a_n + b_n * (nf - 1.0)) * bbar,
        big_c: abar + (a_n + b_n) * bbar,
    }
}

/// `R_c(τ)` over a τ grid and its minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskProfile {
    pub tau_grid: Vec<usize>,
    pub values: Vec<f64>,
    pub c: f64,
    pub oracle_tau: usize,
}

impl RiskProfile {
    pub fn value_at(&self, tau: usize) -> Option<f64> {
        self.tau_grid.iter().position(|&t| t == tau).map(|k| self.values[k])
    }

    /// `R_c(τ₀)`.
    pub fn min_value(&self) -> f64 {
        self.value_at(self.oracle_tau).expect("oracle tau lies on the grid")
    }
}

/// Per-distance sums of `σ_ij²` and `σ_ii σ_jj` for a true Σ; reusable
/// across penalties, schemes and sample sizes.
#[derive(Debug, Clone)]
pub struct RiskInputs {
    sq: Vec<f64>,
    dd: Vec<f64>,
}

impl RiskInputs {
    pub fn new(sigma: &SymMatrix) -> Self {
        let (sq, dd) = sigma.square_and_diag_sums();
        Self { sq, dd }
    }

    pub fn profile(&self, n: usize, scheme: &WeightScheme, c: f64, tau_grid: &[usize]) -> Result<RiskProfile> {
        if n < 4 {
            return Err(Error::SampleSize { n, min: 4 });
        }
        sure_constants(n, c)?;
        if tau_grid.is_empty() {
            return Err(Error::Parameter("tau grid is empty".into()));
        }
        tau_grid.iter().try_for_each(|&t| scheme.check_tau(t))?;
        let nf = n as f64;
        // Three-zone closed form; at ω = 1 it reduces to
        // (c-1)/n σ_ij² + (nc-n-1)/n² σ_ii σ_jj and at ω = 0 to σ_ij².
        let term = |w: f64, d: usize| {
            let sq_coef = (nf - 1.0) / nf * (w * w - (2.0 * nf - c) / (nf - 1.0) * w) + 1.0;
            let dd_coef = (nf - 1.0) / (nf * nf) * (w * w + nf * (c - 2.0) / (nf - 1.0) * w);
            sq_coef * self.sq[d] + dd_coef * self.dd[d]
        };
        let values = Sweep::new(self.sq.len(), term).profile(scheme, tau_grid);
        let oracle_tau = argmin_first(tau_grid, &values);
        Ok(RiskProfile { tau_grid: tau_grid.to_vec(), values, c, oracle_tau })
    }
}

/// Exact `R_c(τ)` for Gaussian data with covariance Σ and sample size n.
/// With `c = 2` this is the Frobenius risk `E‖Σ̂^(τ) - Σ‖²`.
pub fn risk_profile(
    sigma: &SymMatrix,
    n: usize,
    scheme: &WeightScheme,
    c: f64,
    tau_grid: &[usize],
) -> Result<RiskProfile> {
    RiskInputs::new(sigma).profile(n, scheme, c, tau_grid)
}

/// Smallest τ minimizing the risk profile.
pub fn oracle_tau(profile: &RiskProfile) -> usize {
    argmin_first(&profile.tau_grid, &profile.values)
}
