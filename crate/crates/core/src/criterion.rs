//! SURE_c profiles and data-driven selection of the tapering parameter.
//!
//! For weights `ω = ω^(τ)(|i - j|)` and `r = n/(n-1)`,
//!
//! ```text
//! SURE_c(τ) = Σ_{i,j} (r - ω)² σ̃_ij² + Σ_{i,j} (c ω - r)(a_n σ̃_ij² + b_n σ̃_ii σ̃_jj)
//! a_n = n(n-3) / ((n-1)(n-2)(n+1)),   b_n = n / ((n+1)(n-2))
//! ```
//!
//! `c = 2` gives the unbiased risk estimate (AIC analogue) and
//! `c = log n` the BIC analogue. Both forms depend on Σ̃ only through the
//! per-distance sums of `σ̃_ij²` and `σ̃_ii σ̃_jj`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{taper, unbiased_cov, WeightScheme};
use crate::estimate::frob_sq_dist;
use crate::matrix::{pairwise_sum, SymMatrix};
use crate::sweep::{argmin_first, value_at, Sweep};

/// `n`, `c` and the derived constants `a_n`, `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SureConstants {
    pub n: usize,
    pub c: f64,
    pub a_n: f64,
    pub b_n: f64,
}

impl SureConstants {
    /// `n / (n - 1)`.
    pub fn ratio(&self) -> f64 {
        self.n as f64 / (self.n - 1) as f64
    }

    /// Per-entry SURE contribution for weight ω given `σ̃_ij²` and
    /// `σ̃_ii σ̃_jj`.
    #[inline]
    pub(crate) fn term(&self, omega: f64, sq: f64, dd: f64) -> f64 {
        let r = self.ratio();
        let shrink = r - omega;
        shrink * shrink * sq + (self.c * omega - r) * (self.a_n * sq + self.b_n * dd)
    }
}

pub fn sure_constants(n: usize, c: f64) -> Result<SureConstants> {
    if n < 3 {
        return Err(Error::SampleSize { n, min: 3 });
    }
    if !(c >= 2.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("penalty c must be a finite real >= 2, got {c}")));
    }
    let nf = n as f64;
    let a_n = nf * (nf - 3.0) / ((nf - 1.0) * (nf - 2.0) * (nf + 1.0));
    let b_n = nf / ((nf + 1.0) * (nf - 2.0));
    Ok(SureConstants { n, c, a_n, b_n })
}

/// Unbiased estimate of `var(σ̃^s_ij)`:
/// `n/(n-1) · (a_n σ̃_ij² + b_n σ̃_ii σ̃_jj)`.
pub fn var_hat(sigma_tilde: &SymMatrix, consts: &SureConstants, i: usize, j: usize) -> f64 {
    let s = sigma_tilde.get(i, j);
    consts.ratio() * (consts.a_n * s * s + consts.b_n * sigma_tilde.get(i, i) * sigma_tilde.get(j, j))
}

/// SURE_c values over a τ grid and the selected τ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionProfile {
    pub tau_grid: Vec<usize>,
    pub values: Vec<f64>,
    pub c: f64,
    pub selected_tau: usize,
}

impl CriterionProfile {
    pub fn value_at(&self, tau: usize) -> Option<f64> {
        self.tau_grid.iter().position(|&t| t == tau).map(|k| self.values[k])
    }
}

/// Default search grid `1..=min(p, n)`.
pub fn default_tau_grid(n: usize, p: usize) -> Vec<usize> {
    (1..=p.min(n).max(1)).collect()
}

/// Grid `1..=min(cap, p)`; `cap = None` means `min(p, n)`.
pub fn tau_grid(n: usize, p: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(c) => (1..=c.min(p).max(1)).collect(),
        None => default_tau_grid(n, p),
    }
}

fn check_grid(scheme: &WeightScheme, grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parameter("tau grid is empty".into()));
    }
    grid.iter().try_for_each(|&t| scheme.check_tau(t))
}

/// Precomputed per-distance sums of a sample covariance; reusable across
/// penalties and schemes.
#[derive(Debug, Clone)]
pub struct SureInputs {
    sq: Vec<f64>,
    dd: Vec<f64>,
}

impl SureInputs {
    pub fn new(sigma_tilde: &SymMatrix) -> Self {
        let (sq, dd) = sigma_tilde.square_and_diag_sums();
        Self { sq, dd }
    }

    fn sweep<'a>(&'a self, consts: &'a SureConstants) -> Sweep<impl Fn(f64, usize) -> f64 + 'a> {
        Sweep::new(self.sq.len(), move |w, d| consts.term(w, self.sq[d], self.dd[d]))
    }

    pub fn profile(&self, consts: &SureConstants, scheme: &WeightScheme, grid: &[usize]) -> Result<CriterionProfile> {
        if consts.n < 4 {
            return Err(Error::SampleSize { n: consts.n, min: 4 });
        }
        check_grid(scheme, grid)?;
        let values = self.sweep(consts).profile(scheme, grid);
        let selected_tau = argmin_first(grid, &values);
        Ok(CriterionProfile { tau_grid: grid.to_vec(), values, c: consts.c, selected_tau })
    }

    pub fn value(&self, consts: &SureConstants, scheme: &WeightScheme, tau: usize) -> f64 {
        value_at(self.sq.len(), scheme, tau, |w, d| consts.term(w, self.sq[d], self.dd[d]))
    }
}

/// SURE_c(τ) for every τ in the grid.
pub fn sure_profile(
    sigma_tilde: &SymMatrix,
    consts: &SureConstants,
    scheme: &WeightScheme,
    tau_grid: &[usize],
) -> Result<CriterionProfile> {
    SureInputs::new(sigma_tilde).profile(consts, scheme, tau_grid)
}

/// SURE_c at a single τ, evaluated from scratch. Bit-identical to the
/// corresponding [`sure_profile`] entry.
pub fn sure_value(sigma_tilde: &SymMatrix, consts: &SureConstants, scheme: &WeightScheme, tau: usize) -> Result<f64> {
    scheme.check_tau(tau)?;
    Ok(SureInputs::new(sigma_tilde).value(consts, scheme, tau))
}

/// SURE_c(τ) assembled from its three defining terms,
/// `‖Σ̂^(τ) - Σ̃^s‖² - Σ var̂ + c (n-1)/n Σ ω var̂`, with no per-distance
/// shortcuts. Test oracle for [`sure_profile`].
pub fn sure_eq2_reference(
    sigma_tilde: &SymMatrix,
    consts: &SureConstants,
    scheme: &WeightScheme,
    tau: usize,
) -> Result<f64> {
    let n = consts.n;
    let estimate = taper(sigma_tilde, scheme, tau)?;
    let target = unbiased_cov(sigma_tilde, n)?;
    let fit = frob_sq_dist(&estimate.matrix, &target)?;
    let p = sigma_tilde.dim();
    let mut total_var = Vec::with_capacity(p * p);
    let mut weighted_var = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let v = var_hat(sigma_tilde, consts, i, j);
            total_var.push(v);
            weighted_var.push(scheme.weight(tau, i.abs_diff(j)) * v);
        }
    }
    let penalty = consts.c * (n - 1) as f64 / n as f64;
    Ok(fit - pairwise_sum(&total_var) + penalty * pairwise_sum(&weighted_var))
}

/// Smallest τ attaining the profile minimum.
pub fn select_tau(profile: &CriterionProfile) -> usize {
    argmin_first(&profile.tau_grid, &profile.values)
}
