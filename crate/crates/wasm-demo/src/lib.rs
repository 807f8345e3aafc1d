//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string.
//! The `*_json` functions hold the logic and are callable natively.

use serde::Serialize;
use surecov::criterion::tau_grid;
use surecov::sim::{Experiment, ExperimentConfig};
use surecov::{mle_cov, risk_profile, sample_dataset, taper, CovModel, Error, Penalty, Result, WeightScheme};
use wasm_bindgen::prelude::*;

/// Largest dimension the heatmap view accepts.
pub const HEATMAP_MAX_P: usize = 200;
/// Largest dimension the curve views accept.
pub const CURVE_MAX_P: usize = 1000;

/// Model description shared by all exports. `family` is one of `poly`,
/// `ar`, `banded` or `identity`; parameters that do not apply are ignored.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams<'a> {
    pub family: &'a str,
    pub p: usize,
    pub rho: f64,
    pub alpha: f64,
    pub k0: usize,
    pub offdiag: f64,
}

impl ModelParams<'_> {
    pub fn build(&self, max_p: usize) -> Result<CovModel> {
        if self.p > max_p {
            return Err(Error::Parameter(format!("p = {} exceeds the demo limit of {max_p}", self.p)));
        }
        match self.family {
            "poly" => CovModel::poly_decay(self.p, self.rho, self.alpha),
            "ar" => CovModel::ar_decay(self.p, self.rho),
            "banded" => CovModel::banded_uniform(self.p, self.k0, self.offdiag),
            "identity" => CovModel::identity(self.p),
            other => Err(Error::Parameter(format!("unknown model family {other:?}"))),
        }
    }
}

fn parse_scheme(name: &str) -> Result<WeightScheme> {
    match name {
        "banding" => Ok(WeightScheme::Banding),
        "czz" => Ok(WeightScheme::CzzTaper),
        other => Err(Error::Parameter(format!("unknown scheme {other:?}"))),
    }
}

fn parse_penalty(text: &str, n: usize) -> Result<f64> {
    let c = text.parse::<Penalty>()?.resolve(n);
    if c < 2.0 {
        return Err(Error::Parameter(format!("c must be >= 2, got {c}")));
    }
    Ok(c)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

#[derive(Debug, Serialize)]
struct RiskCurves {
    tau: Vec<usize>,
    c: f64,
    banding: Vec<f64>,
    czz: Vec<f64>,
    oracle_banding: usize,
    oracle_czz: usize,
}

/// Exact risk `R_c(τ)` for banding and tapering on `1..=tau_max`.
pub fn risk_curves_json(model: ModelParams, n: usize, c: &str, tau_max: usize) -> Result<String> {
    let model = model.build(CURVE_MAX_P)?;
    let c = parse_penalty(c, n)?;
    let sigma = model.sigma()?;
    let grid = tau_grid(n, model.p, Some(tau_max.max(1)));
    let band = risk_profile(&sigma, n, &WeightScheme::Banding, c, &grid)?;
    let czz = risk_profile(&sigma, n, &WeightScheme::CzzTaper, c, &grid)?;
    Ok(to_json(&RiskCurves {
        tau: grid,
        c,
        oracle_banding: band.oracle_tau,
        oracle_czz: czz.oracle_tau,
        banding: band.values,
        czz: czz.values,
    }))
}

#[derive(Debug, Serialize)]
struct SureCurves {
    tau: Vec<usize>,
    c: f64,
    sure: Vec<f64>,
    loss: Vec<f64>,
    risk: Vec<f64>,
    tau_hat: usize,
    oracle_tau: usize,
    loss_at_tau_hat: f64,
}

/// One simulated data set: the SURE_c profile next to the realized loss
/// `‖Σ̂^(τ) - Σ‖²` and the risk `R(τ)`.
pub fn sure_curves_json(
    model: ModelParams,
    n: usize,
    scheme: &str,
    c: &str,
    tau_max: usize,
    seed: u64,
) -> Result<String> {
    let mut config = ExperimentConfig::new(model.build(CURVE_MAX_P)?, n);
    config.scheme = parse_scheme(scheme)?;
    config.penalties = vec![c.parse()?];
    config.replications = 1;
    config.base_seed = seed;
    config.tau_max = Some(tau_max.max(1));
    config.keep_profiles = true;
    let exp = Experiment::prepare(&config)?;
    let record = exp.run_replication(0)?;
    let profile = record.profiles.into_iter().next().expect("profiles kept");
    let selection = &record.selections[0];
    let risk = risk_profile(exp.sigma(), n, &config.scheme, 2.0, exp.grid())?;
    Ok(to_json(&SureCurves {
        tau: exp.grid().to_vec(),
        c: selection.c,
        tau_hat: selection.tau_hat,
        loss_at_tau_hat: selection.loss,
        oracle_tau: risk.oracle_tau,
        sure: profile.values,
        loss: record.loss_curve,
        risk: risk.values,
    }))
}

#[derive(Debug, Serialize)]
struct Heatmaps {
    p: usize,
    tau: usize,
    /// Row-major p × p matrices.
    truth: Vec<f64>,
    sample: Vec<f64>,
    estimate: Vec<f64>,
    sample_loss: f64,
    estimate_loss: f64,
}

/// True Σ, the sample covariance and its tapered version at `tau`.
pub fn heatmaps_json(model: ModelParams, n: usize, scheme: &str, tau: usize, seed: u64) -> Result<String> {
    let model = model.build(HEATMAP_MAX_P)?;
    let scheme = parse_scheme(scheme)?;
    let sigma = model.sigma()?;
    let data = sample_dataset(&sigma, n, seed)?;
    let sample = mle_cov(&data)?;
    let estimate = taper(&sample, &scheme, tau.clamp(1, model.p))?;
    let flat = |m: &surecov::SymMatrix| m.as_array().iter().copied().collect::<Vec<f64>>();
    Ok(to_json(&Heatmaps {
        p: model.p,
        tau: estimate.tau,
        sample_loss: surecov::frob_sq_dist(&sample, &sigma)?,
        estimate_loss: surecov::frob_sq_dist(&estimate.matrix, &sigma)?,
        truth: flat(&sigma),
        sample: flat(&sample),
        estimate: flat(&estimate.matrix),
    }))
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn risk_curves(
    family: &str,
    p: usize,
    rho: f64,
    alpha: f64,
    k0: usize,
    offdiag: f64,
    n: usize,
    c: &str,
    tau_max: usize,
) -> std::result::Result<String, JsError> {
    let model = ModelParams { family, p, rho, alpha, k0, offdiag };
    risk_curves_json(model, n, c, tau_max).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sure_curves(
    family: &str,
    p: usize,
    rho: f64,
    alpha: f64,
    k0: usize,
    offdiag: f64,
    n: usize,
    scheme: &str,
    c: &str,
    tau_max: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    let model = ModelParams { family, p, rho, alpha, k0, offdiag };
    sure_curves_json(model, n, scheme, c, tau_max, seed as u64).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn heatmaps(
    family: &str,
    p: usize,
    rho: f64,
    alpha: f64,
    k0: usize,
    offdiag: f64,
    n: usize,
    scheme: &str,
    tau: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    let model = ModelParams { family, p, rho, alpha, k0, offdiag };
    heatmaps_json(model, n, scheme, tau, seed as u64).map_err(js_err)
}
