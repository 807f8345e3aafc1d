//! Experiments that check the asymptotic claims empirically: normality of
//! the standardized SURE, the minimax rate, the oracle ratio and bandwidth
//! recovery.

use serde::Serialize;

use super::{map_replications, Experiment, ExperimentConfig, ExperimentKind, Penalty};
use crate::criterion::{sure_constants, SureInputs};
use crate::error::{Error, Result};
use crate::estimate::WeightScheme;
use crate::model::CovModel;
use crate::stats::{derive_seed, ks_statistic_normal, log_log_slope, Summary};
use crate::theory::{risk_profile, var_n, VarApprox, VarMethod};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltConfig {
    /// Model, n, scheme, replications and seed; penalties are ignored.
    pub experiment: ExperimentConfig,
    pub tau: usize,
    pub penalty: Penalty,
    pub var_method: VarMethod,
    /// Defaults to the model's exact bandwidth for the truncated method.
    pub truncation_band: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub config: CltConfig,
    pub c: f64,
    /// `R_c(τ)`.
    pub risk: f64,
    pub var_n: VarApprox,
    /// Summary of `(SURE_c(τ) - R_c(τ)) / √Var_n(τ)`.
    pub standardized: Summary,
    pub sample_variance: f64,
    /// KS distance of the standardized sample to N(0, 1).
    pub ks_statistic: f64,
    #[serde(skip)]
    pub statistics: Vec<f64>,
}

/// Standardizes SURE_c(τ) by its exact mean and `Var_n(τ)` across
/// replications and measures the distance to N(0, 1).
pub fn clt_experiment(config: &CltConfig) -> Result<CltReport> {
    let mut exp_cfg = config.experiment.clone();
    exp_cfg.kind = ExperimentKind::Clt;
    exp_cfg.penalties = vec![config.penalty];
    if exp_cfg.replications < 2 {
        return Err(Error::Config("the KS statistic is undefined for fewer than 2 replications".into()));
    }
    let n = exp_cfg.n;
    let c = config.penalty.resolve(n);
    let consts = sure_constants(n, c)?;
    let exp = Experiment::prepare(&exp_cfg)?;
    let scheme = &exp_cfg.scheme;
    let band = match config.var_method {
        VarMethod::Exact => None,
        VarMethod::BandedTruncated => Some(
            config
                .truncation_band
                .or_else(|| exp_cfg.model.bandwidth())
                .ok_or_else(|| Error::Config("banded-truncated Var_n needs a truncation band for this model".into()))?,
        ),
    };
    let var = var_n(exp.sigma(), n, scheme, config.tau, c, config.var_method, band)
        .map_err(|e| Error::Config(e.to_string()))?;
    let risk = risk_profile(exp.sigma(), n, scheme, c, &[config.tau])?.values[0];
    let scale = var.value.sqrt();

    let statistics = map_replications(exp_cfg.replications, |rep| {
        let st = exp.sample_cov(rep)?;
        let sure = SureInputs::new(&st).value(&consts, scheme, config.tau);
        Ok((sure - risk) / scale)
    })?;
    let standardized = Summary::of(&statistics);
    let mut resolved = config.clone();
    resolved.truncation_band = band;
    resolved.experiment = exp_cfg;
    Ok(CltReport {
        config: resolved,
        c,
        risk,
        var_n: var,
        sample_variance: standardized.variance().unwrap_or(f64::NAN),
        standardized,
        ks_statistic: ks_statistic_normal(&statistics)?,
        statistics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateConfig {
    pub alpha: f64,
    pub rho: f64,
    pub p: usize,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub scheme: WeightScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub loss: Summary,
    pub oracle_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub config: RateConfig,
    pub points: Vec<RatePoint>,
    /// Fitted log-log slope of the mean SURE_2-tuned loss against n.
    pub slope: f64,
    /// Same fit applied to the oracle risk `min_τ R(τ)`.
    pub oracle_slope: f64,
    /// `-(2α + 1) / (2(α + 1))`.
    pub target_slope: f64,
}

/// Mean loss of the SURE_2-tuned estimator under the polynomial-decay model
/// at several n, and the fitted convergence exponent.
pub fn rate_experiment(config: &RateConfig) -> Result<RateReport> {
    if config.n_list.len() < 3 {
        return Err(Error::Config("the rate fit needs at least 3 sample sizes".into()));
    }
    let model = CovModel::poly_decay(config.p, config.rho, config.alpha)?;
    let points = config
        .n_list
        .iter()
        .map(|&n| {
            let mut cfg = ExperimentConfig::new(model.clone(), n);
            cfg.kind = ExperimentKind::Rate;
            cfg.scheme = config.scheme.clone();
            cfg.replications = config.replications;
            cfg.base_seed = derive_seed(config.base_seed, n as u64);
            let report = Experiment::prepare(&cfg)?.run()?;
            Ok(RatePoint { n, loss: report.methods[0].loss, oracle_risk: report.oracle.risk })
        })
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = points.iter().map(|pt| pt.n as f64).collect();
    let losses: Vec<f64> = points.iter().map(|pt| pt.loss.mean).collect();
    let risks: Vec<f64> = points.iter().map(|pt| pt.oracle_risk).collect();
    Ok(RateReport {
        config: config.clone(),
        slope: log_log_slope(&ns, &losses)?,
        oracle_slope: log_log_slope(&ns, &risks)?,
        target_slope: -(2.0 * config.alpha + 1.0) / (2.0 * (config.alpha + 1.0)),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRatioReport {
    pub config: ExperimentConfig,
    pub mean_loss: Summary,
    pub oracle_tau: usize,
    pub oracle_risk: f64,
    /// Mean SURE_2-tuned loss divided by `R(τ₀)`.
    pub ratio: f64,
    /// 95% normal-approximation half-width of the ratio.
    pub half_width: f64,
}

/// Compares the SURE_2-tuned loss with the oracle risk `R(τ₀)`.
pub fn oracle_ratio_experiment(config: &ExperimentConfig) -> Result<OracleRatioReport> {
    let mut cfg = config.clone();
    cfg.kind = ExperimentKind::OracleRatio;
    cfg.penalties = vec![Penalty::AIC];
    let report = Experiment::prepare(&cfg)?.run()?;
    let loss = report.methods[0].loss;
    let risk = report.oracle.risk;
    Ok(OracleRatioReport {
        config: cfg,
        mean_loss: loss,
        oracle_tau: report.oracle.tau,
        oracle_risk: risk,
        ratio: loss.mean / risk,
        half_width: 1.96 * loss.se.unwrap_or(0.0) / risk,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyPoint {
    pub n: usize,
    /// Fraction of replications where SURE_logn selects exactly `k0`.
    pub logn_recovery: f64,
    /// Inclusive window `[k0, k0 + ⌈log n⌉]` for SURE_2.
    pub aic_window: (usize, usize),
    /// Fraction of replications where SURE_2 lands in the window.
    pub aic_in_window: f64,
    pub logn_histogram: std::collections::BTreeMap<usize, usize>,
    pub aic_histogram: std::collections::BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub config: ExperimentConfig,
    pub k0: usize,
    pub points: Vec<ConsistencyPoint>,
}

/// Bandwidth recovery of SURE_logn and SURE_2 at each n for an exactly
/// banded model.
pub fn consistency_experiment(config: &ExperimentConfig, n_list: &[usize]) -> Result<ConsistencyReport> {
    let k0 = config
        .model
        .bandwidth()
        .ok_or_else(|| Error::Config("consistency experiment needs an exactly banded model".into()))?;
    if n_list.is_empty() {
        return Err(Error::Config("n list is empty".into()));
    }
    let mut cfg = config.clone();
    cfg.kind = ExperimentKind::Consistency;
    cfg.penalties = vec![Penalty::LogN, Penalty::AIC];
    let points = n_list
        .iter()
        .map(|&n| {
            let mut run = cfg.clone();
            run.n = n;
            let records = Experiment::prepare(&run)?.run_records()?;
            let reps = records.len() as f64;
            let hi = k0 + (n as f64).ln().ceil() as usize;
            let mut logn_histogram = std::collections::BTreeMap::new();
            let mut aic_histogram = std::collections::BTreeMap::new();
            for r in &records {
                *logn_histogram.entry(r.selections[0].tau_hat).or_insert(0) += 1;
                *aic_histogram.entry(r.selections[1].tau_hat).or_insert(0) += 1;
            }
            let hits = records.iter().filter(|r| r.selections[0].tau_hat == k0).count();
            let in_window = records
                .iter()
                .filter(|r| (k0..=hi).contains(&r.selections[1].tau_hat))
                .count();
            Ok(ConsistencyPoint {
                n,
                logn_recovery: hits as f64 / reps,
                aic_window: (k0, hi),
                aic_in_window: in_window as f64 / reps,
                logn_histogram,
                aic_histogram,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport { config: cfg, k0, points })
}
