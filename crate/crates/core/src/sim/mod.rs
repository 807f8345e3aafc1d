//! Monte Carlo replication engine and the preset experiments.
//!
//! Every replication draws its data from a seed derived from
//! `(base_seed, rep_index)`, and results are reduced in replication order,
//! so reports are bit-identical for any thread count.

mod experiments;
pub mod presets;

pub use experiments::{
    clt_experiment, consistency_experiment, oracle_ratio_experiment, rate_experiment, CltConfig, CltReport,
    ConsistencyPoint, ConsistencyReport, OracleRatioReport, RateConfig, RatePoint, RateReport,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::criterion::{sure_constants, tau_grid, CriterionProfile, SureConstants, SureInputs};
use crate::error::{Error, Result};
use crate::estimate::{frob_sq_dist, mle_cov, taper, WeightScheme};
use crate::matrix::SymMatrix;
use crate::model::{CovModel, NormalSampler};
use crate::stats::{derive_seed, Summary};
use crate::sweep::Sweep;
use crate::theory::{risk_profile, RiskProfile};

/// Penalty multiplier `c`: a fixed real or `log n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Fixed(f64),
    LogN,
}

impl Penalty {
    pub const AIC: Penalty = Penalty::Fixed(2.0);

    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Self::Fixed(c) => c,
            Self::LogN => (n as f64).ln(),
        }
    }

    pub fn label(self) -> String {
        match self {
            Self::Fixed(c) => format!("SURE_{c}"),
            Self::LogN => "SURE_logn".to_string(),
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(c) => write!(f, "{c}"),
            Self::LogN => f.write_str("logn"),
        }
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logn" | "log(n)" | "log-n" | "bic" => Ok(Self::LogN),
            "aic" => Ok(Self::AIC),
            other => other
                .parse::<f64>()
                .map(Self::Fixed)
                .map_err(|_| Error::Config(format!("penalty must be a number or \"logn\", got {s:?}"))),
        }
    }
}

impl Serialize for Penalty {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(c) => serializer.serialize_f64(*c),
            Self::LogN => serializer.serialize_str("logn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Table,
    Clt,
    Rate,
    OracleRatio,
    Consistency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: CovModel,
    pub n: usize,
    pub scheme: WeightScheme,
    pub penalties: Vec<Penalty>,
    pub replications: usize,
    pub base_seed: u64,
    /// Upper end of the τ search grid; `None` means `min(p, n)`.
    pub tau_max: Option<usize>,
    pub kind: ExperimentKind,
    /// Keep every replication's SURE profiles in the records.
    #[serde(skip)]
    pub keep_profiles: bool,
}

impl ExperimentConfig {
    /// Banding, SURE_2, 100 replications, seed 1.
    pub fn new(model: CovModel, n: usize) -> Self {
        Self {
            model,
            n,
            scheme: WeightScheme::Banding,
            penalties: vec![Penalty::AIC],
            replications: 100,
            base_seed: 1,
            tau_max: None,
            kind: ExperimentKind::Table,
            keep_profiles: false,
        }
    }

    pub fn p(&self) -> usize {
        self.model.p
    }

    pub fn tau_grid(&self) -> Vec<usize> {
        tau_grid(self.n, self.p(), self.tau_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.n < 4 {
            return Err(Error::Config(format!("n must be >= 4, got {}", self.n)));
        }
        if self.penalties.is_empty() {
            return Err(Error::Config("at least one penalty c is required".into()));
        }
        if self.tau_max == Some(0) {
            return Err(Error::Config("tau-max must be >= 1".into()));
        }
        for pen in &self.penalties {
            let c = pen.resolve(self.n);
            if !(c >= 2.0) {
                return Err(Error::Config(format!("penalty {pen} resolves to c = {c} < 2 at n = {}", self.n)));
            }
        }
        self.model.validate()?;
        self.tau_grid().iter().try_for_each(|&t| self.scheme.check_tau(t))
    }
}

/// Outcome of one tuning rule in one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub penalty: Penalty,
    pub c: f64,
    pub tau_hat: usize,
    /// `‖Σ̂^(τ̂) - Σ‖_F²`.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub rep_index: usize,
    pub seed: u64,
    pub selections: Vec<Selection>,
    /// `‖Σ̂^(τ) - Σ‖_F²` for every τ on the grid.
    pub loss_curve: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<CriterionProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub label: String,
    pub penalty: Penalty,
    pub c: f64,
    pub loss: Summary,
    pub selected_tau: Summary,
    pub histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    /// `argmin_τ R(τ)` on the search grid.
    pub tau: usize,
    /// `R(τ₀)`, the smallest Frobenius risk on the grid.
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedTauSummary {
    pub tau: usize,
    pub loss: Summary,
}

/// Aggregated Monte Carlo results. Contains no wall-clock timing, so
/// identical configs give identical reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub p: usize,
    pub replications: usize,
    pub sampler_jittered: bool,
    pub methods: Vec<MethodSummary>,
    pub oracle: OracleSummary,
    /// The fixed τ with the smallest empirical mean loss.
    pub best_fixed_tau: FixedTauSummary,
}

impl ExperimentReport {
    pub fn method(&self, penalty: Penalty) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.penalty == penalty)
    }
}

/// A configuration with Σ, its factor and the SURE constants precomputed.
pub struct Experiment {
    config: ExperimentConfig,
    sigma: SymMatrix,
    sampler: NormalSampler,
    grid: Vec<usize>,
    consts: Vec<SureConstants>,
    sigma_sq: Vec<f64>,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let sigma = config.model.sigma()?;
        let sampler = NormalSampler::new(&sigma)?;
        let consts = config
            .penalties
            .iter()
            .map(|pen| sure_constants(config.n, pen.resolve(config.n)))
            .collect::<Result<Vec<_>>>()?;
        let sigma_sq = sigma.distance_sums(|i, j| sigma.get(i, j) * sigma.get(i, j));
        Ok(Self { grid: config.tau_grid(), config: config.clone(), sigma, sampler, consts, sigma_sq })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn sampler(&self) -> &NormalSampler {
        &self.sampler
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn replication_seed(&self, rep_index: usize) -> u64 {
        derive_seed(self.config.base_seed, rep_index as u64)
    }

    /// Sample covariance Σ̃ of replication `rep_index`.
    pub fn sample_cov(&self, rep_index: usize) -> Result<SymMatrix> {
        let data = self.sampler.sample(self.config.n, self.replication_seed(rep_index))?;
        mle_cov(&data)
    }

    pub fn run_replication(&self, rep_index: usize) -> Result<ReplicationRecord> {
        let st = self.sample_cov(rep_index)?;
        let inputs = SureInputs::new(&st);
        let scheme = &self.config.scheme;
        let mut selections = Vec::with_capacity(self.consts.len());
        let mut profiles = Vec::new();
        for (pen, consts) in self.config.penalties.iter().zip(&self.consts) {
            let profile = inputs.profile(consts, scheme, &self.grid)?;
            let estimate = taper(&st, scheme, profile.selected_tau)?;
            let loss = frob_sq_dist(&estimate.matrix, &self.sigma)?;
            selections.push(Selection { penalty: *pen, c: consts.c, tau_hat: profile.selected_tau, loss });
            if self.config.keep_profiles {
                profiles.push(profile);
            }
        }
        Ok(ReplicationRecord {
            rep_index,
            seed: self.replication_seed(rep_index),
            selections,
            loss_curve: self.loss_curve(&st),
            profiles,
        })
    }

    /// `‖ω^(τ) ∘ Σ̃ - Σ‖_F²` over the grid from per-distance sums.
    fn loss_curve(&self, st: &SymMatrix) -> Vec<f64> {
        let sigma = &self.sigma;
        let est_sq = st.distance_sums(|i, j| st.get(i, j) * st.get(i, j));
        let cross = st.distance_sums(|i, j| st.get(i, j) * sigma.get(i, j));
        let truth = &self.sigma_sq;
        Sweep::new(truth.len(), |w, d| w * w * est_sq[d] - 2.0 * w * cross[d] + truth[d])
            .profile(&self.config.scheme, &self.grid)
    }

    pub fn run_records(&self) -> Result<Vec<ReplicationRecord>> {
        map_replications(self.config.replications, |rep| self.run_replication(rep))
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        let records = self.run_records()?;
        self.summarize(&records)
    }

    pub fn oracle_profile(&self) -> Result<RiskProfile> {
        risk_profile(&self.sigma, self.config.n, &self.config.scheme, 2.0, &self.grid)
    }

    pub fn summarize(&self, records: &[ReplicationRecord]) -> Result<ExperimentReport> {
        let methods = self
            .config
            .penalties
            .iter()
            .enumerate()
            .map(|(k, pen)| {
                let losses: Vec<f64> = records.iter().map(|r| r.selections[k].loss).collect();
                let taus: Vec<f64> = records.iter().map(|r| r.selections[k].tau_hat as f64).collect();
                let mut histogram = BTreeMap::new();
                for r in records {
                    *histogram.entry(r.selections[k].tau_hat).or_insert(0) += 1;
                }
                MethodSummary {
                    label: pen.label(),
                    penalty: *pen,
                    c: self.consts[k].c,
                    loss: Summary::of(&losses),
                    selected_tau: Summary::of(&taus),
                    histogram,
                }
            })
            .collect();

        let per_tau: Vec<Summary> = (0..self.grid.len())
            .map(|g| Summary::of(&records.iter().map(|r| r.loss_curve[g]).collect::<Vec<_>>()))
            .collect();
        let best = (0..per_tau.len())
            .min_by(|&a, &b| per_tau[a].mean.total_cmp(&per_tau[b].mean))
            .expect("grid is non-empty");
        let risk = self.oracle_profile()?;

        Ok(ExperimentReport {
            config: self.config.clone(),
            p: self.config.p(),
            replications: records.len(),
            sampler_jittered: self.sampler.jittered(),
            methods,
            oracle: OracleSummary { tau: risk.oracle_tau, risk: risk.min_value() },
            best_fixed_tau: FixedTauSummary { tau: self.grid[best], loss: per_tau[best] },
        })
    }
}

/// One replication of `config`, deterministic in `(config, rep_index)`.
pub fn run_replication(config: &ExperimentConfig, rep_index: usize) -> Result<ReplicationRecord> {
    Experiment::prepare(config)?.run_replication(rep_index)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::prepare(config)?.run()
}

/// Evaluates `f` for every replication index, possibly in parallel, and
/// returns the results in index order. The first failing index wins.
pub(crate) fn map_replications<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    let results: Vec<Result<T>> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(&f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<T>> = (0..count).map(&f).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(rep, r)| r.map_err(|e| with_context(e, rep)))
        .collect()
}

fn with_context(err: Error, rep: usize) -> Error {
    match err {
        Error::Parameter(m) => Error::Parameter(format!("replication {rep}: {m}")),
        Error::Infeasible(m) => Error::Infeasible(format!("replication {rep}: {m}")),
        other => other,
    }
}

/// Runs `f` on a pool with `threads` workers (0 = one per core).
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}
