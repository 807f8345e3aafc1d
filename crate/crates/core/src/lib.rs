//! Stein-unbiased-risk (SURE) information criteria for banded and tapered
//! covariance matrix estimators.
//!
//! * [`model`]: true covariance models and Gaussian sampling.
//! * [`estimate`]: sample covariance, tapering weights and the tapered
//!   estimator.
//! * [`criterion`]: SURE_c profiles and τ selection from data.
//! * [`theory`]: exact risk `R_c(τ)`, the variance approximation `Var_n(τ)`
//!   and Gaussian moment oracles.
//! * [`sim`]: the Monte Carlo harness and preset experiments.

pub mod criterion;
pub mod error;
pub mod estimate;
pub mod matrix;
pub mod model;
pub mod sim;
pub mod stats;
mod sweep;
pub mod theory;

pub use criterion::{select_tau, sure_constants, sure_eq2_reference, sure_profile, CriterionProfile, SureConstants};
pub use error::{Error, Result};
pub use estimate::{frob_sq_dist, mle_cov, taper, unbiased_cov, weight, TaperedEstimate, WeightScheme};
pub use matrix::SymMatrix;
pub use model::{build_sigma, model_bandwidth, sample_dataset, CovModel, Dataset, ModelKind, NormalSampler};
pub use sim::{run_experiment, run_replication, ExperimentConfig, ExperimentReport, Penalty};
pub use theory::{coeffs, oracle_tau, risk_profile, var_n, CoeffSet, RiskProfile, VarApprox, VarMethod};
