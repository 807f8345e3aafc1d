//! Preset configurations for the two simulation tables.
//!
//! The full presets use n = 250, p = 500 (or 1000), 100 replications and
//! banding; the `fast` variants shrink p to 100 and run 30 replications.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{ExperimentConfig, ExperimentKind, Penalty};
use crate::error::{Error, Result};
use crate::model::CovModel;

pub const TABLE_N: usize = 250;
pub const TABLE_P: usize = 500;
pub const TABLE_REPLICATIONS: usize = 100;
pub const FAST_P: usize = 100;
pub const FAST_REPLICATIONS: usize = 30;
pub const PRESET_SEED: u64 = 20_151_029;

/// Rows of the risk-optimality table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table1Variant {
    /// Polynomial decay, ρ = 0.6, α = 0.5.
    Model1A05,
    /// Polynomial decay, ρ = 0.6, α = 0.1.
    Model1A01,
    /// AR decay, ρ = 0.95.
    Model2R095,
    /// AR decay, ρ = 0.5.
    Model2R05,
}

impl Table1Variant {
    pub const ALL: [Table1Variant; 4] = [Self::Model1A05, Self::Model1A01, Self::Model2R095, Self::Model2R05];

    pub fn name(self) -> &'static str {
        match self {
            Self::Model1A05 => "model1-a05",
            Self::Model1A01 => "model1-a01",
            Self::Model2R095 => "model2-r095",
            Self::Model2R05 => "model2-r05",
        }
    }

    pub fn model(self, p: usize) -> Result<CovModel> {
        match self {
            Self::Model1A05 => CovModel::poly_decay(p, 0.6, 0.5),
            Self::Model1A01 => CovModel::poly_decay(p, 0.6, 0.1),
            Self::Model2R095 => CovModel::ar_decay(p, 0.95),
            Self::Model2R05 => CovModel::ar_decay(p, 0.5),
        }
    }
}

impl fmt::Display for Table1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Table1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!("unknown table1 variant {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// SURE_2-tuned banding on a decay model.
pub fn table1(variant: Table1Variant, fast: bool) -> ExperimentConfig {
    let (p, reps) = if fast { (FAST_P, FAST_REPLICATIONS) } else { (TABLE_P, TABLE_REPLICATIONS) };
    let mut cfg = ExperimentConfig::new(variant.model(p).expect("preset parameters are valid"), TABLE_N);
    cfg.replications = reps;
    cfg.base_seed = PRESET_SEED;
    cfg.kind = ExperimentKind::Table;
    cfg
}

/// SURE_logn (and SURE_2 for comparison) on the banded model with k0 = 5.
pub fn table2(p: usize, fast: bool) -> Result<ExperimentConfig> {
    let (p, reps) = if fast { (FAST_P, FAST_REPLICATIONS) } else { (p, TABLE_REPLICATIONS) };
    let mut cfg = ExperimentConfig::new(CovModel::banded_uniform(p, 5, 0.25)?, TABLE_N);
    cfg.penalties = vec![Penalty::LogN, Penalty::AIC];
    cfg.replications = reps;
    cfg.base_seed = PRESET_SEED;
    cfg.kind = ExperimentKind::Table;
    Ok(cfg)
}
