use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use surecov::sim::presets::Table1Variant;
use surecov::{Penalty, WeightScheme};

#[derive(Debug, Parser)]
#[command(name = "surecov", version, about = "SURE tuning of banded and tapered covariance estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pick the tapering parameter for a data file by minimizing SURE_c.
    Select(SelectArgs),
    /// Run a Monte Carlo experiment (a table preset or a custom model).
    Simulate(SimulateArgs),
    /// Exact risk profile of a model, optionally with the SURE variance.
    Risk(RiskArgs),
    /// Standardize SURE_c(tau) across replications and compare with N(0, 1).
    Clt(CltArgs),
    /// Risk-optimality table over the four decay models.
    Table1(Table1Args),
    /// Bandwidth-recovery table for the banded model.
    Table2(Table2Args),
    /// Draw a Gaussian sample from a model and write it as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Poly,
    Ar,
    Banded,
    Identity,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "poly" | "poly-decay" | "model1" => Ok(Self::Poly),
            "ar" | "ar-decay" | "model2" => Ok(Self::Ar),
            "banded" | "banded-uniform" | "model3" => Ok(Self::Banded),
            "identity" => Ok(Self::Identity),
            _ => Err(format!("unknown model {s:?} (expected poly, ar, banded or identity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheme(pub WeightScheme);

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "banding" | "band" => Ok(Self(WeightScheme::Banding)),
            "czz" | "taper" | "tapering" => Ok(Self(WeightScheme::CzzTaper)),
            _ => Err(format!("unknown scheme {s:?} (expected banding or czz)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown format {s:?} (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimateFormat {
    #[default]
    Band,
    Dense,
}

impl FromStr for EstimateFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "band" => Ok(Self::Band),
            "dense" => Ok(Self::Dense),
            _ => Err(format!("unknown estimate format {s:?} (expected band or dense)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarMethodArg {
    Exact,
    Banded,
}

impl FromStr for VarMethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "banded" | "banded-truncated" => Ok(Self::Banded),
            _ => Err(format!("unknown Var_n method {s:?} (expected exact or banded)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Custom,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Self::Table1),
            "table2" => Ok(Self::Table2),
            "custom" => Ok(Self::Custom),
            _ => Err(format!("unknown preset {s:?} (expected table1, table2 or custom)")),
        }
    }
}

/// Comma-separated list, e.g. `--c 2,logn` or `--p 500,1000`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let items = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(Self(items))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Covariance model: poly (rho |i-j|^-(alpha+1)), ar (rho^|i-j|),
    /// banded (diagonal 1 + offdiag, offdiag within k0 - 1) or identity.
    #[arg(long)]
    pub model: Option<Family>,
    /// Dimension.
    #[arg(long)]
    pub p: Option<usize>,
    /// Decay scale [poly: 0.6, ar: 0.5].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Polynomial decay exponent [0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bandwidth of the banded model [5].
    #[arg(long)]
    pub k0: Option<usize>,
    /// Off-diagonal value of the banded model [0.25].
    #[arg(long)]
    pub offdiag: Option<f64>,
    /// Force a unit diagonal on the banded model.
    #[arg(long)]
    pub unit_diagonal: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub replications: Option<usize>,
    /// Base seed; replication seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = one per core. Falls back to SURECOV_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// json (default) or csv.
    #[arg(long)]
    pub format: Option<Format>,
    /// Write the main output here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Flat `key = value` file; keys are flag names, flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// CSV with one observation per row (optional header row).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// banding (default) or czz.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Penalty multiplier: a number >= 2 or logn [2].
    #[arg(long)]
    pub c: Option<Penalty>,
    /// Largest tau to consider [min(n, p)].
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Write the SURE profile as `tau,sure_value`.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Write the tuned estimate.
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// band (`i,j,value` triplets, default) or dense.
    #[arg(long)]
    pub estimate_format: Option<EstimateFormat>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// table1, table2 or custom [custom].
    pub preset: Option<Preset>,
    /// Table 1 row: model1-a05, model1-a01, model2-r095 or model2-r05.
    #[arg(long)]
    pub variant: Option<Table1Variant>,
    /// Reduced preset (p = 100, 30 replications).
    #[arg(long)]
    pub fast: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Penalties to compare, comma-separated [2].
    #[arg(long)]
    pub c: Option<List<Penalty>>,
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Also write selected-tau histograms as `method,tau,count`.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub c: Option<Penalty>,
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Add the approximate SURE variance column.
    #[arg(long)]
    pub var_n: bool,
    /// exact (p <= 64) or banded [exact when p <= 64].
    #[arg(long)]
    pub var_method: Option<VarMethodArg>,
    /// Truncation band for the banded method [model bandwidth].
    #[arg(long)]
    pub band: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CltArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub c: Option<Penalty>,
    #[arg(long)]
    pub var_method: Option<VarMethodArg>,
    #[arg(long)]
    pub band: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// Restrict to one row.
    #[arg(long)]
    pub variant: Option<Table1Variant>,
    #[arg(long)]
    pub fast: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Table2Args {
    /// Dimensions, comma-separated [500,1000].
    #[arg(long)]
    pub p: Option<List<usize>>,
    #[arg(long)]
    pub fast: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
