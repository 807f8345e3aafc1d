use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use surecov::criterion::tau_grid;
use surecov::sim::presets::{self, Table1Variant};
use surecov::sim::{clt_experiment, with_threads, CltConfig, ExperimentConfig, ExperimentReport};
use surecov::theory::{var_n, EXACT_VAR_MAX_P};
use surecov::{
    mle_cov, risk_profile, run_experiment, sample_dataset, select_tau, sure_constants, sure_profile, taper,
    CovModel, Penalty, VarMethod, WeightScheme,
};

use crate::args::*;
use crate::config::FileConfig;
use crate::data::{self, fmt_f64};
use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "SURECOV_THREADS";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(a) => select(a),
        Command::Simulate(a) => simulate(a),
        Command::Risk(a) => risk(a),
        Command::Clt(a) => clt(a),
        Command::Table1(a) => table1(a),
        Command::Table2(a) => table2(a),
        Command::Sample(a) => sample(a),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    /// Requested worker count, 0 = one per core.
    threads: usize,
    wall_time_seconds: f64,
    result: T,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
}

struct Output {
    format: Format,
    path: Option<PathBuf>,
}

impl Output {
    fn resolve(args: OutputArgs, cfg: &mut FileConfig) -> Result<Self> {
        Ok(Self {
            format: cfg.merge(args.format, "format")?.unwrap_or_default(),
            path: cfg.merge(args.output, "output")?,
        })
    }

    fn write(&self, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        match &self.path {
            Some(path) => write_file(path, body),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                body(&mut lock)?;
                lock.flush().map_err(|e| CliError::io("cannot write to stdout", e))
            }
        }
    }

    fn json<T: Serialize>(&self, command: &str, threads: usize, started: Instant, result: T) -> Result<()> {
        let envelope = Envelope {
            command,
            version: env!("CARGO_PKG_VERSION"),
            threads,
            wall_time_seconds: started.elapsed().as_secs_f64(),
            result,
        };
        self.write(|w| {
            serde_json::to_writer_pretty(&mut *w, &envelope).map_err(|e| CliError::io("cannot write JSON", e.into()))?;
            writeln!(w).map_err(|e| CliError::io("cannot write JSON", e))
        })
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::io("write failed", e)
}

fn resolve_threads(flag: Option<usize>, cfg: &mut FileConfig) -> Result<usize> {
    if let Some(t) = cfg.merge(flag, "threads")? {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        _ => Ok(0),
    }
}

/// Model flags merged with the config file.
#[derive(Debug, Default)]
struct ModelSpec {
    family: Option<Family>,
    p: Option<usize>,
    rho: Option<f64>,
    alpha: Option<f64>,
    k0: Option<usize>,
    offdiag: Option<f64>,
    unit_diagonal: bool,
}

impl ModelSpec {
    fn resolve(args: ModelArgs, cfg: &mut FileConfig) -> Result<Self> {
        Ok(Self {
            family: cfg.merge(args.model, "model")?,
            p: cfg.merge(args.p, "p")?,
            rho: cfg.merge(args.rho, "rho")?,
            alpha: cfg.merge(args.alpha, "alpha")?,
            k0: cfg.merge(args.k0, "k0")?,
            offdiag: cfg.merge(args.offdiag, "offdiag")?,
            unit_diagonal: cfg.merge_bool(args.unit_diagonal, "unit-diagonal")?,
        })
    }

    fn is_empty(&self) -> bool {
        self.family.is_none()
            && self.rho.is_none()
            && self.alpha.is_none()
            && self.k0.is_none()
            && self.offdiag.is_none()
            && !self.unit_diagonal
    }

    fn build(&self) -> Result<CovModel> {
        let family = self
            .family
            .ok_or_else(|| CliError::Usage("--model is required (poly, ar, banded or identity)".into()))?;
        let p = self.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
        let reject = |name: &str, given: bool| {
            if given {
                Err(CliError::Usage(format!("--{name} does not apply to this model")))
            } else {
                Ok(())
            }
        };
        let banded_only = self.k0.is_some() || self.offdiag.is_some() || self.unit_diagonal;
        let model = match family {
            Family::Poly => {
                reject("k0/--offdiag/--unit-diagonal", banded_only)?;
                CovModel::poly_decay(p, self.rho.unwrap_or(0.6), self.alpha.unwrap_or(0.5))?
            }
            Family::Ar => {
                reject("alpha", self.alpha.is_some())?;
                reject("k0/--offdiag/--unit-diagonal", banded_only)?;
                CovModel::ar_decay(p, self.rho.unwrap_or(0.5))?
            }
            Family::Banded => {
                reject("rho/--alpha", self.rho.is_some() || self.alpha.is_some())?;
                CovModel::banded_uniform(p, self.k0.unwrap_or(5), self.offdiag.unwrap_or(0.25))?
                    .with_unit_diagonal(self.unit_diagonal)
            }
            Family::Identity => {
                reject("rho/--alpha/--k0/--offdiag/--unit-diagonal", banded_only || self.rho.is_some() || self.alpha.is_some())?;
                CovModel::identity(p)?
            }
        };
        Ok(model)
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

#[derive(Serialize)]
struct SelectResult<'a> {
    input: String,
    n: usize,
    p: usize,
    scheme: &'a str,
    penalty: Penalty,
    c: f64,
    tau_max: Option<usize>,
    tau_hat: usize,
    sure_min: f64,
    profile: &'a surecov::CriterionProfile,
}

fn select(a: SelectArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let input = require(cfg.merge(a.input, "input")?, "input")?;
    let scheme = cfg.merge(a.scheme, "scheme")?.map_or(WeightScheme::Banding, |s| s.0);
    let penalty = cfg.merge(a.c, "c")?.unwrap_or(Penalty::AIC);
    let tau_max = cfg.merge(a.tau_max, "tau-max")?;
    let profile_path: Option<PathBuf> = cfg.merge(a.profile, "profile")?;
    let estimate_path: Option<PathBuf> = cfg.merge(a.estimate, "estimate")?;
    let estimate_format = cfg.merge(a.estimate_format, "estimate-format")?.unwrap_or_default();
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let source = input.display().to_string();
    let file = File::open(&input).map_err(|e| CliError::io(format!("cannot open {source}"), e))?;
    let dataset = data::read_dataset(std::io::BufReader::new(file), &source)?;
    let (n, p) = (dataset.n(), dataset.p());
    let c = penalty.resolve(n);
    let consts = sure_constants(n, c)?;
    let st = mle_cov(&dataset)?;
    let profile = sure_profile(&st, &consts, &scheme, &tau_grid(n, p, tau_max))?;
    let tau_hat = select_tau(&profile);
    let sure_min = profile.value_at(tau_hat).expect("selected tau is on the grid");

    if let Some(path) = &profile_path {
        write_file(path, |w| write_profile(w, &profile))?;
    }
    if let Some(path) = &estimate_path {
        let est = taper(&st, &scheme, tau_hat)?;
        write_file(path, |w| match estimate_format {
            EstimateFormat::Band => data::write_band(w, &est.matrix, tau_hat),
            EstimateFormat::Dense => data::write_dense(w, &est.matrix),
        })?;
    }
    eprintln!("tau_hat={tau_hat}");
    match out.format {
        Format::Csv => out.write(|w| write_profile(w, &profile)),
        Format::Json => out.json(
            "select",
            0,
            started,
            SelectResult {
                input: source,
                n,
                p,
                scheme: scheme.name(),
                penalty,
                c,
                tau_max,
                tau_hat,
                sure_min,
                profile: &profile,
            },
        ),
    }
}

fn write_profile(w: &mut dyn Write, profile: &surecov::CriterionProfile) -> Result<()> {
    writeln!(w, "tau,sure_value").map_err(io_err)?;
    for (tau, v) in profile.tau_grid.iter().zip(&profile.values) {
        writeln!(w, "{tau},{}", fmt_f64(*v)).map_err(io_err)?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let preset = cfg.merge(a.preset, "preset")?.unwrap_or(Preset::Custom);
    let variant: Option<Table1Variant> = cfg.merge(a.variant, "variant")?;
    let fast = cfg.merge_bool(a.fast, "fast")?;
    let model = ModelSpec::resolve(a.model, &mut cfg)?;
    let n = cfg.merge(a.n, "n")?;
    let scheme = cfg.merge(a.scheme, "scheme")?;
    let penalties = cfg.merge(a.c, "c")?;
    let tau_max = cfg.merge(a.tau_max, "tau-max")?;
    let histogram: Option<PathBuf> = cfg.merge(a.histogram, "histogram")?;
    let replications = cfg.merge(a.run.replications, "replications")?;
    let seed = cfg.merge(a.run.seed, "seed")?;
    let threads = resolve_threads(a.run.threads, &mut cfg)?;
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let mut config = match preset {
        Preset::Custom => {
            if variant.is_some() || fast {
                return Err(CliError::Usage("--variant and --fast only apply to the table presets".into()));
            }
            let mut c = ExperimentConfig::new(model.build()?, require(n, "n")?);
            if let Some(s) = scheme {
                c.scheme = s.0;
            }
            if let Some(List(list)) = penalties {
                c.penalties = list;
            }
            c.tau_max = tau_max;
            c
        }
        Preset::Table1 | Preset::Table2 => {
            if !model.is_empty() || n.is_some() || scheme.is_some() || penalties.is_some() || tau_max.is_some() {
                return Err(CliError::Usage(
                    "model, n, scheme, c and tau-max are fixed by the table presets (only p may be set for table2)".into(),
                ));
            }
            if preset == Preset::Table1 {
                if model.p.is_some() {
                    return Err(CliError::Usage("--p is fixed by the table1 preset".into()));
                }
                let variant = variant.ok_or_else(|| {
                    CliError::Usage("simulate table1 needs --variant (model1-a05, model1-a01, model2-r095 or model2-r05)".into())
                })?;
                presets::table1(variant, fast)
            } else {
                if variant.is_some() {
                    return Err(CliError::Usage("--variant only applies to table1".into()));
                }
                presets::table2(model.p.unwrap_or(presets::TABLE_P), fast)?
            }
        }
    };
    if let Some(r) = replications {
        config.replications = r;
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    config.validate()?;

    let report = with_threads(threads, || run_experiment(&config))??;
    if let Some(path) = &histogram {
        write_file(path, |w| write_histograms(w, &report))?;
    }
    match out.format {
        Format::Json => out.json("simulate", threads, started, &report),
        Format::Csv => out.write(|w| write_method_rows(w, &report, None)),
    }
}

fn write_histograms(w: &mut dyn Write, report: &ExperimentReport) -> Result<()> {
    writeln!(w, "method,tau,count").map_err(io_err)?;
    for m in &report.methods {
        for (tau, count) in &m.histogram {
            writeln!(w, "{},{tau},{count}", m.label).map_err(io_err)?;
        }
    }
    Ok(())
}

const METHOD_HEADER: &str =
    "method,c,mean_loss,loss_se,mean_tau,tau_sd,oracle_tau,oracle_risk,best_fixed_tau,best_fixed_loss";

fn write_method_rows(w: &mut dyn Write, report: &ExperimentReport, prefix: Option<&str>) -> Result<()> {
    match prefix {
        Some(_) => writeln!(w, "variant,{METHOD_HEADER}"),
        None => writeln!(w, "{METHOD_HEADER}"),
    }
    .map_err(io_err)?;
    append_method_rows(w, report, prefix)
}

fn append_method_rows(w: &mut dyn Write, report: &ExperimentReport, prefix: Option<&str>) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for m in &report.methods {
        if let Some(pfx) = prefix {
            write!(w, "{pfx},").map_err(io_err)?;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            m.label,
            fmt_f64(m.c),
            fmt_f64(m.loss.mean),
            opt(m.loss.se),
            fmt_f64(m.selected_tau.mean),
            opt(m.selected_tau.sd),
            report.oracle.tau,
            fmt_f64(report.oracle.risk),
            report.best_fixed_tau.tau,
            fmt_f64(report.best_fixed_tau.loss.mean),
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RiskResult {
    model: CovModel,
    n: usize,
    scheme: &'static str,
    penalty: Penalty,
    c: f64,
    tau_grid: Vec<usize>,
    risk: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    var_n: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    var_method: Option<VarMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_band: Option<usize>,
    oracle_tau: usize,
    oracle_risk: f64,
}

/// Picks the Var_n method, rejecting requests that cannot be evaluated.
fn var_method_for(
    requested: Option<VarMethodArg>,
    band: Option<usize>,
    model: &CovModel,
) -> Result<(VarMethod, Option<usize>)> {
    let p = model.p;
    match requested {
        Some(VarMethodArg::Exact) if p > EXACT_VAR_MAX_P => Err(CliError::Usage(format!(
            "exact Var_n needs p <= {EXACT_VAR_MAX_P} (got p = {p}); use --var-method banded with --band"
        ))),
        Some(VarMethodArg::Exact) => Ok((VarMethod::Exact, None)),
        None if p <= EXACT_VAR_MAX_P => Ok((VarMethod::Exact, None)),
        _ => {
            let band = band.or_else(|| model.bandwidth()).ok_or_else(|| {
                CliError::Usage(format!(
                    "Var_n at p = {p} needs the banded-truncated method, and this model has no exact bandwidth; pass --band"
                ))
            })?;
            Ok((VarMethod::BandedTruncated, Some(band)))
        }
    }
}

fn risk(a: RiskArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let model = ModelSpec::resolve(a.model, &mut cfg)?.build()?;
    let n = require(cfg.merge(a.n, "n")?, "n")?;
    let scheme = cfg.merge(a.scheme, "scheme")?.map_or(WeightScheme::Banding, |s| s.0);
    let penalty = cfg.merge(a.c, "c")?.unwrap_or(Penalty::AIC);
    let tau_max = cfg.merge(a.tau_max, "tau-max")?;
    let with_var = cfg.merge_bool(a.var_n, "var-n")?;
    let var_method = cfg.merge(a.var_method, "var-method")?;
    let band = cfg.merge(a.band, "band")?;
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let c = penalty.resolve(n);
    let sigma = model.sigma()?;
    let grid = tau_grid(n, model.p, tau_max);
    let profile = risk_profile(&sigma, n, &scheme, c, &grid)?;
    let (var, method, band) = if with_var {
        let (method, band) = var_method_for(var_method, band, &model)?;
        let values = grid
            .iter()
            .map(|&t| var_n(&sigma, n, &scheme, t, c, method, band).map(|v| v.value))
            .collect::<surecov::Result<Vec<_>>>()?;
        (Some(values), Some(method), band)
    } else {
        (None, None, None)
    };
    eprintln!("oracle_tau={}", profile.oracle_tau);
    match out.format {
        Format::Csv => out.write(|w| {
            match &var {
                Some(_) => writeln!(w, "tau,risk,var_n"),
                None => writeln!(w, "tau,risk"),
            }
            .map_err(io_err)?;
            for (k, tau) in grid.iter().enumerate() {
                match &var {
                    Some(v) => writeln!(w, "{tau},{},{}", fmt_f64(profile.values[k]), fmt_f64(v[k])),
                    None => writeln!(w, "{tau},{}", fmt_f64(profile.values[k])),
                }
                .map_err(io_err)?;
            }
            Ok(())
        }),
        Format::Json => out.json(
            "risk",
            0,
            started,
            RiskResult {
                oracle_risk: profile.min_value(),
                oracle_tau: profile.oracle_tau,
                model,
                n,
                scheme: scheme.name(),
                penalty,
                c,
                tau_grid: grid,
                risk: profile.values,
                var_n: var,
                var_method: method,
                truncation_band: band,
            },
        ),
    }
}

fn clt(a: CltArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let model = ModelSpec::resolve(a.model, &mut cfg)?.build()?;
    let n = require(cfg.merge(a.n, "n")?, "n")?;
    let tau = require(cfg.merge(a.tau, "tau")?, "tau")?;
    let scheme = cfg.merge(a.scheme, "scheme")?.map_or(WeightScheme::Banding, |s| s.0);
    let penalty = cfg.merge(a.c, "c")?.unwrap_or(Penalty::AIC);
    let var_method = cfg.merge(a.var_method, "var-method")?;
    let band = cfg.merge(a.band, "band")?;
    let replications = cfg.merge(a.run.replications, "replications")?;
    let seed = cfg.merge(a.run.seed, "seed")?;
    let threads = resolve_threads(a.run.threads, &mut cfg)?;
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let (method, band) = var_method_for(var_method, band, &model)?;
    let mut experiment = ExperimentConfig::new(model, n);
    experiment.scheme = scheme;
    experiment.penalties = vec![penalty];
    experiment.replications = replications.unwrap_or(1000);
    experiment.base_seed = seed.unwrap_or(1);
    let config = CltConfig { experiment, tau, penalty, var_method: method, truncation_band: band };
    let report = with_threads(threads, || clt_experiment(&config))??;
    eprintln!(
        "mean={} variance={} ks={}",
        fmt_f64(report.standardized.mean),
        fmt_f64(report.sample_variance),
        fmt_f64(report.ks_statistic)
    );
    match out.format {
        Format::Json => out.json("clt", threads, started, &report),
        Format::Csv => out.write(|w| {
            writeln!(w, "rep,statistic").map_err(io_err)?;
            for (k, s) in report.statistics.iter().enumerate() {
                writeln!(w, "{k},{}", fmt_f64(*s)).map_err(io_err)?;
            }
            Ok(())
        }),
    }
}

#[derive(Serialize)]
struct TableRow<'a> {
    variant: String,
    report: &'a ExperimentReport,
}

fn table1(a: Table1Args) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let variant: Option<Table1Variant> = cfg.merge(a.variant, "variant")?;
    let fast = cfg.merge_bool(a.fast, "fast")?;
    let replications = cfg.merge(a.run.replications, "replications")?;
    let seed = cfg.merge(a.run.seed, "seed")?;
    let threads = resolve_threads(a.run.threads, &mut cfg)?;
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let variants = variant.map_or_else(|| Table1Variant::ALL.to_vec(), |v| vec![v]);
    let configs: Vec<(String, ExperimentConfig)> = variants
        .into_iter()
        .map(|v| {
            let mut c = presets::table1(v, fast);
            c.replications = replications.unwrap_or(c.replications);
            c.base_seed = seed.unwrap_or(c.base_seed);
            (v.to_string(), c)
        })
        .collect();
    run_table("table1", configs, threads, started, &out)
}

fn table2(a: Table2Args) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(a.out.config.as_deref())?;
    let dims = cfg.merge(a.p, "p")?.map_or_else(|| vec![500, 1000], |l| l.0);
    let fast = cfg.merge_bool(a.fast, "fast")?;
    let replications = cfg.merge(a.run.replications, "replications")?;
    let seed = cfg.merge(a.run.seed, "seed")?;
    let threads = resolve_threads(a.run.threads, &mut cfg)?;
    let out = Output::resolve(a.out, &mut cfg)?;
    cfg.finish()?;

    let configs = dims
        .into_iter()
        .map(|p| {
            let mut c = presets::table2(p, fast)?;
            c.replications = replications.unwrap_or(c.replications);
            c.base_seed = seed.unwrap_or(c.base_seed);
            Ok((format!("p={}", c.p()), c))
        })
        .collect::<Result<Vec<_>>>()?;
    run_table("table2", configs, threads, started, &out)
}

fn run_table(
    command: &str,
    configs: Vec<(String, ExperimentConfig)>,
    threads: usize,
    started: Instant,
    out: &Output,
) -> Result<()> {
    for (_, c) in &configs {
        c.validate()?;
    }
    let reports = configs
        .iter()
        .map(|(label, c)| {
            eprintln!("{command}: running {label}");
            with_threads(threads, || run_experiment(c))?.map_err(CliError::from)
        })
        .collect::<Result<Vec<_>>>()?;
    match out.format {
        Format::Json => {
            let rows: Vec<TableRow> = configs
                .iter()
                .zip(&reports)
                .map(|((label, _), report)| TableRow { variant: label.clone(), report })
                .collect();
            out.json(command, threads, started, rows)
        }
        Format::Csv => out.write(|w| {
            writeln!(w, "variant,{METHOD_HEADER}").map_err(io_err)?;
            for ((label, _), report) in configs.iter().zip(&reports) {
                append_method_rows(w, report, Some(label))?;
            }
            Ok(())
        }),
    }
}

fn sample(a: SampleArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    let model = ModelSpec::resolve(a.model, &mut cfg)?.build()?;
    let n = require(cfg.merge(a.n, "n")?, "n")?;
    let seed = cfg.merge(a.seed, "seed")?.unwrap_or(1);
    let output: Option<PathBuf> = cfg.merge(a.output, "output")?;
    cfg.finish()?;

    let dataset = sample_dataset(&model.sigma()?, n, seed)?;
    let out = Output { format: Format::Csv, path: output };
    out.write(|w| data::write_dataset(w, &dataset))
}
