//! Command-line surface for truncated-beta percentile control charts:
//! fitting, limit construction, Phase-II monitoring, run-length studies, and
//! access to the embedded example datasets.

mod ingest;

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tbeta_chart::chart::{
    build_limits, monitor_stream, BootMode, CenterMode, ChartConfig, ControlLimits,
    MonitorOutcome,
};
use tbeta_chart::data;
use tbeta_chart::estimate::{fit_mle, ks_pvalue, ks_statistic};
use tbeta_chart::dist::TbetaParams;
use tbeta_chart::runlength::{grid_to_csv, shift_grid, ShiftSpec};

use ingest::{parse_shift, parse_support, DatasetSpec};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// An error carrying its process exit code.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

/// Maps library failures onto the exit-code contract: bad configuration is
/// 1, bad data is 2, numerical breakdown is 3.
fn from_core(e: tbeta_chart::Error) -> CliError {
    use tbeta_chart::Error::*;
    let code = match &e {
        InvalidParameter(_) => EXIT_CONFIG,
        Domain(_) => EXIT_DATA,
        DegenerateSupport { .. } | DegenerateData(_) | Convergence(_) => EXIT_NUMERICAL,
    };
    CliError::new(code, e.to_string())
}

fn io_err(e: std::io::Error, what: &str) -> CliError {
    CliError::new(EXIT_DATA, format!("{what}: {e}"))
}

#[derive(Parser)]
#[command(name = "tbeta-chart", version, about = "Percentile control charts for truncated-beta proportion data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the truncated-beta model and report goodness of fit
    Fit(FitArgs),
    /// Build studentized-bootstrap control limits from Phase-I data
    Limits(LimitsArgs),
    /// Test Phase-II subgroups against existing control limits
    Monitor(MonitorArgs),
    /// Monte Carlo run-length study over a grid of parameter shifts
    Arl(ArlArgs),
    /// List or dump the embedded example datasets
    Datasets(DatasetsArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Embedded dataset name (rh-may-2007, rh-may-2008) or observation CSV path
    #[arg(long)]
    data: String,
    /// Truncation support as `a,b`
    #[arg(long, value_parser = parse_support, default_value = "0,1")]
    support: (f64, f64),
    /// Observations per subgroup
    #[arg(long, default_value_t = 10)]
    subgroup_size: usize,
    /// Drop the first observation before partitioning
    /// (default: true for embedded datasets, false for files)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    drop_first: Option<bool>,
}

impl DataArgs {
    fn spec(&self) -> DatasetSpec {
        DatasetSpec {
            source: self.data.clone(),
            subgroup_size: self.subgroup_size,
            drop_first: self.drop_first,
            support: self.support,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Percentiles to report (repeatable)
    #[arg(long = "percentile", default_values_t = vec![0.9])]
    percentiles: Vec<f64>,
    /// Parametric-bootstrap replicates for the K-S p-value
    #[arg(long, default_value_t = 2000)]
    ks_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum BootModeArg {
    Parametric,
    PooledResample,
}

impl From<BootModeArg> for BootMode {
    fn from(m: BootModeArg) -> Self {
        match m {
            BootModeArg::Parametric => BootMode::Parametric,
            BootModeArg::PooledResample => BootMode::PooledResample,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum CenterModeArg {
    BootstrapMean,
    Phase1Estimate,
}

impl From<CenterModeArg> for CenterMode {
    fn from(m: CenterModeArg) -> Self {
        match m {
            CenterModeArg::BootstrapMean => CenterMode::BootstrapMean,
            CenterModeArg::Phase1Estimate => CenterMode::Phase1Estimate,
        }
    }
}

#[derive(Args)]
struct LimitsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Monitored percentile
    #[arg(long, default_value_t = 0.9)]
    percentile: f64,
    /// False alarm rate
    #[arg(long, default_value_t = 0.0027)]
    far: f64,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 5000)]
    boot_reps: usize,
    #[arg(long, value_enum, default_value_t = BootModeArg::Parametric)]
    boot_mode: BootModeArg,
    #[arg(long, value_enum, default_value_t = CenterModeArg::BootstrapMean)]
    center_mode: CenterModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit machine-readable JSON (pipe to a file to reuse with `monitor`)
    #[arg(long)]
    json: bool,
    /// Write a chart-frame CSV (index, statistic, lcl, cl, ucl) to this path
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Limits JSON file produced by `limits --json`
    #[arg(long, conflicts_with_all = ["lcl", "ucl"])]
    limits: Option<String>,
    /// Inline lower control limit (with --ucl, instead of --limits)
    #[arg(long, requires = "ucl")]
    lcl: Option<f64>,
    /// Inline center line
    #[arg(long)]
    cl: Option<f64>,
    /// Inline upper control limit (with --lcl, instead of --limits)
    #[arg(long, requires = "lcl")]
    ucl: Option<f64>,
    /// Monitored percentile
    #[arg(long, default_value_t = 0.9)]
    percentile: f64,
    #[arg(long)]
    json: bool,
    /// Write the verdict table as CSV to this path
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ArlArgs {
    /// In-control shape parameters as `theta1,theta2`
    #[arg(long, value_parser = parse_shift, default_value = "2,15")]
    theta: (f64, f64),
    /// Truncation support as `a,b`
    #[arg(long, value_parser = parse_support, default_value = "0,0.5")]
    support: (f64, f64),
    #[arg(long, default_value_t = 10)]
    subgroup_size: usize,
    /// Phase-I subgroup count per replication
    #[arg(long, default_value_t = 20)]
    phase1_subgroups: usize,
    /// Monitored percentile
    #[arg(long, default_value_t = 0.5)]
    percentile: f64,
    /// False alarm rate
    #[arg(long, default_value_t = 0.0027)]
    far: f64,
    /// Shift cell as relative fractions `d_theta1,d_theta2`, e.g. `0,-0.3`
    /// for a 30% drop in theta2 (repeatable; default in-control only)
    #[arg(long = "shift", value_parser = parse_shift, allow_hyphen_values = true)]
    shifts: Vec<(f64, f64)>,
    #[arg(long, value_enum, default_value_t = BootModeArg::Parametric)]
    boot_mode: BootModeArg,
    /// Bootstrap replicates per limit set (desk-scale default)
    #[arg(long, default_value_t = 1000)]
    boot_reps: usize,
    /// Monte Carlo replications per cell (desk-scale default)
    #[arg(long, default_value_t = 500)]
    replications: usize,
    /// Maximum subgroups per run before truncation
    #[arg(long, default_value_t = 20_000)]
    run_cap: usize,
    /// Full-scale preset: boot-reps 5000, replications 5000
    #[arg(long, conflicts_with_all = ["boot_reps", "replications", "desk_scale"])]
    full_scale: bool,
    /// Desk-scale preset: boot-reps 1000, replications 500 (the defaults)
    #[arg(long, conflicts_with_all = ["boot_reps", "replications"])]
    desk_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the run-length CSV to this path instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DatasetsArgs {
    /// Dump one embedded dataset as observation CSV
    #[arg(long)]
    dump: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Limits(args) => cmd_limits(args),
        Command::Monitor(args) => cmd_monitor(args),
        Command::Arl(args) => cmd_arl(args),
        Command::Datasets(args) => cmd_datasets(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[derive(Serialize)]
struct FitReport {
    dataset: String,
    support: (f64, f64),
    subgroups: usize,
    subgroup_size: usize,
    theta1: f64,
    theta2: f64,
    loglik: f64,
    converged: bool,
    percentiles: Vec<(f64, f64)>,
    ks_statistic: f64,
    ks_p_value: f64,
    ks_replicates: usize,
    ks_failed_replicates: usize,
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    for &p in &args.percentiles {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::new(
                EXIT_CONFIG,
                format!("percentile must lie in (0, 1), got {p}"),
            ));
        }
    }
    let spec = args.data.spec();
    let data = spec.load()?;
    let (a, b) = spec.support;
    let fit = fit_mle(&data, a, b, None).map_err(from_core)?;
    let percentiles: Vec<(f64, f64)> = args
        .percentiles
        .iter()
        .map(|&p| Ok((p, fit.params.quantile(p).map_err(from_core)?)))
        .collect::<Result<_, CliError>>()?;
    let pooled = data.pooled();
    let stat = ks_statistic(&pooled, &fit.params).map_err(from_core)?;
    let pv = ks_pvalue(stat, pooled.len(), &fit.params, args.ks_reps, args.seed)
        .map_err(from_core)?;

    let report = FitReport {
        dataset: spec.source.clone(),
        support: spec.support,
        subgroups: data.k(),
        subgroup_size: data.n(),
        theta1: fit.params.theta1(),
        theta2: fit.params.theta2(),
        loglik: fit.loglik,
        converged: fit.converged,
        percentiles,
        ks_statistic: stat,
        ks_p_value: pv.p_value,
        ks_replicates: pv.replicates,
        ks_failed_replicates: pv.failed_replicates,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!(
            "dataset: {} ({} subgroups of {}, support [{}, {}])",
            report.dataset, report.subgroups, report.subgroup_size, a, b
        );
        println!("theta1: {}", report.theta1);
        println!("theta2: {}", report.theta2);
        println!("log-likelihood: {}", report.loglik);
        for (p, xi) in &report.percentiles {
            println!("percentile {p}: {xi}");
        }
        println!("K-S statistic: {}", report.ks_statistic);
        println!(
            "K-S p-value: {} ({} replicates, {} failed)",
            report.ks_p_value, report.ks_replicates, report.ks_failed_replicates
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct LimitsReport {
    #[serde(flatten)]
    limits: ControlLimits,
    p: f64,
    far: f64,
    support: (f64, f64),
    boot_reps: usize,
    seed: u64,
    outside_support: bool,
}

fn cmd_limits(args: LimitsArgs) -> Result<(), CliError> {
    let spec = args.data.spec();
    let data = spec.load()?;
    let (a, b) = spec.support;
    let config = ChartConfig {
        p: args.percentile,
        far: args.far,
        boot_reps: args.boot_reps,
        boot_mode: args.boot_mode.into(),
        center_mode: args.center_mode.into(),
        seed: args.seed,
    };
    let limits = build_limits(&data, a, b, &config).map_err(from_core)?;

    if let Some(path) = &args.out {
        let mut csv = String::from("index,statistic,lcl,cl,ucl\n");
        for i in 1..=data.k() {
            let _ = writeln!(
                csv,
                "{i},,{:.17e},{:.17e},{:.17e}",
                limits.lcl, limits.cl, limits.ucl
            );
        }
        fs::write(path, csv).map_err(|e| io_err(e, path))?;
    }

    let report = LimitsReport {
        outside_support: limits.outside_support(a, b),
        limits,
        p: args.percentile,
        far: args.far,
        support: spec.support,
        boot_reps: args.boot_reps,
        seed: args.seed,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!("UCL: {}", report.limits.ucl);
        println!("CL: {}", report.limits.cl);
        println!("LCL: {}", report.limits.lcl);
        println!("bootstrap mean: {}", report.limits.boot_mean);
        println!("bootstrap SE: {}", report.limits.boot_se);
        println!(
            "t quantiles: [{}, {}]",
            report.limits.t_lower, report.limits.t_upper
        );
        println!("Phase-I percentile estimate: {}", report.limits.phase1_estimate);
        println!("replicate fit failures: {}", report.limits.replicate_failures);
        if report.outside_support {
            println!("note: a limit lies outside the support [{a}, {b}]");
        }
    }
    Ok(())
}

fn load_limits(args: &MonitorArgs) -> Result<ControlLimits, CliError> {
    if let Some(path) = &args.limits {
        let text = fs::read_to_string(path).map_err(|e| io_err(e, path))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_DATA, format!("{path}: {e}")));
    }
    match (args.lcl, args.ucl) {
        (Some(lcl), Some(ucl)) => {
            if !lcl.is_finite() || !ucl.is_finite() || lcl >= ucl {
                return Err(CliError::new(EXIT_CONFIG, "--lcl must be below --ucl"));
            }
            let cl = args.cl.unwrap_or(0.5 * (lcl + ucl));
            Ok(ControlLimits {
                lcl,
                cl,
                ucl,
                boot_mean: cl,
                boot_se: 0.0,
                t_lower: 0.0,
                t_upper: 0.0,
                phase1_estimate: cl,
                replicate_failures: 0,
                boot_estimates: vec![],
            })
        }
        _ => Err(CliError::new(
            EXIT_CONFIG,
            "provide --limits FILE or inline --lcl and --ucl",
        )),
    }
}

#[derive(Serialize)]
struct MonitorReport {
    outcomes: Vec<MonitorOutcome>,
    first_signal: Option<usize>,
    signals: usize,
    indeterminate: usize,
    subgroups: usize,
    lcl: f64,
    cl: f64,
    ucl: f64,
}

fn cmd_monitor(args: MonitorArgs) -> Result<(), CliError> {
    let limits = load_limits(&args)?;
    let spec = args.data.spec();
    let data = spec.load()?;
    let (a, b) = spec.support;
    let outcomes = monitor_stream(data.groups(), &limits, a, b, args.percentile);

    let mut first_signal = None;
    let mut signals = 0;
    let mut indeterminate = 0;
    for o in &outcomes {
        match o {
            MonitorOutcome::Verdict(v) if !v.in_control => {
                signals += 1;
                first_signal.get_or_insert(v.subgroup_index);
            }
            MonitorOutcome::Verdict(_) => {}
            MonitorOutcome::Indeterminate { .. } => indeterminate += 1,
        }
    }
    let report = MonitorReport {
        first_signal,
        signals,
        indeterminate,
        subgroups: outcomes.len(),
        lcl: limits.lcl,
        cl: limits.cl,
        ucl: limits.ucl,
        outcomes,
    };

    if let Some(path) = &args.out {
        let mut csv = String::from("index,statistic,verdict,lcl,cl,ucl\n");
        for o in &report.outcomes {
            match o {
                MonitorOutcome::Verdict(v) => {
                    let _ = writeln!(
                        csv,
                        "{},{:.17e},{},{:.17e},{:.17e},{:.17e}",
                        v.subgroup_index,
                        v.statistic,
                        verdict_word(o),
                        limits.lcl,
                        limits.cl,
                        limits.ucl
                    );
                }
                MonitorOutcome::Indeterminate { subgroup_index, .. } => {
                    let _ = writeln!(
                        csv,
                        "{subgroup_index},,indeterminate,{:.17e},{:.17e},{:.17e}",
                        limits.lcl, limits.cl, limits.ucl
                    );
                }
            }
        }
        fs::write(path, csv).map_err(|e| io_err(e, path))?;
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!("limits: LCL {} / CL {} / UCL {}", limits.lcl, limits.cl, limits.ucl);
        println!("subgroup  statistic              verdict");
        for o in &report.outcomes {
            match o {
                MonitorOutcome::Verdict(v) => {
                    println!("{:<9} {:<22} {}", v.subgroup_index, v.statistic, verdict_word(o))
                }
                MonitorOutcome::Indeterminate { subgroup_index, reason } => {
                    println!("{subgroup_index:<9} {:<22} indeterminate: {reason}", "-")
                }
            }
        }
        match report.first_signal {
            Some(i) => println!(
                "first signal at subgroup {i}; {} of {} signaled; {} indeterminate",
                report.signals, report.subgroups, report.indeterminate
            ),
            None => println!(
                "no signals in {} subgroups; {} indeterminate",
                report.subgroups, report.indeterminate
            ),
        }
    }
    Ok(())
}

fn verdict_word(o: &MonitorOutcome) -> &'static str {
    match o {
        MonitorOutcome::Verdict(v) => match v.breach {
            tbeta_chart::chart::Breach::None => "in-control",
            tbeta_chart::chart::Breach::BelowLcl => "below-lcl",
            tbeta_chart::chart::Breach::AboveUcl => "above-ucl",
        },
        MonitorOutcome::Indeterminate { .. } => "indeterminate",
    }
}

fn cmd_arl(args: ArlArgs) -> Result<(), CliError> {
    let (t1, t2) = args.theta;
    let (a, b) = args.support;
    let params = TbetaParams::new(t1, t2, a, b).map_err(from_core)?;
    let (boot_reps, replications) = if args.full_scale {
        (5000, 5000)
    } else if args.desk_scale {
        (1000, 500)
    } else {
        (args.boot_reps, args.replications)
    };
    let config = ChartConfig {
        p: args.percentile,
        far: args.far,
        boot_reps,
        boot_mode: args.boot_mode.into(),
        center_mode: CenterMode::BootstrapMean,
        seed: 0,
    };
    let shifts: Vec<ShiftSpec> = if args.shifts.is_empty() {
        vec![ShiftSpec::none()]
    } else {
        args.shifts
            .iter()
            .map(|&(d_theta1, d_theta2)| ShiftSpec { d_theta1, d_theta2 })
            .collect()
    };
    let cells = shift_grid(
        &params,
        &shifts,
        args.subgroup_size,
        args.phase1_subgroups,
        &config,
        replications,
        args.run_cap,
        args.seed,
    )
    .map_err(from_core)?;
    let csv = grid_to_csv(&cells, args.percentile, args.far);
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| io_err(e, path))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_datasets(args: DatasetsArgs) -> Result<(), CliError> {
    match &args.dump {
        None => {
            for name in data::EMBEDDED_NAMES {
                let series = data::embedded(name).unwrap();
                println!("{name} ({} observations)", series.len());
            }
        }
        Some(name) => {
            let series = data::embedded(name).ok_or_else(|| {
                CliError::new(
                    EXIT_CONFIG,
                    format!("unknown dataset '{name}'; available: {}", data::EMBEDDED_NAMES.join(", ")),
                )
            })?;
            for v in series {
                println!("{v:.16e}");
            }
        }
    }
    Ok(())
}
