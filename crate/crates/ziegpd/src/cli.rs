//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use ziegpd_core::diagnostics::{cdf_compare_data, ks_critical_value, ks_statistic, qq_data, PlottingPosition};
use ziegpd_core::inference::{bootstrap_replicate, summarize_bootstrap, MIN_BOOTSTRAP_REPLICATES};
use ziegpd_core::{fit, fit_mle, FitOptions, McmcOptions, Method, Model};

use crate::error::{Error, Result};
use crate::formats::{self, sig6};
use crate::pipeline::{self, CsvSchema, Preprocess};
use crate::simulation;

#[derive(Debug, Parser)]
#[command(name = "ziegpd", version, about = "Zero-inflated extended GPD models for daily rainfall")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a sample file and write the result as JSON
    Fit(FitArgs),
    /// Run the simulation studies in a TOML config
    Simulate(SimulateArgs),
    /// Draw a sample from a parameter file
    Sample(SampleArgs),
    /// Return levels for given return periods
    Rlevel(RlevelArgs),
    /// QQ and CDF comparison tables for a fitted model
    Diagnose(DiagnoseArgs),
    /// Turn a daily precipitation CSV into a sample file
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: Model,
    #[arg(long, default_value = "mle")]
    pub method: Method,
    /// Percentile bootstrap replicates (MLE only)
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RlevelArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    pub periods: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, default_value = "weibull")]
    pub positions: PlottingPosition,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
    #[arg(long, value_delimiter = ',', default_value = "11,12,1,2")]
    pub months: Vec<u32>,
    #[arg(long, default_value_t = pipeline::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value = "precip")]
    pub precip_column: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value_t = pipeline::DEFAULT_MISSING, allow_hyphen_values = true)]
    pub missing: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_out(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    formats::write_file(path, &s)
}

fn run_fit(args: &FitArgs, stdout: &mut dyn Write) -> Result<()> {
    let data = formats::read_sample(&args.input)?;
    let mut opts = FitOptions::new(args.method, args.model);
    opts.alpha = args.alpha;
    opts.seed = args.seed;
    let d = McmcOptions::default();
    opts.mcmc = McmcOptions {
        chains: args.chains.unwrap_or(d.chains),
        iterations: args.iterations.unwrap_or(d.iterations),
        burn_in: args.burn_in.unwrap_or(d.burn_in),
        ..d
    };
    let result = match args.bootstrap {
        Some(_) if args.method == Method::Bayes => {
            return Err(Error::Usage("--bootstrap applies to --method mle only".into()))
        }
        Some(b) if b < MIN_BOOTSTRAP_REPLICATES => {
            return Err(Error::Usage(format!(
                "--bootstrap needs at least {MIN_BOOTSTRAP_REPLICATES} replicates"
            )))
        }
        Some(b) => {
            let point = fit_mle(&data, &opts)?;
            let outcomes = (0..b as u64)
                .into_par_iter()
                .map(|i| bootstrap_replicate(&data, &opts, &point.estimates, args.seed, i))
                .collect();
            summarize_bootstrap(point, outcomes, args.alpha)?.fit
        }
        None => fit(&data, &opts)?,
    };
    formats::write_file(&args.out, &formats::fit_to_json(&result, &data))?;
    writeln!(
        stdout,
        "{} {} fit: loglik {:.4}, wrote {}",
        args.model,
        args.method,
        result.loglik,
        args.out.display()
    )
    .ok();
    Ok(())
}

fn run_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let configs = simulation::read_config(&args.config)?;
    create_dir(&args.out)?;
    let (mut rmse, mut estimates, mut coverage) = (Vec::new(), Vec::new(), Vec::new());
    for cfg in &configs {
        let out = simulation::run_study(cfg)?;
        simulation::write_summary(&mut *stdout, cfg, &out).ok();
        rmse.extend(out.table.rows);
        estimates.extend(out.estimates);
        coverage.extend(out.coverage);
    }
    simulation::write_rmse_csv(&args.out.join("rmse.csv"), &rmse)?;
    simulation::write_estimates_csv(&args.out.join("estimates.csv"), &estimates)?;
    if !coverage.is_empty() {
        simulation::write_coverage_csv(&args.out.join("coverage.csv"), &coverage)?;
    }
    Ok(())
}

fn run_sample(args: &SampleArgs) -> Result<()> {
    let theta = formats::read_params(&args.params)?;
    let sample = theta.sample(args.n, args.seed)?;
    formats::write_sample(&args.out, sample.values())
}

fn run_rlevel(args: &RlevelArgs) -> Result<()> {
    let theta = formats::read_params(&args.params)?;
    let rows = args
        .periods
        .iter()
        .map(|&t| {
            let level = theta.return_level(t)?;
            Ok(format!("{},{:.3},{}", sig6(t), 1.0 - 1.0 / t, sig6(level)))
        })
        .collect::<Result<Vec<_>>>()?;
    csv_out(&args.out, "period,probability,return_level", rows)
}

fn run_diagnose(args: &DiagnoseArgs, stdout: &mut dyn Write) -> Result<()> {
    let data = formats::read_sample(&args.input)?;
    let theta = formats::read_params(&args.params)?;
    let qq = qq_data(&data, &theta, args.positions)?;
    let cdf = cdf_compare_data(&data, &theta, args.grid)?;
    create_dir(&args.out)?;
    let m = qq.points.len();
    csv_out(
        &args.out.join("qq.csv"),
        "rank,plotting_position,empirical_quantile,model_quantile",
        qq.points.iter().enumerate().map(|(k, p)| {
            format!(
                "{},{},{},{}",
                k + 1,
                sig6(args.positions.at(k + 1, m)),
                sig6(p.empirical),
                sig6(p.model)
            )
        }),
    )?;
    csv_out(
        &args.out.join("cdf.csv"),
        "z,empirical_cdf,model_cdf",
        cdf.points
            .iter()
            .map(|p| format!("{},{},{}", sig6(p.z), sig6(p.empirical), sig6(p.model))),
    )?;
    let ks = ks_statistic(&data, &theta)?;
    writeln!(
        stdout,
        "KS distance {:.5} (critical value at 0.01: {:.5}, n = {})",
        ks,
        ks_critical_value(data.len(), 0.01),
        data.len()
    )
    .ok();
    Ok(())
}

fn run_preprocess(args: &PreprocessArgs, stdout: &mut dyn Write) -> Result<()> {
    if !args.delimiter.is_ascii() {
        return Err(Error::Usage("--delimiter must be an ASCII character".into()));
    }
    let schema = CsvSchema {
        date_column: args.date_column.clone(),
        precip_column: args.precip_column.clone(),
        delimiter: args.delimiter as u8,
        missing: args.missing,
    };
    let (series, report) = pipeline::load_daily_csv(&args.input, &schema)?;
    let steps = Preprocess {
        thin_step: args.thin,
        thin_offset: args.offset,
        months: args.months.clone(),
        cutoff: args.cutoff,
    };
    let sample = steps.apply(&series)?;
    formats::write_sample(&args.out, sample.values())?;
    writeln!(
        stdout,
        "{}: {} rows, {} missing dropped, {} values kept ({} zero)",
        series.station.name,
        report.rows,
        report.dropped,
        sample.len(),
        sample.zero_count()
    )
    .ok();
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => run_fit(a, stdout),
        Command::Simulate(a) => run_simulate(a, stdout),
        Command::Sample(a) => run_sample(a),
        Command::Rlevel(a) => run_rlevel(a),
        Command::Diagnose(a) => run_diagnose(a, stdout),
        Command::Preprocess(a) => run_preprocess(a, stdout),
    }
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Parses `args`, runs the command and returns the exit code. Errors go to
/// `stderr` as a one-line JSON object.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(stdout, "{e}").ok();
                return 0;
            }
            writeln!(stderr, "{}", error_json("usage", e.to_string().trim())).ok();
            return 1;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            writeln!(stderr, "{}", error_json(e.kind(), &e.to_string())).ok();
            e.exit_code()
        }
    }
}
