//! Command-line front end.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, ConfigError};
use crate::experiment::{
    aggregate_csv, paired_draws, stream_id, sweep_distance, trials_csv, ExperimentConfig, ExperimentError,
};
use crate::numerics::RngStream;
use crate::optimizer::{ao_solve, AOConfig, Mode};
use crate::rate::Instance;
use crate::verify::{oracle_suite, run_all, SuiteReport};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "IRS_RELAY_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "irs-relay", version, about = "IRS-assisted downlink with a relaying IRS controller")]
pub struct Cli {
    /// TOML config; unspecified keys take their defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory (sweep) or file (single, verify, oracle-check).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the base seed of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print errors and machine-readable output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate-versus-distance sweep over all configured schemes.
    Sweep,
    /// Solve one channel draw and print the solution.
    Single {
        /// User distance along the AP–IRS axis (m).
        #[arg(long)]
        d0: f64,
    },
    /// Run the property suites; exit status 0 iff all pass.
    Verify,
    /// Compare the solver with exhaustive search on a tiny array.
    OracleCheck {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        m: u8,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let name = path.file_name().ok_or_else(|| CliError::Other(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, AOConfig), CliError> {
    let (mut cfg, solver) = match &cli.config {
        Some(path) => parse_config(path)?,
        None => (ExperimentConfig::default(), AOConfig::default()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((cfg, solver))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))
}

fn cmd_sweep(cli: &Cli, cfg: &ExperimentConfig, solver: &AOConfig) -> Result<bool, CliError> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let result = sweep_distance(cfg, solver)?;
    write_atomic(&out.join("trials.csv"), trials_csv(&result.records).as_bytes())?;
    write_atomic(&out.join("aggregate.csv"), aggregate_csv(&result.rows).as_bytes())?;
    write_atomic(&out.join("trials.json"), to_json(&result.records)?.as_bytes())?;
    write_atomic(&out.join("aggregate.json"), to_json(&result.rows)?.as_bytes())?;
    if !cli.quiet {
        println!("{}", aggregate_csv(&result.rows).trim_end());
        eprintln!("wrote {} rows and {} trials to {}", result.rows.len(), result.records.len(), out.display());
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct SingleReport {
    d0_m: f64,
    seed: u64,
    elements: usize,
    mode: Mode,
    alpha: f64,
    rate: f64,
    r_u: f64,
    r_c: f64,
    r_u_tilde_star: f64,
    c1: f64,
    c2_star: f64,
    rate_trace: Vec<f64>,
    theta1_phases: Vec<f64>,
    theta2_phases: Vec<f64>,
}

fn cmd_single(cli: &Cli, cfg: &ExperimentConfig, solver: &AOConfig, d0: f64) -> Result<bool, CliError> {
    let cfg = ExperimentConfig {
        d0_list: vec![d0],
        ..cfg.clone()
    };
    cfg.validate()?;
    let instance = Instance::new(paired_draws(&cfg, 0, 0)?, cfg.power_budget()?);
    let mut rng = RngStream::with_stream(cfg.seed, stream_id(0, 0, 1));
    let sol = ao_solve(&instance, solver, &mut rng).map_err(ExperimentError::from)?;
    let rb = instance.breakdown(&sol.theta1).map_err(ExperimentError::from)?;
    let report = SingleReport {
        d0_m: d0,
        seed: cfg.seed,
        elements: instance.num_elements(),
        mode: sol.mode,
        alpha: sol.alpha,
        rate: sol.rate,
        r_u: rb.r_u,
        r_c: rb.r_c,
        r_u_tilde_star: rb.r_u_tilde_star,
        c1: rb.c1(sol.alpha).map_err(ExperimentError::from)?,
        c2_star: sol.c2_star,
        rate_trace: sol.rate_trace.clone(),
        theta1_phases: sol.theta1.phases(),
        theta2_phases: sol.theta2.phases(),
    };
    if !cli.quiet {
        eprintln!("d0 = {d0} m, seed = {}, M = {}", cfg.seed, report.elements);
        eprintln!("mode      {}", sol.mode.as_str());
        eprintln!("alpha     {:.6}", sol.alpha);
        eprintln!("R_U       {:.6}", rb.r_u);
        eprintln!("R_C       {:.6}", rb.r_c);
        eprintln!("R~_U*     {:.6}", rb.r_u_tilde_star);
        eprintln!("C1        {:.6}", report.c1);
        eprintln!("C2*       {:.6}", sol.c2_star);
        eprintln!("rate      {:.6}", sol.rate);
        eprintln!("trace     {:?}", sol.rate_trace);
    }
    let json = serde_json::to_string(&report).map_err(|e| CliError::Other(e.to_string()))?;
    println!("{json}");
    if let Some(out) = &cli.out {
        write_atomic(out, to_json(&report)?.as_bytes())?;
    }
    Ok(true)
}

fn report_suites(cli: &Cli, reports: &[SuiteReport]) -> Result<bool, CliError> {
    let failed = reports.iter().filter(|r| !r.ok).count();
    for r in reports {
        println!(
            "{} {:<12} {}/{}  {}",
            if r.ok { "PASS" } else { "FAIL" },
            r.name,
            r.passed,
            r.total,
            r.detail
        );
    }
    println!("{} passed, {} failed", reports.len() - failed, failed);
    if let Some(out) = &cli.out {
        write_atomic(out, to_json(&reports)?.as_bytes())?;
    }
    Ok(failed == 0)
}

/// Runs the parsed command; `Ok(false)` means a suite failed.
pub fn execute(cli: &Cli) -> Result<bool, CliError> {
    let (cfg, solver) = load(cli)?;
    match &cli.command {
        Command::Sweep => cmd_sweep(cli, &cfg, &solver),
        Command::Single { d0 } => cmd_single(cli, &cfg, &solver, *d0),
        Command::Verify => report_suites(cli, &run_all(&solver, cfg.seed)),
        Command::OracleCheck { m } => report_suites(cli, &[oracle_suite(&solver, cfg.seed, *m as usize, 20)]),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
