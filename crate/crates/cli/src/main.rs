//! `dwellcert`: batch front end for dwell-time certificates, searches,
//! synthesis, simulation and table reproduction.
//!
//! Exit codes: 0 completed with a stable/feasible verdict, 1 completed with an
//! unstable/infeasible verdict, 2 usage error, 3 numerical failure.

mod config;
mod reproduce;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use dwellcert_core::clockcond::{CertOptions, DEFAULT_GRID_N, DEFAULT_PWL_N};
use dwellcert_core::dtsearch::DEFAULT_TOL;
use dwellcert_core::Error;
use serde::Serialize;
use serde_json::Value;

use config::{CertMode, Options};

pub const REPORT_VERSION: u32 = 1;
/// Default segment count for synthesis programs (larger values grow the program quickly).
pub const SYNTH_DEFAULT_N: usize = 10;

#[derive(Debug)]
pub enum CliError {
    Usage { path: String, message: String },
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn usage(path: &str, message: String) -> Self {
        CliError::Usage {
            path: path.to_string(),
            message,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// Whether a core error means "computed: negative", "bad input" or "numerics failed".
fn exit_class(e: &Error) -> u8 {
    match e {
        Error::NoThreshold { .. } | Error::Unstable(_) | Error::Infeasible { .. } => 1,
        Error::InvalidSystem(_) | Error::InvalidArgument(_) | Error::Dimension(_) | Error::NotSquare { .. } | Error::Asymmetric { .. } => 2,
        _ => 3,
    }
}

#[derive(Parser)]
#[command(name = "dwellcert", version, about = "Mean-square dwell-time certificates for stochastic impulsive systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify stability under a dwell-time specification.
    Analyze(JobArgs),
    /// Search a dwell-time threshold (optionally over a parameter sweep).
    Search(JobArgs),
    /// Synthesize clock-dependent state feedback.
    Synthesize(JobArgs),
    /// Monte-Carlo simulation with an exact second-moment check.
    Simulate(JobArgs),
    /// Convert a switched or sampled-data system into impulsive form.
    Convert(JobArgs),
    /// Reproduce a benchmark table (T1..T5) side by side with reference values.
    Reproduce {
        #[arg(value_enum)]
        table: reproduce::TableId,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct JobArgs {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// Output directory for report.json, metadata.json and CSV series.
    #[arg(long, default_value = "dwellcert-out")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<CertMode>,
    /// Segments of piecewise-linear decision functions.
    #[arg(long = "pwl-n")]
    pub pwl_n: Option<usize>,
    /// Dwell-time grid points for gridded conditions.
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Strictness margin (default 1e-6 times the system scale).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Search tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Effective settings, recorded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub mode: Option<CertMode>,
    pub pwl_n: Option<usize>,
    pub grid_n: usize,
    pub eps: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub paths: usize,
    pub horizon: f64,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Settings {
    pub fn resolve(args: &CommonArgs, opts: &Options) -> Self {
        Self {
            mode: args.mode.or(opts.mode),
            pwl_n: args.pwl_n.or(opts.n),
            grid_n: args.grid_n.or(opts.grid_n).unwrap_or(DEFAULT_GRID_N),
            eps: args.eps.or(opts.eps),
            tol: args.tol.or(opts.tol).unwrap_or(DEFAULT_TOL),
            seed: args.seed.or(opts.seed).unwrap_or(0),
            paths: args.paths.or(opts.paths).unwrap_or(1000),
            horizon: opts.horizon.unwrap_or(10.0),
            threads: args.threads.or(opts.threads),
        }
    }

    pub fn analysis_n(&self) -> usize {
        self.pwl_n.unwrap_or(DEFAULT_PWL_N)
    }

    pub fn synthesis_n(&self) -> usize {
        self.pwl_n.unwrap_or(SYNTH_DEFAULT_N)
    }

    pub fn cert(&self) -> CertOptions {
        CertOptions {
            eps: self.eps,
            ..CertOptions::default()
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |p: &str, m: &str| Err(CliError::usage(p, m.into()));
        if self.pwl_n == Some(0) {
            return bad("options.N", "must be at least 1");
        }
        if self.grid_n < 2 {
            return bad("options.grid_n", "must be at least 2");
        }
        if !(self.tol > 0.0) {
            return bad("options.tol", "must be positive");
        }
        if self.eps.is_some_and(|e| !(e > 0.0)) {
            return bad("options.eps", "must be positive");
        }
        if self.paths == 0 {
            return bad("options.paths", "must be at least 1");
        }
        if self.threads == Some(0) {
            return bad("options.threads", "must be at least 1");
        }
        Ok(())
    }
}

/// Result of a command: the report body, its verdict and extra CSV files.
pub struct Outcome {
    pub verdict: Option<bool>,
    pub result: Value,
    pub csv: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    command: &'a str,
    settings: &'a Settings,
    verdict: Option<bool>,
    result: &'a Value,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool_version: &'a str,
    command: &'a str,
    config: Option<String>,
    unix_time: u64,
    elapsed_seconds: f64,
    threads: Option<usize>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_outputs(out: &Path, command: &str, settings: &Settings, outcome: &Outcome, config: Option<&Path>, started: Instant) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let report = Report {
        schema_version: REPORT_VERSION,
        command,
        settings,
        verdict: outcome.verdict,
        result: &outcome.result,
    };
    write_json(&out.join("report.json"), &report)?;
    for (name, body) in &outcome.csv {
        std::fs::write(out.join(name), body).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    }
    let meta = Metadata {
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config: config.map(|p| p.display().to_string()),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        threads: settings.threads,
    };
    write_json(&out.join("metadata.json"), &meta)
}

/// Turns negative-verdict errors into reports; passes the rest through.
fn negative_outcome(e: Error) -> Result<Outcome, CliError> {
    if exit_class(&e) != 1 {
        return Err(CliError::Core(e));
    }
    let mut result = serde_json::json!({ "error": e.to_string() });
    if let Error::NoThreshold { lo, hi, reason, scan } = &e {
        result["no_threshold"] = serde_json::json!({ "lo": lo, "hi": hi, "reason": reason, "scan": scan });
    }
    Ok(Outcome {
        verdict: Some(false),
        result,
        csv: vec![],
    })
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let started = Instant::now();
    let (command, common, config_path, settings, outcome) = match cli.command {
        Command::Reproduce { table, common } => {
            let settings = Settings::resolve(&common, &Options::default());
            settings.validate()?;
            install_threads(settings.threads)?;
            let outcome = reproduce::run(table, &settings)?;
            ("reproduce", common, None, settings, outcome)
        }
        Command::Analyze(a) | Command::Search(a) | Command::Synthesize(a) | Command::Simulate(a) | Command::Convert(a) => {
            let cfg = config::load(&a.config)?;
            let settings = Settings::resolve(&a.common, &cfg.options);
            settings.validate()?;
            install_threads(settings.threads)?;
            let command = cfg.task.command();
            let outcome = match run::run(&cfg, &settings) {
                Ok(o) => o,
                Err(CliError::Core(e)) => negative_outcome(e)?,
                Err(e) => return Err(e),
            };
            (command, a.common, Some(a.config), settings, outcome)
        }
    };
    write_outputs(&common.out, command, &settings, &outcome, config_path.as_deref(), started)?;
    println!("{}", serde_json::to_string(&serde_json::json!({ "command": command, "verdict": outcome.verdict })).unwrap_or_default());
    Ok(if outcome.verdict == Some(false) { 1 } else { 0 })
}

fn install_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // The subcommand must match the config's task block.
    let expected = match &cli.command {
        Command::Analyze(_) => Some("analyze"),
        Command::Search(_) => Some("search"),
        Command::Synthesize(_) => Some("synthesize"),
        Command::Simulate(_) => Some("simulate"),
        Command::Convert(_) => Some("convert"),
        Command::Reproduce { .. } => None,
    };
    if let (Some(expected), Command::Analyze(a) | Command::Search(a) | Command::Synthesize(a) | Command::Simulate(a) | Command::Convert(a)) =
        (expected, &cli.command)
    {
        if let Ok(cfg) = config::load(&a.config) {
            if cfg.task.command() != expected {
                eprintln!("error at task.kind: config task is '{}' but the command is '{expected}'", cfg.task.command());
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage { path, message }) => {
            if path.is_empty() {
                eprintln!("error: {message}");
            } else {
                eprintln!("error at {path}: {message}");
            }
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e).max(2))
        }
        Err(CliError::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
