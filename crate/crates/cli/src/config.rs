//! Job configuration schema (version 1).
//!
//! ```json
//! {
//!   "version": 1,
//!   "system": { "type": "impulsive", "A": [[-1, 0], [1, -2]], "E_c": [[0.1, 0], [0, 0.1]],
//!               "J": [[2, 1], [1, 3]], "E_d": [[0, 0], [0, 0]] },
//!   "task": { "kind": "search", "target": "smallest_constant_dt", "range": [0.01, 10] },
//!   "options": { "tol": 1e-4 }
//! }
//! ```

use std::path::Path;

use dwellcert_core::benchmarks;
use dwellcert_core::matalg::from_rows;
use dwellcert_core::model::{validate, Issue};
use dwellcert_core::sde_sim::{JumpNoise, ScheduleKind};
use dwellcert_core::{DwellTimeSpec, ImpulsiveSystem, Mat, Mode, SampledDataSystem, SwitchedSystem};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub system: SystemBlock,
    pub task: TaskBlock,
    #[serde(default)]
    pub options: Options,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// One matrix or a list of matrices (for several noise channels).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(Rows),
    Many(Vec<Rows>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulsiveBlock {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "E_c", default)]
    pub e_c: Option<OneOrMany>,
    #[serde(rename = "B_c1", default)]
    pub b_c1: Option<Rows>,
    #[serde(rename = "B_c2", default)]
    pub b_c2: Option<Rows>,
    #[serde(rename = "J")]
    pub j: Rows,
    #[serde(rename = "E_d", default)]
    pub e_d: Option<Rows>,
    #[serde(rename = "B_d1", default)]
    pub b_d1: Option<Rows>,
    #[serde(rename = "B_d2", default)]
    pub b_d2: Option<Rows>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeBlock {
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "H")]
    pub h: Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledDataBlock {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "E")]
    pub e: Rows,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    /// Two-state system of the constant and minimum dwell-time tables.
    ConstantDt,
    /// Two-state system of the ranged dwell-time tables.
    RangedDt,
    /// Two-state system used for state-feedback design.
    Synthesis,
    /// Sampled-data loop.
    SampledData,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkBlock {
    pub name: BenchmarkName,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemBlock {
    Impulsive(ImpulsiveBlock),
    Switched { modes: Vec<ModeBlock> },
    SampledData(SampledDataBlock),
    Benchmark(BenchmarkBlock),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchTarget {
    SmallestConstantDt,
    SmallestMinimumDt,
    LargestRangedTmax,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub kappa: Vec<f64>,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GainsBlock {
    #[serde(rename = "K_c", default)]
    pub k_c: Option<Rows>,
    #[serde(rename = "K_d", default)]
    pub k_d: Option<Rows>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskBlock {
    Analyze {
        dwell: DwellTimeSpec,
    },
    Search {
        target: SearchTarget,
        range: [f64; 2],
        #[serde(default)]
        t_min: Option<f64>,
        #[serde(default)]
        sweep: Option<Sweep>,
    },
    Synthesize {
        dwell: DwellTimeSpec,
    },
    Simulate {
        schedule: ScheduleKind,
        x0: Vec<f64>,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        h: Option<f64>,
        #[serde(default)]
        jump_noise: JumpNoise,
        #[serde(default)]
        gains: Option<GainsBlock>,
    },
    Convert {},
}

fn default_points() -> usize {
    100
}

impl TaskBlock {
    pub fn command(&self) -> &'static str {
        match self {
            TaskBlock::Analyze { .. } => "analyze",
            TaskBlock::Search { .. } => "search",
            TaskBlock::Synthesize { .. } => "synthesize",
            TaskBlock::Simulate { .. } => "simulate",
            TaskBlock::Convert {} => "convert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CertMode {
    Exact,
    Pwl,
    Lifted,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub mode: Option<CertMode>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub grid_n: Option<usize>,
    pub eps: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub horizon: Option<f64>,
    pub threads: Option<usize>,
}

/// Reads and parses a config, reporting schema errors with their JSON path.
pub fn load(path: &Path) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<JobConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::usage(&path, e.into_inner().to_string())
    })?;
    if cfg.version != SCHEMA_VERSION {
        return Err(CliError::usage("version", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", cfg.version)));
    }
    Ok(cfg)
}

fn mat(rows: &Rows, path: &str) -> Result<Mat, CliError> {
    from_rows(rows).map_err(|_| CliError::usage(path, "matrix rows have different lengths".into()))
}

fn issues(prefix: &str, list: Vec<Issue>) -> CliError {
    let first = &list[0];
    let message = list.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ");
    CliError::usage(&format!("{prefix}.{}", first.field), message)
}

/// A parsed system of any supported kind.
#[derive(Debug, Clone)]
pub enum System {
    Impulsive(ImpulsiveSystem),
    Switched(SwitchedSystem),
    SampledData(SampledDataSystem),
}

pub fn build_impulsive(b: &ImpulsiveBlock) -> Result<ImpulsiveSystem, CliError> {
    let a = mat(&b.a, "system.A")?;
    let n = a.nrows();
    let e_c = match &b.e_c {
        None => vec![Mat::zeros(n, n)],
        Some(OneOrMany::One(r)) => vec![mat(r, "system.E_c")?],
        Some(OneOrMany::Many(list)) => list
            .iter()
            .enumerate()
            .map(|(i, r)| mat(r, &format!("system.E_c[{i}]")))
            .collect::<Result<_, _>>()?,
    };
    let opt = |r: &Option<Rows>, path: &str, cols: usize| -> Result<Mat, CliError> {
        match r {
            Some(r) => mat(r, path),
            None => Ok(Mat::zeros(n, cols)),
        }
    };
    let b_c1 = opt(&b.b_c1, "system.B_c1", 0)?;
    let b_c2 = opt(&b.b_c2, "system.B_c2", b_c1.ncols())?;
    let b_d1 = opt(&b.b_d1, "system.B_d1", 0)?;
    let b_d2 = opt(&b.b_d2, "system.B_d2", b_d1.ncols())?;
    let sys = ImpulsiveSystem {
        j: mat(&b.j, "system.J")?,
        e_d: opt(&b.e_d, "system.E_d", n)?,
        a,
        e_c,
        b_c1,
        b_c2,
        b_d1,
        b_d2,
    };
    validate(&sys).map_err(|l| issues("system", l))?;
    Ok(sys)
}

pub fn benchmark(b: &BenchmarkBlock, kappa: f64, delta: f64) -> System {
    match b.name {
        BenchmarkName::ConstantDt => System::Impulsive(benchmarks::constant_dt_example(kappa, delta)),
        BenchmarkName::RangedDt => System::Impulsive(benchmarks::ranged_dt_example(kappa, delta)),
        BenchmarkName::Synthesis => System::Impulsive(benchmarks::synthesis_example()),
        BenchmarkName::SampledData => System::SampledData(benchmarks::sampled_data_example(b.alpha.unwrap_or(benchmarks::SAMPLED_DATA_ALPHA))),
    }
}

pub fn build_system(block: &SystemBlock) -> Result<System, CliError> {
    Ok(match block {
        SystemBlock::Impulsive(b) => System::Impulsive(build_impulsive(b)?),
        SystemBlock::Switched { modes } => {
            let modes = modes
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    Ok(Mode {
                        g: mat(&m.g, &format!("system.modes[{i}].G"))?,
                        h: mat(&m.h, &format!("system.modes[{i}].H"))?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let sw = SwitchedSystem { modes };
            sw.validate().map_err(|l| issues("system", l))?;
            System::Switched(sw)
        }
        SystemBlock::SampledData(b) => {
            let sd = SampledDataSystem {
                a_sd: mat(&b.a, "system.A")?,
                b_sd: mat(&b.b, "system.B")?,
                e_sd: mat(&b.e, "system.E")?,
                alpha: b.alpha,
            };
            sd.validate().map_err(|l| {
                let l = l
                    .into_iter()
                    .map(|i| Issue {
                        field: i.field.trim_end_matches("_sd").to_string(),
                        message: i.message,
                    })
                    .collect();
                issues("system", l)
            })?;
            System::SampledData(sd)
        }
        SystemBlock::Benchmark(b) => benchmark(b, b.kappa, b.delta),
    })
}

pub fn build_gains(g: &GainsBlock, sys: &ImpulsiveSystem) -> Result<(Mat, Mat), CliError> {
    let k_c = match &g.k_c {
        Some(r) => mat(r, "task.gains.K_c")?,
        None => Mat::zeros(sys.m_c(), sys.n()),
    };
    let k_d = match &g.k_d {
        Some(r) => mat(r, "task.gains.K_d")?,
        None => Mat::zeros(sys.m_d(), sys.n()),
    };
    if k_c.shape() != (sys.m_c(), sys.n()) {
        return Err(CliError::usage("task.gains.K_c", format!("expected {}x{}", sys.m_c(), sys.n())));
    }
    if k_d.shape() != (sys.m_d(), sys.n()) {
        return Err(CliError::usage("task.gains.K_d", format!("expected {}x{}", sys.m_d(), sys.n())));
    }
    Ok((k_c, k_d))
}
