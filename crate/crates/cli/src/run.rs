//! Task dispatch for config-driven commands.

use std::sync::Arc;

use dwellcert_core::clockcond::{
    exact_constant_dt, exact_minimum_dt, exact_ranged_dt, lifted_quadratic_stability, pwl_constant_dt, pwl_minimum_dt, pwl_ranged_dt,
    switched_min_dt,
};
use dwellcert_core::dtsearch::{largest_ranged_tmax, smallest_constant_dt, smallest_constant_dt_pwl, smallest_minimum_dt, SearchMode, SearchResult};
use dwellcert_core::matalg::to_rows;
use dwellcert_core::model::{sampled_data_to_impulsive, switched_to_impulsive};
use dwellcert_core::moments::{constant_dt_stable, ConstantGains};
use dwellcert_core::sde_sim::{moment_check, simulate, ScheduleKind, SimSpec};
use dwellcert_core::synthesis::{min_dt_sf, ranged_sf, sampled_data_sf, SynthOptions};
use dwellcert_core::{DwellTimeSpec, ImpulsiveSystem};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{benchmark, build_gains, build_system, CertMode, JobConfig, SearchTarget, System, SystemBlock, TaskBlock};
use crate::{CliError, Outcome, Settings};

fn to_value(v: &impl serde::Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

fn impulsive(sys: &System, what: &str) -> Result<ImpulsiveSystem, CliError> {
    match sys {
        System::Impulsive(s) => Ok(s.clone()),
        System::SampledData(sd) => Ok(sampled_data_to_impulsive(sd, None)?),
        System::Switched(_) => Err(CliError::usage("system.type", format!("{what} needs an impulsive or sampled-data system"))),
    }
}

pub fn run(cfg: &JobConfig, s: &Settings) -> Result<Outcome, CliError> {
    match &cfg.task {
        TaskBlock::Analyze { dwell } => analyze(&build_system(&cfg.system)?, *dwell, s),
        TaskBlock::Search { target, range, t_min, sweep } => {
            let params = match (sweep, &cfg.system) {
                (None, _) => return search(&build_system(&cfg.system)?, *target, *range, *t_min, s),
                (Some(sw), SystemBlock::Benchmark(b)) => (sw, b),
                (Some(_), _) => return Err(CliError::usage("task.sweep", "sweeps need a benchmark system".into())),
            };
            let (sw, b) = params;
            let cells: Vec<(f64, f64)> = sw.kappa.iter().flat_map(|&k| sw.delta.iter().map(move |&d| (k, d))).collect();
            let results: Vec<Result<Outcome, CliError>> = cells.par_iter().map(|&(k, d)| search(&benchmark(b, k, d), *target, *range, *t_min, s)).collect();
            let mut rows = Vec::new();
            let mut all = true;
            for ((k, d), r) in cells.iter().zip(results) {
                let o = match r {
                    Ok(o) => o,
                    Err(CliError::Core(e)) => crate::negative_outcome(e)?,
                    Err(e) => return Err(e),
                };
                all &= o.verdict != Some(false);
                rows.push(json!({ "kappa": k, "delta": d, "verdict": o.verdict, "threshold": o.result.get("threshold"), "result": o.result }));
            }
            Ok(Outcome {
                verdict: Some(all),
                result: json!({ "sweep": sw, "cells": rows }),
                csv: vec![],
            })
        }
        TaskBlock::Synthesize { dwell } => synthesize(&build_system(&cfg.system)?, *dwell, s),
        TaskBlock::Simulate {
            schedule,
            x0,
            points,
            h,
            jump_noise,
            gains,
        } => {
            let sys = impulsive(&build_system(&cfg.system)?, "simulation")?;
            let mut spec = SimSpec::new(sys.clone(), *schedule, x0.clone(), s.horizon, *points, s.paths, s.seed);
            if let Some(h) = h {
                spec.h = *h;
            }
            spec.jump_noise = *jump_noise;
            spec.threads = s.threads;
            if let Some(g) = gains {
                let (k_c, k_d) = build_gains(g, &sys)?;
                spec.gains = Some(Arc::new(ConstantGains { k_c, k_d }));
            }
            let r = simulate(&spec)?;
            let check = match schedule {
                ScheduleKind::Constant { .. } => Some(moment_check(&spec, &r)?),
                _ => None,
            };
            Ok(Outcome {
                verdict: None,
                result: json!({ "simulation": to_value(&r)?, "moment_check": to_value(&check)?, "step": spec.h }),
                csv: vec![("trajectory.csv".into(), r.to_csv())],
            })
        }
        TaskBlock::Convert {} => convert(&build_system(&cfg.system)?),
    }
}

fn analyze(sys: &System, dwell: DwellTimeSpec, s: &Settings) -> Result<Outcome, CliError> {
    dwell.validate()?;
    let opts = s.cert();
    let mode = s.mode.unwrap_or(CertMode::Exact);
    if let System::Switched(sw) = sys {
        let DwellTimeSpec::Minimum(t) = dwell else {
            return Err(CliError::usage("task.dwell", "switched systems support minimum dwell-time only".into()));
        };
        let c = switched_min_dt(sw, t, s.analysis_n(), &opts)?;
        return Ok(Outcome {
            verdict: Some(c.verdict),
            result: json!({ "certificate": to_value(&c)? }),
            csv: vec![],
        });
    }
    let sys = impulsive(sys, "analysis")?;
    let n = s.analysis_n();
    let mut extra = Value::Null;
    let cert = match (dwell, mode) {
        (DwellTimeSpec::Constant(t), m) => {
            let v = constant_dt_stable(&sys, t)?;
            extra = json!({ "rho": v.rho, "stable": v.stable });
            match m {
                CertMode::Exact => exact_constant_dt(&sys, t, &opts)?,
                CertMode::Pwl => pwl_constant_dt(&sys, t, n, &opts)?,
                CertMode::Lifted => lifted_quadratic_stability(&sys, t, t, 2, &opts)?,
            }
        }
        (DwellTimeSpec::Ranged { t_min, t_max }, CertMode::Exact) => exact_ranged_dt(&sys, t_min, t_max, s.grid_n, &opts)?,
        (DwellTimeSpec::Ranged { t_min, t_max }, CertMode::Pwl) => pwl_ranged_dt(&sys, t_min, t_max, n, &opts)?,
        (DwellTimeSpec::Ranged { t_min, t_max }, CertMode::Lifted) => lifted_quadratic_stability(&sys, t_min, t_max, s.grid_n, &opts)?,
        (DwellTimeSpec::Minimum(t), CertMode::Exact) => exact_minimum_dt(&sys, t, &opts)?,
        (DwellTimeSpec::Minimum(t), CertMode::Pwl) => pwl_minimum_dt(&sys, t, n, &opts)?,
        (DwellTimeSpec::Minimum(_), CertMode::Lifted) => {
            return Err(CliError::usage("options.mode", "lifted mode covers constant and ranged dwell-times".into()));
        }
    };
    Ok(Outcome {
        verdict: Some(cert.verdict),
        result: json!({ "certificate": to_value(&cert)?, "spectral": extra }),
        csv: vec![],
    })
}

fn search_mode(s: &Settings, default: CertMode) -> SearchMode {
    match s.mode.unwrap_or(default) {
        CertMode::Exact => SearchMode::Exact { grid_n: s.grid_n },
        CertMode::Pwl => SearchMode::Pwl { n: s.analysis_n() },
        CertMode::Lifted => SearchMode::Lifted { grid_n: s.grid_n },
    }
}

fn scan_csv(r: &SearchResult) -> Vec<(String, String)> {
    if r.scan.is_empty() {
        return vec![];
    }
    let mut body = String::from("T,rho\n");
    for (t, rho) in &r.scan {
        body.push_str(&format!("{t},{rho}\n"));
    }
    vec![("scan.csv".into(), body)]
}

fn search(sys: &System, target: SearchTarget, range: [f64; 2], t_min: Option<f64>, s: &Settings) -> Result<Outcome, CliError> {
    let sys = impulsive(sys, "search")?;
    let opts = s.cert();
    let range = (range[0], range[1]);
    let r = match target {
        SearchTarget::SmallestConstantDt => match s.mode {
            Some(CertMode::Pwl) => smallest_constant_dt_pwl(&sys, s.analysis_n(), range, s.tol, &opts)?,
            _ => smallest_constant_dt(&sys, range, s.tol)?,
        },
        SearchTarget::SmallestMinimumDt => smallest_minimum_dt(&sys, range, s.tol, search_mode(s, CertMode::Exact), &opts)?,
        SearchTarget::LargestRangedTmax => {
            largest_ranged_tmax(&sys, t_min.unwrap_or(range.0), range, s.tol, search_mode(s, CertMode::Exact), &opts)?
        }
    };
    Ok(Outcome {
        verdict: Some(!r.stable_intervals.is_empty()),
        csv: scan_csv(&r),
        result: to_value(&r)?,
    })
}

fn synthesize(sys: &System, dwell: DwellTimeSpec, s: &Settings) -> Result<Outcome, CliError> {
    dwell.validate()?;
    let opts = SynthOptions {
        cert: s.cert(),
        ..SynthOptions::default()
    };
    let n = s.synthesis_n();
    let r = match (sys, dwell) {
        (System::SampledData(sd), DwellTimeSpec::Ranged { t_min, t_max }) => sampled_data_sf(sd, t_min, t_max, n, &opts)?,
        (System::SampledData(sd), DwellTimeSpec::Constant(t)) => sampled_data_sf(sd, t, t, n, &opts)?,
        (System::SampledData(_), DwellTimeSpec::Minimum(_)) => {
            return Err(CliError::usage("task.dwell", "sampled-data synthesis needs a sampling interval range".into()));
        }
        (System::Switched(_), _) => return Err(CliError::usage("system.type", "synthesis needs an impulsive or sampled-data system".into())),
        (System::Impulsive(sys), DwellTimeSpec::Ranged { t_min, t_max }) => ranged_sf(sys, t_min, t_max, n, &opts)?,
        (System::Impulsive(sys), DwellTimeSpec::Constant(t)) => ranged_sf(sys, t, t, n, &opts)?,
        (System::Impulsive(sys), DwellTimeSpec::Minimum(t)) => min_dt_sf(sys, t, n, &opts)?,
    };
    Ok(Outcome {
        verdict: Some(r.verified),
        result: json!({ "synthesis": to_value(&r)?, "K_d": to_rows(&r.gains.k_d) }),
        csv: vec![],
    })
}

fn convert(sys: &System) -> Result<Outcome, CliError> {
    let result = match sys {
        System::Impulsive(s) => json!({ "impulsive": to_value(s)? }),
        System::SampledData(sd) => json!({ "impulsive": to_value(&sampled_data_to_impulsive(sd, None)?)? }),
        System::Switched(sw) => {
            let m = switched_to_impulsive(sw)?;
            let jumps: Vec<Value> = m
                .jumps
                .iter()
                .zip(&m.labels)
                .map(|((j, e_d), (to, from))| json!({ "to": to, "from": from, "J": to_rows(j), "E_d": to_rows(e_d) }))
                .collect();
            json!({ "multi_jump_impulsive": { "A": to_rows(&m.a), "E_c": m.e_c.iter().map(to_rows).collect::<Vec<_>>(), "jumps": jumps } })
        }
    };
    Ok(Outcome {
        verdict: None,
        result,
        csv: vec![],
    })
}
