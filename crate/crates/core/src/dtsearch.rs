//! Scalar searches over dwell-time parameters.
//!
//! `ρ(M(T))` need not be monotone in `T`, so the constant dwell-time search
//! scans first and bisects the first stable boundary. Certificate feasibility
//! is monotone in the searched parameter, so the other searches bisect directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clockcond::{
    exact_minimum_dt, exact_ranged_dt, lifted_quadratic_stability, pwl_constant_dt, pwl_minimum_dt, pwl_ranged_dt,
    theta_grid, CertOptions, DEFAULT_GRID_N, DEFAULT_PWL_N,
};
use crate::error::{Error, Result};
use crate::matalg::eig;
use crate::model::ImpulsiveSystem;
use crate::moments::{constant_dt_stable, lift};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const SCAN_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub threshold: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// Stable runs of the coarse scan, as `(first, last)` scan points.
    pub stable_intervals: Vec<(f64, f64)>,
    pub method: String,
    /// `(T, ρ(M(T)))` of the coarse scan, empty for certificate searches.
    pub scan: Vec<(f64, f64)>,
}

/// Certificate used by the feasibility searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchMode {
    Exact { grid_n: usize },
    Pwl { n: usize },
    Lifted { grid_n: usize },
}

impl SearchMode {
    pub fn exact() -> Self {
        SearchMode::Exact { grid_n: DEFAULT_GRID_N }
    }
    pub fn pwl() -> Self {
        SearchMode::Pwl { n: DEFAULT_PWL_N }
    }
    pub fn lifted() -> Self {
        SearchMode::Lifted { grid_n: DEFAULT_GRID_N }
    }
    pub fn label(&self) -> String {
        match self {
            SearchMode::Exact { grid_n } => format!("exact(grid_n={grid_n})"),
            SearchMode::Pwl { n } => format!("pwl(N={n})"),
            SearchMode::Lifted { grid_n } => format!("lifted(grid_n={grid_n})"),
        }
    }
}

fn check_search(range: (f64, f64), tol: f64) -> Result<()> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Bisects `[lo, hi]` where `good(lo) != good(hi)`; `good_hi` gives `good(hi)`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, good_hi: bool, mut good: impl FnMut(f64) -> Result<bool>) -> Result<(f64, f64, usize)> {
    let mut evals = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evals += 1;
        if good(mid)? == good_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi, evals))
}

fn runs(scan: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &(t, rho)) in scan.iter().enumerate() {
        if rho < 1.0 {
            start.get_or_insert(t);
        }
        let ends = rho >= 1.0 || i + 1 == scan.len();
        if ends {
            if let Some(s) = start.take() {
                let last = if rho < 1.0 { t } else { scan[i - 1].0 };
                out.push((s, last));
            }
        }
    }
    out
}

/// Smallest `T` with `ρ(M(T)) < 1`, from a 200-point scan and bisection.
pub fn smallest_constant_dt(sys: &ImpulsiveSystem, range: (f64, f64), tol: f64) -> Result<SearchResult> {
    check_search(range, tol)?;
    let grid = theta_grid(range.0, range.1, SCAN_POINTS);
    let scan: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| constant_dt_stable(sys, t).map(|v| (t, v.rho)))
        .collect::<Result<_>>()?;
    let stable_intervals = runs(&scan);
    let no_threshold = |reason: &str| Error::NoThreshold {
        lo: range.0,
        hi: range.1,
        reason: reason.into(),
        scan: scan.clone(),
    };
    let first = scan.iter().position(|p| p.1 < 1.0).ok_or_else(|| no_threshold("ρ(M(T)) ≥ 1 on the whole scan"))?;
    if first == 0 {
        return Err(no_threshold("already stable at the lower end"));
    }
    let (lo, hi, evals) = bisect(scan[first - 1].0, scan[first].0, tol, true, |t| Ok(constant_dt_stable(sys, t)?.stable))?;
    Ok(SearchResult {
        threshold: 0.5 * (lo + hi),
        bracket: (lo, hi),
        evaluations: SCAN_POINTS + evals,
        stable_intervals,
        method: "spectral".into(),
        scan,
    })
}

/// Largest real part of the lifted generator's spectrum.
pub fn flow_abscissa(sys: &ImpulsiveSystem) -> Result<f64> {
    Ok(eig(&lift(sys).gen)?.max_real_part)
}

fn minimum_feasible(sys: &ImpulsiveSystem, t: f64, mode: SearchMode, opts: &CertOptions) -> Result<bool> {
    Ok(match mode {
        SearchMode::Pwl { n } => pwl_minimum_dt(sys, t, n, opts)?.verdict,
        SearchMode::Exact { .. } | SearchMode::Lifted { .. } => exact_minimum_dt(sys, t, opts)?.verdict,
    })
}

/// Smallest certified minimum dwell-time. `Lifted` falls back to the exact test.
pub fn smallest_minimum_dt(sys: &ImpulsiveSystem, range: (f64, f64), tol: f64, mode: SearchMode, opts: &CertOptions) -> Result<SearchResult> {
    check_search(range, tol)?;
    let abscissa = flow_abscissa(sys)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable(format!("flow not MS-stable: max Re λ(𝒜) = {abscissa:.6}")));
    }
    let (lo, hi) = range;
    if !minimum_feasible(sys, hi, mode, opts)? {
        return Err(Error::NoThreshold {
            lo,
            hi,
            reason: "no certificate in range".into(),
            scan: vec![],
        });
    }
    let method = format!("minimum-dt {}", mode.label());
    if minimum_feasible(sys, lo, mode, opts)? {
        return Ok(SearchResult {
            threshold: lo,
            bracket: (lo, lo),
            evaluations: 2,
            stable_intervals: vec![(lo, hi)],
            method,
            scan: vec![],
        });
    }
    let (a, b, evals) = bisect(lo, hi, tol, true, |t| minimum_feasible(sys, t, mode, opts))?;
    Ok(SearchResult {
        threshold: 0.5 * (a + b),
        bracket: (a, b),
        evaluations: evals + 2,
        stable_intervals: vec![(b, hi)],
        method,
        scan: vec![],
    })
}

fn ranged_feasible(sys: &ImpulsiveSystem, t_min: f64, t_max: f64, mode: SearchMode, opts: &CertOptions) -> Result<bool> {
    Ok(match mode {
        SearchMode::Exact { grid_n } => exact_ranged_dt(sys, t_min, t_max, grid_n, opts)?.verdict,
        SearchMode::Pwl { n } => pwl_ranged_dt(sys, t_min, t_max, n, opts)?.verdict,
        SearchMode::Lifted { grid_n } => lifted_quadratic_stability(sys, t_min, t_max, grid_n, opts)?.verdict,
    })
}

/// Largest certified `T_max ∈ range` for a fixed `t_min`.
///
/// An empty interval (infeasible already at `T_max = t_min`) is reported with
/// `threshold = t_min`, a degenerate bracket and no stable intervals.
pub fn largest_ranged_tmax(
    sys: &ImpulsiveSystem,
    t_min: f64,
    range: (f64, f64),
    tol: f64,
    mode: SearchMode,
    opts: &CertOptions,
) -> Result<SearchResult> {
    check_search(range, tol)?;
    if !(t_min > 0.0 && t_min <= range.0) {
        return Err(Error::InvalidArgument(format!("need 0 < T_min ≤ {}, got {t_min}", range.0)));
    }
    let method = format!("ranged-tmax {}", mode.label());
    if !ranged_feasible(sys, t_min, t_min, mode, opts)? {
        return Ok(SearchResult {
            threshold: t_min,
            bracket: (t_min, t_min),
            evaluations: 1,
            stable_intervals: vec![],
            method: format!("{method} (empty)"),
            scan: vec![],
        });
    }
    let (lo, hi) = range;
    if ranged_feasible(sys, t_min, hi, mode, opts)? {
        return Err(Error::NoThreshold {
            lo,
            hi,
            reason: "certificate holds over the whole range".into(),
            scan: vec![],
        });
    }
    if !ranged_feasible(sys, t_min, lo, mode, opts)? {
        return Err(Error::NoThreshold {
            lo,
            hi,
            reason: "no certificate at the lower end".into(),
            scan: vec![],
        });
    }
    let (a, b, evals) = bisect(lo, hi, tol, false, |t| ranged_feasible(sys, t_min, t, mode, opts))?;
    Ok(SearchResult {
        threshold: 0.5 * (a + b),
        bracket: (a, b),
        evaluations: evals + 3,
        stable_intervals: vec![(t_min, a)],
        method,
        scan: vec![],
    })
}

/// Smallest constant dwell-time certified by the PWL test with `n_seg` segments.
///
/// The PWL threshold is never below the exact one, so the search starts at the
/// exact threshold and steps upward until feasible.
pub fn smallest_constant_dt_pwl(sys: &ImpulsiveSystem, n_seg: usize, range: (f64, f64), tol: f64, opts: &CertOptions) -> Result<SearchResult> {
    let exact = smallest_constant_dt(sys, range, tol)?;
    let feasible = |t: f64| Ok(pwl_constant_dt(sys, t, n_seg, opts)?.verdict);
    let mut lo = exact.bracket.0;
    let mut step = (0.01 * lo).max(tol);
    let mut evals = 0;
    let mut hi = lo + step;
    loop {
        evals += 1;
        if feasible(hi)? {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi += step;
        if hi > range.1 {
            return Err(Error::NoThreshold {
                lo: range.0,
                hi: range.1,
                reason: format!("no PWL certificate with N={n_seg}"),
                scan: exact.scan,
            });
        }
    }
    let (a, b, more) = bisect(lo, hi, tol, true, feasible)?;
    Ok(SearchResult {
        threshold: 0.5 * (a + b),
        bracket: (a, b),
        evaluations: exact.evaluations + evals + more,
        stable_intervals: exact.stable_intervals,
        method: format!("constant-dt pwl(N={n_seg})"),
        scan: exact.scan,
    })
}

/// Mean-square decay rate `α = -ln ρ(M(T)) / (2T)` under constant dwell-time `t`.
pub fn decay_rate(sys: &ImpulsiveSystem, t: f64) -> Result<f64> {
    let v = constant_dt_stable(sys, t)?;
    if v.rho > 1.0 {
        return Err(Error::Unstable(format!("ρ(M({t})) = {} > 1", v.rho)));
    }
    Ok((-v.rho.ln() / (2.0 * t)).max(0.0))
}
