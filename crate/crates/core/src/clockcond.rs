//! Dwell-time stability conditions lowered to finite LMI programs.
//!
//! Exact tests are linear in a single matrix `P` because the expectation
//! `E[Φ(θ)ᵀ P Φ(θ)]` is the linear map `unvec(exp(𝒜ᵀθ) vec P)`. Clock-dependent
//! tests use piecewise-linear matrix functions; since every condition is
//! affine in `S(τ)` on a segment, checking segment endpoints is lossless.
//!
//! Two clock conventions are used. The backward form (constant and ranged
//! dwell-time) imposes `-Ṡ + AᵀS + SA + Σ EᵀSE ⪯ 0` with jump
//! `JᵀS(θ)J + E_dᵀS(θ)E_d - S(0) ≺ 0`. The forward form (minimum dwell-time)
//! imposes `Ṡ + AᵀS + SA + Σ EᵀSE ⪯ 0` with jump `JᵀS(0)J + E_dᵀS(0)E_d - S(T̄) ≺ 0`
//! and stationarity at `S(T̄)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matalg::{expm, kron, serde_rows, serde_rows_list, Mat};
use crate::model::{DwellTimeSpec, ImpulsiveSystem, SwitchedSystem};
use crate::moments::{lift, monodromy};
use crate::sdp::{solve, LmiBlock, LmiProgram, LmiTerm, LmiVerdict, SolveOptions, VarId};

/// Default number of PWL segments.
pub const DEFAULT_PWL_N: usize = 100;
/// Default number of gridded `θ` values for ranged exact and lifted tests.
pub const DEFAULT_GRID_N: usize = 201;
/// Default strictness `ε`, multiplied by [`ImpulsiveSystem::scale`].
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CertOptions {
    /// Absolute `ε`; `None` uses `DEFAULT_EPS · scale`.
    pub eps: Option<f64>,
    pub solver: SolveOptions,
}

impl CertOptions {
    pub fn eps_for(&self, sys: &ImpulsiveSystem) -> f64 {
        self.eps.unwrap_or(DEFAULT_EPS * sys.scale())
    }
}

/// Matrix function, affine between consecutive node times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlMatrixFunction {
    pub horizon: f64,
    pub times: Vec<f64>,
    #[serde(with = "serde_rows_list")]
    pub nodes: Vec<Mat>,
}

impl PwlMatrixFunction {
    /// Nodes at `i · horizon / N`, `i = 0..=N`.
    pub fn uniform(horizon: f64, nodes: Vec<Mat>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("a PWL function needs at least 2 nodes".into()));
        }
        let times = uniform_times(horizon, nodes.len() - 1);
        Self::with_times(times, nodes)
    }

    pub fn with_times(times: Vec<f64>, nodes: Vec<Mat>) -> Result<Self> {
        if times.len() != nodes.len() || times.len() < 2 {
            return Err(Error::Dimension(format!(
                "{} node times for {} nodes",
                times.len(),
                nodes.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("node times must start at 0 and increase".into()));
        }
        let shape = nodes[0].shape();
        if nodes.iter().any(|m| m.shape() != shape) {
            return Err(Error::Dimension("PWL nodes differ in shape".into()));
        }
        Ok(Self {
            horizon: *times.last().unwrap(),
            times,
            nodes,
        })
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Linear interpolation; nodes are returned exactly.
    pub fn eval(&self, tau: f64) -> Result<Mat> {
        if !(tau >= 0.0 && tau <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "clock value {tau} outside [0, {}]",
                self.horizon
            )));
        }
        let i = match self.times.iter().position(|&t| t == tau) {
            Some(i) => return Ok(self.nodes[i].clone()),
            None => self.times.partition_point(|&t| t <= tau).clamp(1, self.segments()) - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(&self.nodes[i] * (1.0 - w) + &self.nodes[i + 1] * w)
    }

    /// Inserts the midpoint of every segment.
    pub fn refine(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len() - 1);
        let mut nodes = Vec::with_capacity(times.capacity());
        for i in 0..self.segments() {
            times.push(self.times[i]);
            nodes.push(self.nodes[i].clone());
            times.push(0.5 * (self.times[i] + self.times[i + 1]));
            nodes.push((&self.nodes[i] + &self.nodes[i + 1]) * 0.5);
        }
        times.push(self.horizon);
        nodes.push(self.nodes[self.segments()].clone());
        Self {
            horizon: self.horizon,
            times,
            nodes,
        }
    }
}

fn uniform_times(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 })
        .collect()
}

/// Uniform grid of `grid_n` points on `[lo, hi]`, endpoints included.
pub fn theta_grid(lo: f64, hi: f64, grid_n: usize) -> Vec<f64> {
    if grid_n < 2 || lo == hi {
        return vec![lo];
    }
    (0..grid_n)
        .map(|i| {
            if i + 1 == grid_n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (grid_n - 1) as f64
            }
        })
        .collect()
}

/// Node times on `[0, t_max]` that contain `t_min`.
///
/// Starts from `n` uniform segments and looks for a segment count in `n..=2n`
/// that puts `t_min` on a node; otherwise `t_min` is inserted as a breakpoint.
pub fn ranged_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if t_min >= t_max {
        return uniform_times(t_max, n);
    }
    for m in n..=2 * n {
        let k = t_min * m as f64 / t_max;
        if (k - k.round()).abs() < 1e-9 && k.round() >= 1.0 {
            return uniform_times(t_max, m);
        }
    }
    let mut times = uniform_times(t_max, n);
    let i = times.partition_point(|&t| t < t_min);
    let too_close = |t: f64| (t - t_min).abs() < 1e-12 * t_max;
    if !too_close(times[i]) && !too_close(times[i - 1]) {
        times.insert(i, t_min);
    }
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Exact,
    Pwl,
    LiftedQuadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CertWitness {
    Matrix {
        #[serde(with = "serde_rows")]
        p: Mat,
    },
    Pwl {
        s: PwlMatrixFunction,
    },
    PerMode {
        r: Vec<PwlMatrixFunction>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub kind: CertificateKind,
    pub dwell: DwellTimeSpec,
    pub verdict: bool,
    pub margin: f64,
    pub witness: CertWitness,
    pub residuals: Vec<f64>,
    pub eps: f64,
    /// Only finitely many `θ` were checked.
    pub gridded: bool,
    pub blocks: usize,
}

/// `AᵀS + SA + Σ E_iᵀ S E_i`.
pub fn lyapunov_terms(a: &Mat, e_c: &[Mat], s: VarId) -> Vec<LmiTerm> {
    let n = a.nrows();
    let mut terms = vec![LmiTerm::hermitian(s, a.transpose(), Mat::identity(n, n))];
    for e in e_c {
        terms.push(LmiTerm::sandwich(s, e.transpose(), e.clone()));
    }
    terms
}

/// `JᵀS_post J + E_dᵀ S_post E_d - S_pre + εI`.
pub fn jump_block(label: impl Into<String>, j: &Mat, e_d: &Mat, post: VarId, pre: VarId, eps: f64) -> LmiBlock {
    let n = j.nrows();
    LmiBlock::new(label, n)
        .with_constant(Mat::identity(n, n) * eps)
        .term(LmiTerm::sandwich(post, j.transpose(), j.clone()))
        .term(LmiTerm::sandwich(post, e_d.transpose(), e_d.clone()))
        .term(LmiTerm::sandwich(pre, -Mat::identity(n, n), Mat::identity(n, n)))
}

/// `-S + εI ⪯ 0`.
pub fn positivity_block(label: impl Into<String>, s: VarId, n: usize, eps: f64) -> LmiBlock {
    LmiBlock::new(label, n)
        .with_constant(Mat::identity(n, n) * eps)
        .term(LmiTerm::sandwich(s, -Mat::identity(n, n), Mat::identity(n, n)))
}

/// `unvec(𝒥ᵀ exp(𝒜ᵀθ) vec P) - P + εI`: the exact jump condition at dwell `θ`.
pub fn exact_jump_block(sys: &ImpulsiveSystem, p: VarId, theta: f64, eps: f64) -> Result<LmiBlock> {
    let n = sys.n();
    let lp = lift(sys);
    let map = lp.jump.transpose() * expm(&(lp.gen.transpose() * theta))?;
    Ok(LmiBlock::new(format!("jump@{theta}"), n)
        .with_constant(Mat::identity(n, n) * eps)
        .term(LmiTerm::mapped(p, map, Mat::identity(n, n), Mat::identity(n, n)))
        .term(LmiTerm::sandwich(p, -Mat::identity(n, n), Mat::identity(n, n))))
}

/// Flow blocks for PWL nodes `vars` at `times`, two per segment.
///
/// `forward` selects `+Ṡ` (minimum dwell-time form) over `-Ṡ`.
pub fn pwl_flow_blocks(
    prog: &mut LmiProgram,
    a: &Mat,
    e_c: &[Mat],
    vars: &[VarId],
    times: &[f64],
    forward: bool,
    label: &str,
) {
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let sign = if forward { 1.0 } else { -1.0 };
    for i in 0..vars.len() - 1 {
        let h = times[i + 1] - times[i];
        for (end, v) in [("l", vars[i]), ("r", vars[i + 1])] {
            let mut b = LmiBlock::new(format!("{label}flow[{i}]{end}"), n)
                .term(LmiTerm::sandwich(vars[i + 1], &id * (sign / h), id.clone()))
                .term(LmiTerm::sandwich(vars[i], &id * (-sign / h), id.clone()));
            for t in lyapunov_terms(a, e_c, v) {
                b.push(t);
            }
            prog.push(b);
        }
    }
}

fn check_dwell(t: f64, what: &str) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive and finite, got {t}")))
    }
}

fn check_segments(n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("PWL segment count must be at least 1".into()))
    }
}

fn check_range(t_min: f64, t_max: f64) -> Result<()> {
    check_dwell(t_min, "T_min")?;
    if t_max >= t_min && t_max.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("need T_min ≤ T_max, got [{t_min}, {t_max}]")))
    }
}

fn matrix_cert(
    kind: CertificateKind,
    dwell: DwellTimeSpec,
    v: LmiVerdict,
    p: VarId,
    eps: f64,
    gridded: bool,
) -> StabilityCertificate {
    StabilityCertificate {
        kind,
        dwell,
        verdict: v.feasible,
        margin: v.margin,
        witness: CertWitness::Matrix { p: v.witness[p].clone() },
        blocks: v.residuals.len(),
        residuals: v.residuals,
        eps,
        gridded,
    }
}

fn pwl_cert(dwell: DwellTimeSpec, v: LmiVerdict, vars: &[VarId], times: Vec<f64>, eps: f64) -> Result<StabilityCertificate> {
    let nodes = vars.iter().map(|&id| v.witness[id].clone()).collect();
    Ok(StabilityCertificate {
        kind: CertificateKind::Pwl,
        dwell,
        verdict: v.feasible,
        margin: v.margin,
        witness: CertWitness::Pwl {
            s: PwlMatrixFunction::with_times(times, nodes)?,
        },
        blocks: v.residuals.len(),
        residuals: v.residuals,
        eps,
        gridded: false,
    })
}

/// Exact test for constant dwell-time `t`.
pub fn exact_constant_dt(sys: &ImpulsiveSystem, t: f64, opts: &CertOptions) -> Result<StabilityCertificate> {
    check_dwell(t, "dwell-time")?;
    let eps = opts.eps_for(sys);
    let mut prog = LmiProgram::new();
    let p = prog.symmetric("P", sys.n());
    prog.set_anchor(p);
    prog.push(exact_jump_block(sys, p, t, eps)?);
    prog.push(positivity_block("P>0", p, sys.n(), eps));
    let v = solve(&prog, &opts.solver)?;
    Ok(matrix_cert(CertificateKind::Exact, DwellTimeSpec::Constant(t), v, p, eps, false))
}

/// Backward-form PWL program for constant dwell-time. Node `i` is variable `i`.
pub fn pwl_constant_dt_program(sys: &ImpulsiveSystem, t: f64, n_seg: usize, eps: f64) -> Result<(LmiProgram, Vec<VarId>, Vec<f64>)> {
    check_dwell(t, "dwell-time")?;
    check_segments(n_seg)?;
    let n = sys.n();
    let times = uniform_times(t, n_seg);
    let mut prog = LmiProgram::new();
    let vars: Vec<VarId> = (0..=n_seg).map(|i| prog.symmetric(format!("S{i}"), n)).collect();
    prog.set_anchor(vars[0]);
    pwl_flow_blocks(&mut prog, &sys.a, &sys.e_c, &vars, &times, false, "");
    prog.push(jump_block("jump", &sys.j, &sys.e_d, vars[n_seg], vars[0], eps));
    prog.push(positivity_block("S0>0", vars[0], n, eps));
    Ok((prog, vars, times))
}

/// PWL clock-dependent test for constant dwell-time `t` with `n_seg` segments.
pub fn pwl_constant_dt(sys: &ImpulsiveSystem, t: f64, n_seg: usize, opts: &CertOptions) -> Result<StabilityCertificate> {
    let eps = opts.eps_for(sys);
    let (prog, vars, times) = pwl_constant_dt_program(sys, t, n_seg, eps)?;
    let v = solve(&prog, &opts.solver)?;
    pwl_cert(DwellTimeSpec::Constant(t), v, &vars, times, eps)
}

/// Exact test for ranged dwell-time, checked on `grid_n` values of `θ`.
pub fn exact_ranged_dt(
    sys: &ImpulsiveSystem,
    t_min: f64,
    t_max: f64,
    grid_n: usize,
    opts: &CertOptions,
) -> Result<StabilityCertificate> {
    check_range(t_min, t_max)?;
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid_n must be at least 2".into()));
    }
    let eps = opts.eps_for(sys);
    let mut prog = LmiProgram::new();
    let p = prog.symmetric("P", sys.n());
    prog.set_anchor(p);
    for theta in theta_grid(t_min, t_max, grid_n) {
        prog.push(exact_jump_block(sys, p, theta, eps)?);
    }
    prog.push(positivity_block("P>0", p, sys.n(), eps));
    let v = solve(&prog, &opts.solver)?;
    Ok(matrix_cert(
        CertificateKind::Exact,
        DwellTimeSpec::Ranged { t_min, t_max },
        v,
        p,
        eps,
        t_min < t_max,
    ))
}

/// Backward-form PWL program for ranged dwell-time.
pub fn pwl_ranged_dt_program(
    sys: &ImpulsiveSystem,
    t_min: f64,
    t_max: f64,
    n_seg: usize,
    eps: f64,
) -> Result<(LmiProgram, Vec<VarId>, Vec<f64>)> {
    check_range(t_min, t_max)?;
    check_segments(n_seg)?;
    let n = sys.n();
    let times = ranged_grid(t_min, t_max, n_seg);
    let mut prog = LmiProgram::new();
    let vars: Vec<VarId> = (0..times.len()).map(|i| prog.symmetric(format!("S{i}"), n)).collect();
    prog.set_anchor(vars[0]);
    pwl_flow_blocks(&mut prog, &sys.a, &sys.e_c, &vars, &times, false, "");
    let tol = 1e-12 * t_max;
    for (i, &theta) in times.iter().enumerate() {
        if theta >= t_min - tol {
            prog.push(jump_block(format!("jump[{i}]"), &sys.j, &sys.e_d, vars[i], vars[0], eps));
        }
    }
    prog.push(positivity_block("S0>0", vars[0], n, eps));
    Ok((prog, vars, times))
}

/// PWL test for ranged dwell-time; jumps are imposed at every node in `[t_min, t_max]`.
pub fn pwl_ranged_dt(
    sys: &ImpulsiveSystem,
    t_min: f64,
    t_max: f64,
    n_seg: usize,
    opts: &CertOptions,
) -> Result<StabilityCertificate> {
    let eps = opts.eps_for(sys);
    let (prog, vars, times) = pwl_ranged_dt_program(sys, t_min, t_max, n_seg, eps)?;
    let v = solve(&prog, &opts.solver)?;
    pwl_cert(DwellTimeSpec::Ranged { t_min, t_max }, v, &vars, times, eps)
}

/// Exact test for minimum dwell-time `t`.
pub fn exact_minimum_dt(sys: &ImpulsiveSystem, t: f64, opts: &CertOptions) -> Result<StabilityCertificate> {
    check_dwell(t, "dwell-time")?;
    let n = sys.n();
    let eps = opts.eps_for(sys);
    let mut prog = LmiProgram::new();
    let p = prog.symmetric("P", n);
    prog.set_anchor(p);
    prog.push(exact_jump_block(sys, p, t, eps)?);
    let mut lyap = LmiBlock::new("lyapunov", n).with_constant(Mat::identity(n, n) * eps);
    for term in lyapunov_terms(&sys.a, &sys.e_c, p) {
        lyap.push(term);
    }
    prog.push(lyap);
    prog.push(positivity_block("P>0", p, n, eps));
    let v = solve(&prog, &opts.solver)?;
    Ok(matrix_cert(CertificateKind::Exact, DwellTimeSpec::Minimum(t), v, p, eps, false))
}

/// Forward-form PWL program for minimum dwell-time.
pub fn pwl_minimum_dt_program(sys: &ImpulsiveSystem, t: f64, n_seg: usize, eps: f64) -> Result<(LmiProgram, Vec<VarId>, Vec<f64>)> {
    check_dwell(t, "dwell-time")?;
    check_segments(n_seg)?;
    let n = sys.n();
    let times = uniform_times(t, n_seg);
    let mut prog = LmiProgram::new();
    let vars: Vec<VarId> = (0..=n_seg).map(|i| prog.symmetric(format!("S{i}"), n)).collect();
    let last = vars[n_seg];
    prog.set_anchor(last);
    pwl_flow_blocks(&mut prog, &sys.a, &sys.e_c, &vars, &times, true, "");
    let mut stat = LmiBlock::new("stationary", n).with_constant(Mat::identity(n, n) * eps);
    for term in lyapunov_terms(&sys.a, &sys.e_c, last) {
        stat.push(term);
    }
    prog.push(stat);
    prog.push(jump_block("jump", &sys.j, &sys.e_d, vars[0], last, eps));
    prog.push(positivity_block("S(T)>0", last, n, eps));
    Ok((prog, vars, times))
}

/// PWL clock-dependent test for minimum dwell-time `t`.
pub fn pwl_minimum_dt(sys: &ImpulsiveSystem, t: f64, n_seg: usize, opts: &CertOptions) -> Result<StabilityCertificate> {
    let eps = opts.eps_for(sys);
    let (prog, vars, times) = pwl_minimum_dt_program(sys, t, n_seg, eps)?;
    let v = solve(&prog, &opts.solver)?;
    pwl_cert(DwellTimeSpec::Minimum(t), v, &vars, times, eps)
}

/// Per-mode minimum dwell-time test for a switched system.
///
/// Each mode carries its own PWL function `R_i` on `[0, t]` (forward form);
/// a switch from mode `j` into mode `i` requires `R_i(0) - R_j(t) + εI ⪯ 0`.
pub fn switched_min_dt(sw: &SwitchedSystem, t: f64, n_seg: usize, opts: &CertOptions) -> Result<StabilityCertificate> {
    sw.validate().map_err(Error::InvalidSystem)?;
    check_dwell(t, "dwell-time")?;
    check_segments(n_seg)?;
    let n = sw.n();
    let scale = sw
        .modes
        .iter()
        .flat_map(|m| [m.g.norm(), m.h.norm()])
        .fold(1.0, f64::max);
    let eps = opts.eps.unwrap_or(DEFAULT_EPS * scale);
    let times = uniform_times(t, n_seg);
    let mut prog = LmiProgram::new();
    let mut all = Vec::with_capacity(sw.modes.len());
    for (i, m) in sw.modes.iter().enumerate() {
        let vars: Vec<VarId> = (0..=n_seg).map(|k| prog.symmetric(format!("R{i}_{k}"), n)).collect();
        let h = std::slice::from_ref(&m.h);
        pwl_flow_blocks(&mut prog, &m.g, h, &vars, &times, true, &format!("mode{i}:"));
        let mut stat = LmiBlock::new(format!("mode{i}:stationary"), n).with_constant(Mat::identity(n, n) * eps);
        for term in lyapunov_terms(&m.g, h, vars[n_seg]) {
            stat.push(term);
        }
        prog.push(stat);
        prog.push(positivity_block(format!("R{i}(T)>0"), vars[n_seg], n, eps));
        all.push(vars);
    }
    prog.set_anchor(all[0][n_seg]);
    let id = Mat::identity(n, n);
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i != j {
                prog.push(
                    LmiBlock::new(format!("switch {j}->{i}"), n)
                        .with_constant(&id * eps)
                        .term(LmiTerm::sandwich(all[i][0], id.clone(), id.clone()))
                        .term(LmiTerm::sandwich(all[j][n_seg], -&id, id.clone())),
                );
            }
        }
    }
    let v = solve(&prog, &opts.solver)?;
    let r = all
        .iter()
        .map(|vars| PwlMatrixFunction::with_times(times.clone(), vars.iter().map(|&id| v.witness[id].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityCertificate {
        kind: CertificateKind::Pwl,
        dwell: DwellTimeSpec::Minimum(t),
        verdict: v.feasible,
        margin: v.margin,
        witness: CertWitness::PerMode { r },
        blocks: v.residuals.len(),
        residuals: v.residuals,
        eps,
        gridded: false,
    })
}

/// Gridded quadratic stability of the monodromy family: one `P ∈ S^{n²}` with
/// `M(θ)ᵀ P M(θ) - P ≺ 0` for every gridded `θ ∈ [t_min, t_max]`.
pub fn lifted_quadratic_stability(
    sys: &ImpulsiveSystem,
    t_min: f64,
    t_max: f64,
    grid_n: usize,
    opts: &CertOptions,
) -> Result<StabilityCertificate> {
    check_range(t_min, t_max)?;
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid_n must be at least 2".into()));
    }
    let n2 = sys.n() * sys.n();
    let eps = opts.eps_for(sys);
    let id = Mat::identity(n2, n2);
    let mut prog = LmiProgram::new();
    let p = prog.symmetric("P", n2);
    prog.set_anchor(p);
    for theta in theta_grid(t_min, t_max, grid_n) {
        let m = monodromy(sys, theta)?;
        prog.push(
            LmiBlock::new(format!("stein@{theta}"), n2)
                .term(LmiTerm::sandwich(p, m.transpose(), m))
                .term(LmiTerm::sandwich(p, -&id, id.clone())),
        );
    }
    prog.push(positivity_block("P>0", p, n2, eps));
    let v = solve(&prog, &opts.solver)?;
    Ok(matrix_cert(
        CertificateKind::LiftedQuadratic,
        DwellTimeSpec::Ranged { t_min, t_max },
        v,
        p,
        eps,
        t_min < t_max,
    ))
}

/// Kronecker form `Mᵀ ⊗ Mᵀ` of `P ↦ MᵀPM`, for callers composing maps.
pub fn congruence_map(m: &Mat) -> Mat {
    kron(&m.transpose(), &m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{constant_dt_example, ranged_dt_example};
    use crate::matalg::{from_rows, min_eig_sym, spectral_radius, symmetrize};
    use crate::model::Mode;
    use crate::sdp::{assemble, Witness};

    fn opts() -> CertOptions {
        CertOptions::default()
    }

    fn scalar(a: f64, e: f64, j: f64, ed: f64) -> ImpulsiveSystem {
        let s = |x: f64| Mat::from_element(1, 1, x);
        ImpulsiveSystem::autonomous(s(a), vec![s(e)], s(j), s(ed))
    }

    #[test]
    fn pwl_eval_interpolates() {
        let nodes = vec![Mat::from_element(1, 1, 0.0), Mat::from_element(1, 1, 2.0), Mat::from_element(1, 1, 1.0)];
        let f = PwlMatrixFunction::uniform(2.0, nodes.clone()).unwrap();
        assert_eq!(f.eval(1.0).unwrap(), nodes[1]);
        assert_eq!(f.eval(2.0).unwrap(), nodes[2]);
        assert!((f.eval(0.5).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((f.eval(1.5).unwrap()[(0, 0)] - 1.5).abs() < 1e-15);
        assert!(f.eval(2.5).is_err());
        let r = f.refine();
        assert_eq!(r.segments(), 4);
        for tau in [0.0, 0.3, 0.5, 1.2, 1.75, 2.0] {
            assert!((r.eval(tau).unwrap() - f.eval(tau).unwrap()).amax() < 1e-15);
        }
    }

    #[test]
    fn ranged_grid_contains_both_ends() {
        for (lo, hi, n) in [(0.01, 0.46, 100), (0.01, 0.4573, 100), (0.3, 0.3, 10), (0.2, 1.0, 7)] {
            let g = ranged_grid(lo, hi, n);
            assert_eq!(*g.last().unwrap(), hi);
            assert!(g.iter().any(|&t| (t - lo).abs() < 1e-12), "{lo} {hi} {g:?}");
            assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
        assert_eq!(ranged_grid(0.01, 0.46, 100).len(), 139);
    }

    #[test]
    fn exact_constant_dt_reference_example() {
        let sys = constant_dt_example(0.0, 0.0);
        assert!(exact_constant_dt(&sys, 1.2, &opts()).unwrap().verdict);
        assert!(!exact_constant_dt(&sys, 1.1, &opts()).unwrap().verdict);
    }

    #[test]
    fn exact_constant_dt_scalar_closed_form() {
        for (a, e, j, ed, t) in [(-1.0f64, 0.5, 1.5, 0.3, 0.5), (-1.0, 0.5, 1.5, 0.3, 1.0), (0.2, 0.1, 0.5, 0.2, 1.0), (0.2, 0.1, 0.5, 0.2, 3.0)] {
            let expected = ((2.0 * a + e * e) * t).exp() * (j * j + ed * ed) < 1.0;
            let c = exact_constant_dt(&scalar(a, e, j, ed), t, &opts()).unwrap();
            assert_eq!(c.verdict, expected, "{a} {e} {j} {ed} {t}");
        }
    }

    #[test]
    fn pwl_constant_dt_reference_example() {
        let sys = constant_dt_example(0.0, 0.0);
        // The endpoint-checked PWL conditions carry a first-order bias (about 0.014 at N = 100).
        let c = pwl_constant_dt(&sys, 1.17, 100, &opts()).unwrap();
        assert!(c.verdict);
        assert!(c.residuals.iter().all(|r| *r > 0.0));
        assert!(!pwl_constant_dt(&sys, 1.12, 100, &opts()).unwrap().verdict);
    }

    #[test]
    fn pwl_refinement_keeps_witness_feasible() {
        let sys = constant_dt_example(0.3, 0.6);
        let c = pwl_constant_dt(&sys, 1.4, 10, &opts()).unwrap();
        assert!(c.verdict);
        let CertWitness::Pwl { s } = &c.witness else { panic!() };
        let fine = s.refine();
        let (prog, _, _) = pwl_constant_dt_program(&sys, 1.4, 20, c.eps).unwrap();
        let w = Witness(fine.nodes.clone());
        for b in &prog.blocks {
            let r = min_eig_sym(&symmetrize(&-assemble(b, &w).unwrap())).unwrap();
            assert!(r > 0.0, "block {} residual {r}", b.label);
        }
        assert!(pwl_constant_dt(&sys, 1.4, 20, &opts()).unwrap().verdict);
    }

    #[test]
    fn deterministic_pwl_blocks_have_no_diffusion_terms() {
        let (prog, _, _) = pwl_constant_dt_program(&constant_dt_example(0.0, 0.0), 1.0, 3, 1e-6).unwrap();
        let flow = &prog.blocks[0];
        // derivative pair + hermitian drift + zero-matrix diffusion sandwich
        assert_eq!(flow.terms.len(), 4);
        assert_eq!(flow.terms[3].left.amax(), 0.0);
    }

    #[test]
    fn exact_ranged_reference_example() {
        let sys = ranged_dt_example(0.0, 0.0);
        let c = exact_ranged_dt(&sys, 0.01, 0.46, 201, &opts()).unwrap();
        assert!(c.verdict && c.gridded);
        assert!(!exact_ranged_dt(&sys, 0.01, 0.50, 201, &opts()).unwrap().verdict);
    }

    #[test]
    fn degenerate_range_matches_constant() {
        let sys = constant_dt_example(0.3, 0.6);
        for t in [1.1, 1.3] {
            let a = exact_ranged_dt(&sys, t, t, 5, &opts()).unwrap();
            let b = exact_constant_dt(&sys, t, &opts()).unwrap();
            assert_eq!(a.verdict, b.verdict);
            assert!(!a.gridded);
        }
    }

    #[test]
    fn pwl_ranged_reference_example() {
        let sys = ranged_dt_example(0.0, 0.0);
        assert!(pwl_ranged_dt(&sys, 0.01, 0.45, 100, &opts()).unwrap().verdict);
        assert!(!pwl_ranged_dt(&sys, 0.01, 0.50, 100, &opts()).unwrap().verdict);
    }

    #[test]
    fn exact_minimum_dt_cases() {
        let sys = constant_dt_example(0.0, 0.0);
        assert!(exact_minimum_dt(&sys, 1.15, &opts()).unwrap().verdict);
        let unstable_flow = ranged_dt_example(0.0, 0.0);
        for t in [0.1, 1.0, 10.0] {
            assert!(!exact_minimum_dt(&unstable_flow, t, &opts()).unwrap().verdict);
        }
    }

    #[test]
    fn exact_minimum_dt_scalar_closed_form() {
        for (a, e, j, ed, t) in [(-1.0f64, 0.5, 1.5, 0.3, 1.0), (-1.0, 0.5, 1.5, 0.3, 0.3), (0.1, 0.1, 0.3, 0.0, 1.0)] {
            let g = 2.0 * a + e * e;
            let expected = g < 0.0 && (g * t).exp() * (j * j + ed * ed) < 1.0;
            assert_eq!(exact_minimum_dt(&scalar(a, e, j, ed), t, &opts()).unwrap().verdict, expected);
        }
    }

    #[test]
    fn pwl_minimum_dt_reference_example() {
        let sys = constant_dt_example(0.6, 1.2);
        assert!(pwl_minimum_dt(&sys, 1.50, 100, &opts()).unwrap().verdict);
        assert!(!pwl_minimum_dt(&sys, 1.40, 100, &opts()).unwrap().verdict);
    }

    #[test]
    fn pwl_minimum_dt_coarse_implies_fine() {
        let sys = constant_dt_example(0.0, 0.0);
        let coarse = pwl_minimum_dt(&sys, 2.0, 1, &opts()).unwrap();
        if coarse.verdict {
            assert!(pwl_minimum_dt(&sys, 2.0, 10, &opts()).unwrap().verdict);
        }
        assert!(pwl_minimum_dt(&sys, 2.0, 10, &opts()).unwrap().verdict);
    }

    #[test]
    fn switched_trivial_cases() {
        let s = |x: f64| Mat::from_element(1, 1, x);
        let sw = SwitchedSystem {
            modes: vec![Mode { g: s(-1.0), h: s(0.0) }, Mode { g: s(-1.0), h: s(0.0) }],
        };
        for t in [0.05, 1.0] {
            assert!(switched_min_dt(&sw, t, 4, &opts()).unwrap().verdict);
        }
        let g = from_rows(&[vec![-1.0, 0.5], vec![0.0, -2.0]]).unwrap();
        let h = Mat::identity(2, 2) * 0.3;
        let sw = SwitchedSystem {
            modes: vec![Mode { g: g.clone(), h: h.clone() }, Mode { g, h }],
        };
        assert!(switched_min_dt(&sw, 0.1, 2, &opts()).unwrap().verdict);
    }

    #[test]
    fn lifted_quadratic_reference_and_stein() {
        let sys = ranged_dt_example(0.0, 0.0);
        assert!(lifted_quadratic_stability(&sys, 0.01, 0.4620, 201, &opts()).unwrap().verdict);
        let c = constant_dt_example(0.3, 0.6);
        for t in [1.1, 1.3] {
            let rho = spectral_radius(&monodromy(&c, t).unwrap()).unwrap();
            assert_eq!(lifted_quadratic_stability(&c, t, t, 2, &opts()).unwrap().verdict, rho < 1.0);
        }
    }

    #[test]
    fn certificate_round_trips_through_json() {
        let c = pwl_constant_dt(&constant_dt_example(0.0, 0.0), 1.2, 4, &opts()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: StabilityCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back.witness, c.witness);
        assert!(text.contains("\"kind\":\"pwl\""));
    }

    #[test]
    fn congruence_map_matches_sandwich() {
        let m = from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap();
        let p = from_rows(&[vec![2.0, 0.1], vec![0.1, 1.0]]).unwrap();
        let lhs = crate::matalg::unvec(&(congruence_map(&m) * crate::matalg::vec(&p)), 2, 2).unwrap();
        assert!((lhs - m.transpose() * &p * &m).amax() < 1e-14);
    }
}
