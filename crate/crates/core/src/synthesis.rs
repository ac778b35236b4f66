//! Clock-dependent state-feedback synthesis.
//!
//! The analysis conditions become convex in `S̃ = S⁻¹`, `U_c = K_c S̃` and
//! `U_d = K_d S̃(·)` after a congruence and a Schur complement. Every noise
//! channel gets its own row because `W_1, W_2` and `ν_1, ν_2` are independent.
//!
//! Ranged dwell-time (backward clock):
//! `[[dS̃ + He[AS̃ + B¹U_c], ⋆, ⋆], [E_c S̃, -S̃, 0], [B² U_c, 0, -S̃]] ⪯ 0`,
//! jump `[[-S̃(0) + εI, ⋆, ⋆, ⋆], [JS̃(0) + B_d¹U_d, -S̃(θ), ⋆, ⋆], [E_d S̃(0), 0, -S̃(θ), ⋆], [B_d²U_d, 0, 0, -S̃(θ)]] ⪯ 0`,
//! gains `K_c = U_c S̃⁻¹`, `K_d = U_d S̃(0)⁻¹`.
//!
//! Minimum dwell-time (forward clock): the flow uses `-dS̃`, the stationarity
//! block drops the derivative at `T̄`, and the jump is the congruence of
//! `(J + B_d¹K_d)ᵀS(0)(J + B_d¹K_d) + … - S(T̄)` by `S̃(T̄)`, hence
//! `K_d = U_d S̃(T̄)⁻¹`.

use serde::{Deserialize, Serialize};

use crate::clockcond::{ranged_grid, theta_grid, CertOptions, PwlMatrixFunction};
use crate::error::{Error, Result};
use crate::matalg::{serde_rows, serde_rows_list, spectral_radius, symmetrize, Mat};
use crate::model::{sampled_data_to_impulsive, validate, ImpulsiveSystem, SampledDataSystem};
use crate::moments::{closed_loop_monodromy, default_steps, ClockGains};
use crate::sdp::{selector, solve, LmiBlock, LmiProgram, LmiTerm, VarId, Witness};

/// Largest admissible condition number of `S̃(τ)` during gain recovery.
pub const MAX_GAIN_CONDITION: f64 = 1e12;

/// `K_c(τ) = U_c(τ) S̃(τ)⁻¹` (clamped at the horizon) and a constant `K_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    pub s_tilde: PwlMatrixFunction,
    pub u_c: Option<PwlMatrixFunction>,
    #[serde(with = "serde_rows")]
    pub k_d: Mat,
    pub m_c: usize,
    /// `K_c` at the node times, for reporting.
    #[serde(with = "serde_rows_list")]
    pub k_c_nodes: Vec<Mat>,
}

impl ControllerGains {
    pub fn new(s_tilde: PwlMatrixFunction, u_c: Option<PwlMatrixFunction>, k_d: Mat, m_c: usize) -> Result<Self> {
        let mut g = Self {
            s_tilde,
            u_c,
            k_d,
            m_c,
            k_c_nodes: Vec::new(),
        };
        g.k_c_nodes = g
            .s_tilde
            .times
            .iter()
            .map(|&t| eval_gain(&g, t))
            .collect::<Result<_>>()?;
        Ok(g)
    }

    pub fn horizon(&self) -> f64 {
        self.s_tilde.horizon
    }
}

impl ClockGains for ControllerGains {
    fn k_c(&self, tau: f64) -> Result<Mat> {
        eval_gain(self, tau)
    }
    fn k_d(&self) -> &Mat {
        &self.k_d
    }
}

/// Solves `X S = U` for symmetric positive definite `S`, i.e. `X = U S⁻¹`.
fn right_divide(u: &Mat, s: &Mat, tau: f64) -> Result<Mat> {
    let s = symmetrize(s);
    let ev = s.clone().symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_GAIN_CONDITION) {
        return Err(Error::SingularGain { tau, condition });
    }
    let chol = nalgebra::Cholesky::new(s).ok_or(Error::SingularGain { tau, condition })?;
    Ok(chol.solve(&u.transpose()).transpose())
}

/// `K_c(τ)` with `τ` clamped to the horizon; zero-width when `m_c = 0`.
pub fn eval_gain(gains: &ControllerGains, tau: f64) -> Result<Mat> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("clock value must be nonnegative, got {tau}")));
    }
    let n = gains.s_tilde.nodes[0].nrows();
    let Some(u_c) = &gains.u_c else {
        return Ok(Mat::zeros(gains.m_c, n));
    };
    let tau = tau.min(gains.horizon());
    right_divide(&u_c.eval(tau)?, &gains.s_tilde.eval(tau)?, tau)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub gains: ControllerGains,
    pub program_margin: f64,
    /// `(θ, ρ)` of the closed-loop monodromy at each checked dwell-time.
    pub closed_loop_rho: Vec<(f64, f64)>,
    pub verified: bool,
}

impl SynthesisResult {
    pub fn max_rho(&self) -> f64 {
        self.closed_loop_rho.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SynthOptions {
    pub cert: CertOptions,
    /// Dwell-times for closed-loop re-verification; `None` uses the per-method default.
    pub verify_at: Option<Vec<f64>>,
    /// RK4 steps per closed-loop flow; `None` uses [`default_steps`].
    pub rk_steps: Option<usize>,
}

/// Places `n x n` pieces in a `k x k` block layout.
struct Layout {
    k: usize,
    n: usize,
}

impl Layout {
    fn sel(&self, r: usize) -> Mat {
        selector(self.k, self.n, r)
    }

    /// `F X G` at `(r, c)` and, for `r ≠ c`, its transpose at `(c, r)`.
    fn place(&self, r: usize, c: usize, v: VarId, f: &Mat, g: &Mat) -> LmiTerm {
        let left = self.sel(r) * f;
        let right = g * self.sel(c).transpose();
        if r == c {
            LmiTerm::sandwich(v, left, right)
        } else {
            LmiTerm::hermitian(v, left, right)
        }
    }

    /// `F X G + (F X G)ᵀ` at `(r, r)`.
    fn he(&self, r: usize, v: VarId, f: &Mat, g: &Mat) -> LmiTerm {
        LmiTerm::hermitian(v, self.sel(r) * f, g * self.sel(r).transpose())
    }

    fn constant_at(&self, r: usize, m: &Mat) -> Mat {
        self.sel(r) * m * self.sel(r).transpose()
    }
}

/// Noise rows that actually contribute.
fn active_channels(sys: &ImpulsiveSystem) -> Vec<&Mat> {
    sys.e_c.iter().filter(|e| e.amax() > 0.0).collect()
}

/// Flow condition at one clock value.
///
/// `deriv = (next, prev, c)` adds `c (S̃_next - S̃_prev)` to the leading block.
fn flow_block(
    sys: &ImpulsiveSystem,
    label: String,
    s: VarId,
    u: Option<VarId>,
    deriv: Option<(VarId, VarId, f64)>,
    eps: f64,
) -> LmiBlock {
    let n = sys.n();
    let id = Mat::identity(n, n);
    let channels = active_channels(sys);
    let b2_row = u.is_some() && sys.b_c2.amax() > 0.0;
    let lay = Layout {
        k: 1 + channels.len() + usize::from(b2_row),
        n,
    };
    let mut b = LmiBlock::new(label, lay.k * n).with_constant(Mat::identity(lay.k * n, lay.k * n) * eps);
    if let Some((next, prev, c)) = deriv {
        b.push(lay.place(0, 0, next, &(&id * c), &id));
        b.push(lay.place(0, 0, prev, &(&id * -c), &id));
    }
    b.push(lay.he(0, s, &sys.a, &id));
    if let Some(u) = u {
        b.push(lay.he(0, u, &sys.b_c1, &id));
    }
    let mut row = 1;
    for e in channels {
        b.push(lay.place(row, 0, s, e, &id));
        b.push(lay.place(row, row, s, &-&id, &id));
        row += 1;
    }
    if b2_row {
        b.push(lay.place(row, 0, u.unwrap(), &sys.b_c2, &id));
        b.push(lay.place(row, row, s, &-&id, &id));
    }
    b
}

/// Jump condition; `pre` is the matrix the discrete gain is recovered from.
fn sf_jump_block(sys: &ImpulsiveSystem, label: String, pre: VarId, post: VarId, u_d: Option<VarId>, eps: f64) -> LmiBlock {
    let n = sys.n();
    let id = Mat::identity(n, n);
    let ed_row = sys.e_d.amax() > 0.0;
    let bd2_row = u_d.is_some() && sys.b_d2.amax() > 0.0;
    let lay = Layout {
        k: 2 + usize::from(ed_row) + usize::from(bd2_row),
        n,
    };
    let mut b = LmiBlock::new(label, lay.k * n).with_constant(lay.constant_at(0, &(&id * eps)));
    b.push(lay.place(0, 0, pre, &-&id, &id));
    b.push(lay.place(1, 0, pre, &sys.j, &id));
    if let Some(u) = u_d {
        b.push(lay.place(1, 0, u, &sys.b_d1, &id));
    }
    b.push(lay.place(1, 1, post, &-&id, &id));
    let mut row = 2;
    if ed_row {
        b.push(lay.place(row, 0, pre, &sys.e_d, &id));
        b.push(lay.place(row, row, post, &-&id, &id));
        row += 1;
    }
    if bd2_row {
        b.push(lay.place(row, 0, u_d.unwrap(), &sys.b_d2, &id));
        b.push(lay.place(row, row, post, &-&id, &id));
    }
    b
}

fn positivity(label: String, s: VarId, n: usize, eps: f64) -> LmiBlock {
    LmiBlock::new(label, n)
        .with_constant(Mat::identity(n, n) * eps)
        .term(LmiTerm::sandwich(s, -Mat::identity(n, n), Mat::identity(n, n)))
}

/// Program variables of a synthesis problem.
pub struct SynthesisProgram {
    pub program: LmiProgram,
    pub times: Vec<f64>,
    pub s: Vec<VarId>,
    pub u_c: Option<Vec<VarId>>,
    pub u_d: Option<VarId>,
}

impl SynthesisProgram {
    fn pwl(&self, w: &Witness, vars: &[VarId]) -> Result<PwlMatrixFunction> {
        PwlMatrixFunction::with_times(self.times.clone(), vars.iter().map(|&v| w[v].clone()).collect())
    }
}

fn check_inputs(sys: &ImpulsiveSystem) -> Result<()> {
    validate(sys).map_err(Error::InvalidSystem)?;
    if sys.m_c() == 0 && sys.m_d() == 0 {
        return Err(Error::InvalidArgument("synthesis needs at least one input (m_c ≥ 1 or m_d ≥ 1)".into()));
    }
    Ok(())
}

fn new_vars(prog: &mut LmiProgram, sys: &ImpulsiveSystem, nodes: usize) -> (Vec<VarId>, Option<Vec<VarId>>, Option<VarId>) {
    let n = sys.n();
    let s: Vec<VarId> = (0..nodes).map(|i| prog.symmetric(format!("St{i}"), n)).collect();
    let u_c = (sys.m_c() > 0).then(|| (0..nodes).map(|i| prog.rectangular(format!("Uc{i}"), sys.m_c(), n)).collect());
    let u_d = (sys.m_d() > 0).then(|| prog.rectangular("Ud", sys.m_d(), n));
    (s, u_c, u_d)
}

/// Ranged dwell-time synthesis program on `n_seg` segments of `[0, t_max]`.
pub fn ranged_sf_program(sys: &ImpulsiveSystem, t_min: f64, t_max: f64, n_seg: usize, eps: f64) -> Result<SynthesisProgram> {
    check_inputs(sys)?;
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) || n_seg == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < T_min ≤ T_max and N ≥ 1, got [{t_min}, {t_max}], N={n_seg}")));
    }
    let times = ranged_grid(t_min, t_max, n_seg);
    let mut prog = LmiProgram::new();
    let (s, u_c, u_d) = new_vars(&mut prog, sys, times.len());
    prog.set_anchor(s[0]);
    let n = sys.n();
    for i in 0..times.len() - 1 {
        let c = 1.0 / (times[i + 1] - times[i]);
        for (end, k) in [("l", i), ("r", i + 1)] {
            let u = u_c.as_ref().map(|u| u[k]);
            prog.push(flow_block(sys, format!("flow[{i}]{end}"), s[k], u, Some((s[i + 1], s[i], c)), 0.0));
        }
    }
    let tol = 1e-12 * t_max;
    for (q, &theta) in times.iter().enumerate() {
        if theta >= t_min - tol {
            prog.push(sf_jump_block(sys, format!("jump[{q}]"), s[0], s[q], u_d, eps));
        }
    }
    for (i, &v) in s.iter().enumerate() {
        prog.push(positivity(format!("St{i}>0"), v, n, eps));
    }
    Ok(SynthesisProgram {
        program: prog,
        times,
        s,
        u_c,
        u_d,
    })
}

/// Minimum dwell-time synthesis program on `n_seg` segments of `[0, t_bar]`.
pub fn min_dt_sf_program(sys: &ImpulsiveSystem, t_bar: f64, n_seg: usize, eps: f64) -> Result<SynthesisProgram> {
    check_inputs(sys)?;
    if !(t_bar > 0.0 && t_bar.is_finite()) || n_seg == 0 {
        return Err(Error::InvalidArgument(format!("need T̄ > 0 and N ≥ 1, got T̄={t_bar}, N={n_seg}")));
    }
    let times = theta_grid(0.0, t_bar, n_seg + 1);
    let mut prog = LmiProgram::new();
    let (s, u_c, u_d) = new_vars(&mut prog, sys, times.len());
    let last = *s.last().unwrap();
    prog.set_anchor(last);
    let n = sys.n();
    for i in 0..n_seg {
        let c = -1.0 / (times[i + 1] - times[i]);
        for (end, k) in [("l", i), ("r", i + 1)] {
            let u = u_c.as_ref().map(|u| u[k]);
            prog.push(flow_block(sys, format!("flow[{i}]{end}"), s[k], u, Some((s[i + 1], s[i], c)), 0.0));
        }
    }
    let u_last = u_c.as_ref().map(|u| u[n_seg]);
    prog.push(flow_block(sys, "stationary".into(), last, u_last, None, eps));
    prog.push(sf_jump_block(sys, "jump".into(), last, s[0], u_d, eps));
    for (i, &v) in s.iter().enumerate() {
        prog.push(positivity(format!("St{i}>0"), v, n, eps));
    }
    Ok(SynthesisProgram {
        program: prog,
        times,
        s,
        u_c,
        u_d,
    })
}

fn recover(sys: &ImpulsiveSystem, sp: &SynthesisProgram, w: &Witness, k_d_from: VarId, tau_kd: f64) -> Result<ControllerGains> {
    let s_tilde = sp.pwl(w, &sp.s)?;
    let u_c = sp.u_c.as_ref().map(|u| sp.pwl(w, u)).transpose()?;
    let k_d = match sp.u_d {
        Some(u) => right_divide(&w[u], &w[k_d_from], tau_kd)?,
        None => Mat::zeros(0, sys.n()),
    };
    ControllerGains::new(s_tilde, u_c, k_d, sys.m_c())
}

fn verify(sys: &ImpulsiveSystem, gains: &ControllerGains, thetas: &[f64], opts: &SynthOptions) -> Result<(Vec<(f64, f64)>, bool)> {
    let mut rhos = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let steps = opts.rk_steps.unwrap_or_else(|| default_steps(theta));
        let m = closed_loop_monodromy(sys, gains, theta, steps)?;
        rhos.push((theta, spectral_radius(&m)?));
    }
    let ok = rhos.iter().all(|r| r.1 < 1.0 - 1e-6);
    Ok((rhos, ok))
}

/// State feedback for ranged dwell-time `[t_min, t_max]`.
pub fn ranged_sf(sys: &ImpulsiveSystem, t_min: f64, t_max: f64, n_seg: usize, opts: &SynthOptions) -> Result<SynthesisResult> {
    let eps = opts.cert.eps_for(sys);
    let sp = ranged_sf_program(sys, t_min, t_max, n_seg, eps)?;
    let v = solve(&sp.program, &opts.cert.solver)?;
    if !v.feasible {
        return Err(Error::Infeasible {
            what: format!("ranged dwell-time synthesis on [{t_min}, {t_max}]"),
            margin: v.margin,
        });
    }
    let gains = recover(sys, &sp, &v.witness, sp.s[0], 0.0)?;
    let thetas = opts
        .verify_at
        .clone()
        .unwrap_or_else(|| vec![t_min, 0.5 * (t_min + t_max), t_max]);
    let (closed_loop_rho, verified) = verify(sys, &gains, &thetas, opts)?;
    Ok(SynthesisResult {
        gains,
        program_margin: v.margin,
        closed_loop_rho,
        verified,
    })
}

/// State feedback for minimum dwell-time `t_bar`; `K_c` is frozen at `t_bar` afterwards.
pub fn min_dt_sf(sys: &ImpulsiveSystem, t_bar: f64, n_seg: usize, opts: &SynthOptions) -> Result<SynthesisResult> {
    let eps = opts.cert.eps_for(sys);
    let sp = min_dt_sf_program(sys, t_bar, n_seg, eps)?;
    let v = solve(&sp.program, &opts.cert.solver)?;
    if !v.feasible {
        return Err(Error::Infeasible {
            what: format!("minimum dwell-time synthesis at {t_bar}"),
            margin: v.margin,
        });
    }
    let last = *sp.s.last().unwrap();
    let gains = recover(sys, &sp, &v.witness, last, t_bar)?;
    let thetas = opts
        .verify_at
        .clone()
        .unwrap_or_else(|| vec![t_bar, 2.0 * t_bar, 5.0 * t_bar]);
    let (closed_loop_rho, verified) = verify(sys, &gains, &thetas, opts)?;
    Ok(SynthesisResult {
        gains,
        program_margin: v.margin,
        closed_loop_rho,
        verified,
    })
}

/// Discrete gain `K_d = [K_d¹ K_d²]` for an aperiodic sampled-data loop with
/// sampling intervals in `[t_min, t_max]`. Verified on a 21-point grid.
pub fn sampled_data_sf(sd: &SampledDataSystem, t_min: f64, t_max: f64, n_seg: usize, opts: &SynthOptions) -> Result<SynthesisResult> {
    let emb = sampled_data_to_impulsive(sd, None)?;
    let mut o = opts.clone();
    if o.verify_at.is_none() {
        o.verify_at = Some(theta_grid(t_min, t_max, 21));
    }
    ranged_sf(&emb, t_min, t_max, n_seg, &o)
}
