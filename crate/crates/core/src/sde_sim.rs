//! Monte-Carlo simulation of stochastic impulsive systems.
//!
//! Flows use Euler–Maruyama, impulses apply the random jump map exactly.
//! Every path draws from its own ChaCha stream `(seed, path)`, and the ensemble
//! statistics are reduced by pairwise summation in path order, so results are
//! bit-identical for any number of worker threads. All paths share one impulse
//! schedule, drawn from the reserved stream `u64::MAX`.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matalg::{unvec, vec, Mat};
use crate::model::{validate, ImpulsiveSystem};
use crate::moments::{closed_loop_flow, closed_loop_jump, default_steps, ClockGains, ConstantGains};

/// Fraction of non-finite paths above which a run fails.
pub const MAX_FLAGGED_FRACTION: f64 = 0.01;
/// Every gap is split into at least this many Euler steps.
pub const MIN_STEPS_PER_GAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant { t: f64 },
    Uniform { t_min: f64, t_max: f64 },
    /// Gaps `T̄ + Exp(mean = scale)`.
    MinDt { t_bar: f64, scale: f64 },
}

impl ScheduleKind {
    /// Smallest gap the kind allows.
    pub fn min_gap(&self) -> f64 {
        match *self {
            ScheduleKind::Constant { t } => t,
            ScheduleKind::Uniform { t_min, .. } => t_min,
            ScheduleKind::MinDt { t_bar, .. } => t_bar,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScheduleKind::Constant { t } => t > 0.0 && t.is_finite(),
            ScheduleKind::Uniform { t_min, t_max } => t_min > 0.0 && t_max >= t_min && t_max.is_finite(),
            ScheduleKind::MinDt { t_bar, scale } => t_bar > 0.0 && t_bar.is_finite() && scale >= 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid schedule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSchedule {
    pub kind: ScheduleKind,
    pub horizon: f64,
    pub times: Vec<f64>,
}

/// Draws impulse instants in `(0, horizon]`.
pub fn generate_schedule<R: Rng + ?Sized>(kind: ScheduleKind, horizon: f64, rng: &mut R) -> Result<ImpulseSchedule> {
    kind.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    let mut times = Vec::new();
    match kind {
        ScheduleKind::Constant { t } => {
            let slack = 1e-12 * horizon.max(1.0);
            let mut k = 1;
            while k as f64 * t <= horizon + slack {
                times.push(k as f64 * t);
                k += 1;
            }
        }
        ScheduleKind::Uniform { t_min, t_max } => {
            let mut t = 0.0;
            loop {
                t += if t_max > t_min { rng.random_range(t_min..=t_max) } else { t_min };
                if t > horizon {
                    break;
                }
                times.push(t);
            }
        }
        ScheduleKind::MinDt { t_bar, scale } => {
            let exp = (scale > 0.0).then(|| Exp::new(1.0 / scale).expect("positive rate"));
            let mut t = 0.0;
            loop {
                t += t_bar + exp.as_ref().map_or(0.0, |e| e.sample(rng));
                if t > horizon {
                    break;
                }
                times.push(t);
            }
        }
    }
    Ok(ImpulseSchedule { kind, horizon, times })
}

/// Distribution of the jump noises `ν_1, ν_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpNoise {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Clone)]
pub struct SimSpec {
    pub system: ImpulsiveSystem,
    pub gains: Option<Arc<dyn ClockGains + Send>>,
    pub schedule: ScheduleKind,
    pub x0: Vec<f64>,
    /// Largest Euler step; each gap also gets at least [`MIN_STEPS_PER_GAP`] steps.
    pub h: f64,
    pub paths: usize,
    pub seed: u64,
    /// Output times, sorted, in `[0, horizon]`; the last one is the horizon.
    pub grid: Vec<f64>,
    pub threads: Option<usize>,
    pub jump_noise: JumpNoise,
    pub keep_terminal: bool,
}

impl SimSpec {
    /// Spec with the default step `min gap / 100` on a uniform grid of `points` times.
    pub fn new(system: ImpulsiveSystem, schedule: ScheduleKind, x0: Vec<f64>, horizon: f64, points: usize, paths: usize, seed: u64) -> Self {
        let grid = (0..points.max(1))
            .map(|i| horizon * (i + 1) as f64 / points.max(1) as f64)
            .collect();
        Self {
            system,
            gains: None,
            schedule,
            x0,
            h: schedule.min_gap() / 100.0,
            paths,
            seed,
            grid,
            threads: None,
            jump_noise: JumpNoise::Gaussian,
            keep_terminal: false,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    pub fn schedule(&self) -> Result<ImpulseSchedule> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        generate_schedule(self.schedule, self.horizon(), &mut rng)
    }

    fn gains_or_zero(&self) -> Arc<dyn ClockGains + Send> {
        self.gains.clone().unwrap_or_else(|| Arc::new(ConstantGains::zero(&self.system)))
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.system).map_err(Error::InvalidSystem)?;
        self.schedule.validate()?;
        let n = self.system.n();
        if self.x0.len() != n {
            return Err(Error::Dimension(format!("x0 has length {}, system has n = {n}", self.x0.len())));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step h must be positive, got {}", self.h)));
        }
        if self.paths == 0 {
            return Err(Error::InvalidArgument("paths must be at least 1".into()));
        }
        if self.grid.is_empty() || self.grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid must be nonempty, finite, nonnegative and strictly increasing".into()));
        }
        if let Some(g) = &self.gains {
            let k_d = g.k_d();
            if k_d.shape() != (self.system.m_d(), n) {
                return Err(Error::Dimension(format!("K_d is {:?}, expected ({}, {n})", k_d.shape(), self.system.m_d())));
            }
            let k_c = g.k_c(0.0)?;
            if k_c.shape() != (self.system.m_c(), n) {
                return Err(Error::Dimension(format!("K_c is {:?}, expected ({}, {n})", k_c.shape(), self.system.m_c())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub grid: Vec<f64>,
    pub mean_sq: Vec<f64>,
    pub std_err: Vec<f64>,
    /// `(t_k, mean, std_err)` of `‖x(t_k⁺)‖²` at every impulse.
    pub post_jump: Vec<(f64, f64, f64)>,
    pub schedule: ImpulseSchedule,
    pub paths: usize,
    pub flagged: usize,
    pub terminal_norms: Option<Vec<f64>>,
}

impl SimResult {
    /// CSV with columns `time,mean_sq,std_err`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,mean_sq,std_err\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(s, "{},{},{}", self.grid[i], self.mean_sq[i], self.std_err[i]);
        }
        s
    }
}

/// Row-major copy of a matrix for allocation-free products.
#[derive(Clone)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    fn new(m: &Mat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// `out += c · self · x`.
    fn mul_add(&self, x: &[f64], c: f64, out: &mut [f64]) {
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] += c * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// `K_c` tabulated on a fine clock grid and interpolated linearly.
struct GainTable {
    step: f64,
    values: Vec<Dense>,
}

impl GainTable {
    fn build(gains: &dyn ClockGains, sys: &ImpulsiveSystem, max_tau: f64, step: f64) -> Result<Option<Self>> {
        if sys.m_c() == 0 {
            return Ok(None);
        }
        let count = (max_tau / step).ceil() as usize + 1;
        let values = (0..=count)
            .map(|i| gains.k_c(i as f64 * step).map(|k| Dense::new(&k)))
            .collect::<Result<_>>()?;
        Ok(Some(Self { step, values }))
    }

    fn eval(&self, tau: f64, out: &mut [f64], x: &[f64]) {
        let pos = (tau / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let w = (pos - i as f64).clamp(0.0, 1.0);
        out.iter_mut().for_each(|v| *v = 0.0);
        self.values[i].mul_add(x, 1.0 - w, out);
        self.values[i + 1].mul_add(x, w, out);
    }
}

struct Kernel {
    n: usize,
    a: Dense,
    e_c: Vec<Dense>,
    b_c1: Dense,
    b_c2: Dense,
    j: Dense,
    e_d: Dense,
    b_d1: Dense,
    b_d2: Dense,
    k_d: Dense,
    table: Option<GainTable>,
    jump_noise: JumpNoise,
}

struct Scratch {
    u: Vec<f64>,
    ud: Vec<f64>,
    next: Vec<f64>,
}

impl Kernel {
    fn flow_step(&self, x: &mut [f64], tau: f64, dt: f64, rng: &mut ChaCha8Rng, s: &mut Scratch) {
        let sq = dt.sqrt();
        s.next.copy_from_slice(x);
        self.a.mul_add(x, dt, &mut s.next);
        for e in &self.e_c {
            let xi: f64 = rng.sample(StandardNormal);
            e.mul_add(x, sq * xi, &mut s.next);
        }
        if let Some(t) = &self.table {
            t.eval(tau, &mut s.u, x);
            self.b_c1.mul_add(&s.u, dt, &mut s.next);
            if !self.b_c2.is_zero() {
                let xi: f64 = rng.sample(StandardNormal);
                self.b_c2.mul_add(&s.u, sq * xi, &mut s.next);
            }
        }
        x.copy_from_slice(&s.next);
    }

    fn jump_noise(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.jump_noise {
            JumpNoise::Gaussian => rng.sample(StandardNormal),
            JumpNoise::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    fn jump(&self, x: &mut [f64], rng: &mut ChaCha8Rng, s: &mut Scratch) {
        let nu1 = self.jump_noise(rng);
        let nu2 = self.jump_noise(rng);
        s.next.iter_mut().for_each(|v| *v = 0.0);
        self.j.mul_add(x, 1.0, &mut s.next);
        self.e_d.mul_add(x, nu1, &mut s.next);
        if self.k_d.rows > 0 {
            s.ud.iter_mut().for_each(|v| *v = 0.0);
            self.k_d.mul_add(x, 1.0, &mut s.ud);
            self.b_d1.mul_add(&s.ud, 1.0, &mut s.next);
            self.b_d2.mul_add(&s.ud, nu2, &mut s.next);
        }
        x.copy_from_slice(&s.next);
    }

    /// Integrates from clock `tau0` over `len`, with steps on the gap's own lattice.
    fn flow(&self, x: &mut [f64], tau0: f64, len: f64, dt: f64, rng: &mut ChaCha8Rng, s: &mut Scratch) {
        let end = tau0 + len;
        let mut tau = tau0;
        while end - tau > 1e-13 * end.max(1.0) {
            let next_node = ((tau / dt + 1e-9).floor() + 1.0) * dt;
            let stop = next_node.min(end);
            self.flow_step(x, tau, stop - tau, rng, s);
            tau = stop;
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Pairwise summation in index order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct PathOutput {
    grid: Vec<f64>,
    post_jump: Vec<f64>,
    terminal: f64,
    ok: bool,
}

fn run_path(k: &Kernel, spec: &SimSpec, sched: &ImpulseSchedule, path: usize) -> PathOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(path as u64);
    let mut s = Scratch {
        u: vec![0.0; spec.system.m_c()],
        ud: vec![0.0; spec.system.m_d()],
        next: vec![0.0; k.n],
    };
    let mut x = spec.x0.clone();
    let mut grid = Vec::with_capacity(spec.grid.len());
    let mut post = Vec::with_capacity(sched.times.len());
    let mut gi = 0;
    let mut start = 0.0;
    let horizon = spec.horizon();
    let ends = sched.times.iter().copied().chain(std::iter::once(f64::INFINITY));
    for (idx, t_jump) in ends.enumerate() {
        let gap_end = t_jump.min(horizon);
        let gap_len = if t_jump.is_finite() { t_jump - start } else { spec.h * MIN_STEPS_PER_GAP as f64 };
        let steps = ((gap_len / spec.h).ceil() as usize).max(MIN_STEPS_PER_GAP);
        let dt = gap_len / steps as f64;
        let mut tau = 0.0;
        while gi < spec.grid.len() && spec.grid[gi] <= gap_end {
            let target = spec.grid[gi] - start;
            k.flow(&mut x, tau, target - tau, dt, &mut rng, &mut s);
            tau = target;
            grid.push(norm_sq(&x));
            gi += 1;
        }
        if !t_jump.is_finite() || t_jump > horizon {
            break;
        }
        k.flow(&mut x, tau, gap_len - tau, dt, &mut rng, &mut s);
        k.jump(&mut x, &mut rng, &mut s);
        post.push(norm_sq(&x));
        start = t_jump;
        let _ = idx;
    }
    let ok = x.iter().all(|v| v.is_finite()) && grid.iter().chain(&post).all(|v| v.is_finite());
    PathOutput {
        terminal: norm_sq(&x).sqrt(),
        grid,
        post_jump: post,
        ok,
    }
}

/// Runs the ensemble and reports `E‖x‖²` with standard errors.
pub fn simulate(spec: &SimSpec) -> Result<SimResult> {
    spec.validate()?;
    let sched = spec.schedule()?;
    let sys = &spec.system;
    let gains = spec.gains_or_zero();
    let max_tau = sched
        .times
        .iter()
        .scan(0.0, |prev, &t| {
            let g = t - *prev;
            *prev = t;
            Some(g)
        })
        .fold(spec.horizon() - sched.times.last().copied().unwrap_or(0.0), f64::max);
    let kernel = Kernel {
        n: sys.n(),
        a: Dense::new(&sys.a),
        e_c: sys.e_c.iter().filter(|e| e.amax() > 0.0).map(Dense::new).collect(),
        b_c1: Dense::new(&sys.b_c1),
        b_c2: Dense::new(&sys.b_c2),
        j: Dense::new(&sys.j),
        e_d: Dense::new(&sys.e_d),
        b_d1: Dense::new(&sys.b_d1),
        b_d2: Dense::new(&sys.b_d2),
        k_d: Dense::new(gains.k_d()),
        table: GainTable::build(gains.as_ref(), sys, max_tau, spec.h / 8.0)?,
        jump_noise: spec.jump_noise,
    };
    let run = || -> Vec<PathOutput> { (0..spec.paths).into_par_iter().map(|p| run_path(&kernel, spec, &sched, p)).collect() };
    let outputs = match spec.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Simulation(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let good: Vec<&PathOutput> = outputs.iter().filter(|o| o.ok).collect();
    let flagged = outputs.len() - good.len();
    if flagged as f64 > MAX_FLAGGED_FRACTION * spec.paths as f64 {
        return Err(Error::Simulation(format!("{flagged} of {} paths became non-finite", spec.paths)));
    }
    let column = |f: &dyn Fn(&PathOutput) -> f64| -> (f64, f64) {
        let v: Vec<f64> = good.iter().map(|o| f(o)).collect();
        mean_and_se(&v)
    };
    let mut mean_sq = Vec::with_capacity(spec.grid.len());
    let mut std_err = Vec::with_capacity(spec.grid.len());
    for i in 0..spec.grid.len() {
        let (m, s) = column(&|o| o.grid[i]);
        mean_sq.push(m);
        std_err.push(s);
    }
    let post_jump = (0..sched.times.len())
        .map(|k| {
            let (m, s) = column(&|o| o.post_jump[k]);
            (sched.times[k], m, s)
        })
        .collect();
    Ok(SimResult {
        grid: spec.grid.clone(),
        mean_sq,
        std_err,
        post_jump,
        schedule: sched,
        paths: spec.paths,
        flagged,
        terminal_norms: spec.keep_terminal.then(|| outputs.iter().map(|o| o.terminal).collect()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub exact: Vec<f64>,
    pub z: Vec<f64>,
    pub max_abs_z: f64,
    /// `(t_k, simulated, exact)` post-jump second moments.
    pub post_jump: Vec<(f64, f64, f64)>,
}

/// Exact `E‖x‖²` on the grid and after every impulse, for the realized schedule.
pub fn exact_moments(spec: &SimSpec, sched: &ImpulseSchedule) -> Result<(Vec<f64>, Vec<f64>)> {
    let sys = &spec.system;
    let n = sys.n();
    let gains = spec.gains_or_zero();
    let jump = closed_loop_jump(sys, gains.k_d());
    let flow = |len: f64| -> Result<Mat> {
        if len <= 0.0 {
            return Ok(Mat::identity(n * n, n * n));
        }
        Ok(closed_loop_flow(sys, gains.as_ref(), len, default_steps(len))?.map)
    };
    let x0 = Mat::from_column_slice(n, 1, &spec.x0);
    let mut v = vec(&(&x0 * x0.transpose()));
    let trace = |v: &Mat| -> Result<f64> { Ok(unvec(v, n, n)?.trace()) };
    let (mut grid, mut post) = (Vec::new(), Vec::new());
    let mut gi = 0;
    let mut start = 0.0;
    let horizon = spec.horizon();
    for t_jump in sched.times.iter().copied().chain(std::iter::once(f64::INFINITY)) {
        let gap_end = t_jump.min(horizon);
        while gi < spec.grid.len() && spec.grid[gi] <= gap_end {
            grid.push(trace(&(flow(spec.grid[gi] - start)? * &v))?);
            gi += 1;
        }
        if !t_jump.is_finite() || t_jump > horizon {
            break;
        }
        v = &jump * (flow(t_jump - start)? * &v);
        post.push(trace(&v)?);
        start = t_jump;
    }
    Ok((grid, post))
}

/// Compares a simulation with the exact second-moment trajectory.
pub fn moment_check(spec: &SimSpec, result: &SimResult) -> Result<MomentReport> {
    let (exact, post) = exact_moments(spec, &result.schedule)?;
    let z: Vec<f64> = exact
        .iter()
        .zip(&result.mean_sq)
        .zip(&result.std_err)
        .map(|((e, m), s)| {
            let d = m - e;
            if *s > 0.0 {
                d / s
            } else if d.abs() <= 1e-9 * e.abs().max(1.0) {
                0.0
            } else {
                d.signum() * f64::INFINITY
            }
        })
        .collect();
    let max_abs_z = z.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let post_jump = result.post_jump.iter().zip(post).map(|(&(t, m, _), e)| (t, m, e)).collect();
    Ok(MomentReport {
        exact,
        z,
        max_abs_z,
        post_jump,
    })
}
