//! Margin-maximizing feasibility solver for structured linear matrix inequalities.
//!
//! A program is a list of blocks `F_j(X) = C_j + Σ terms ⪯ 0` over symmetric
//! and rectangular matrix variables. [`solve`] maximizes a uniform margin `t`
//! subject to `F_j(X) / c_j ⪯ -t I`, where `c_j ≥ 1` is the largest Frobenius
//! norm among the block's constituents. Every matrix variable is confined to
//! the ball `‖X‖_F ≤ box_radius`, and an optional anchor variable is pinned to
//! `trace(X) = dim(X)` so that homogeneous programs have a bounded margin.
//!
//! The solver is a primal log-barrier path-following method with damped Newton
//! steps. Verdicts are never taken from the solver alone: every block is
//! re-assembled from its term list at the final point and its smallest
//! eigenvalue recomputed with [`min_eig_sym`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matalg::{min_eig_sym, serde_rows_list, symmetrize, unvec, vec, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Symmetric(usize),
    Rectangular(usize, usize),
}

impl VarKind {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            VarKind::Symmetric(d) => (d, d),
            VarKind::Rectangular(r, c) => (r, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiVar {
    pub id: VarId,
    pub kind: VarKind,
    pub name: String,
}

/// Contribution `L · op(X) · R` of one variable to a block, plus its transpose
/// when `symmetrize` is set. `op` is the identity unless `map` is given, in
/// which case `vec(op(X)) = map · vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiTerm {
    pub var: VarId,
    pub left: Mat,
    pub right: Mat,
    pub symmetrize: bool,
    pub map: Option<Mat>,
}

impl LmiTerm {
    /// `L X R`, symmetric by construction.
    pub fn sandwich(var: VarId, left: Mat, right: Mat) -> Self {
        Self {
            var,
            left,
            right,
            symmetrize: false,
            map: None,
        }
    }

    /// `L X R + (L X R)ᵀ`.
    pub fn hermitian(var: VarId, left: Mat, right: Mat) -> Self {
        Self {
            var,
            left,
            right,
            symmetrize: true,
            map: None,
        }
    }

    /// `L unvec(map vec X) R`, symmetric by construction.
    pub fn mapped(var: VarId, map: Mat, left: Mat, right: Mat) -> Self {
        Self {
            var,
            left,
            right,
            symmetrize: false,
            map: Some(map),
        }
    }

    fn apply(&self, x: &Mat) -> Result<Mat> {
        let inner = match &self.map {
            Some(m) => {
                if m.ncols() != x.len() || m.nrows() != x.len() {
                    return Err(Error::Dimension(format!(
                        "term map is {}x{} for a variable with {} entries",
                        m.nrows(),
                        m.ncols(),
                        x.len()
                    )));
                }
                unvec(&(m * vec(x)), x.nrows(), x.ncols())?
            }
            None => x.clone(),
        };
        if self.left.ncols() != inner.nrows() || inner.ncols() != self.right.nrows() {
            return Err(Error::Dimension(format!(
                "term factors {}x{} · {}x{} · {}x{} do not chain",
                self.left.nrows(),
                self.left.ncols(),
                inner.nrows(),
                inner.ncols(),
                self.right.nrows(),
                self.right.ncols()
            )));
        }
        let p = &self.left * inner * &self.right;
        Ok(if self.symmetrize { &p + p.transpose() } else { p })
    }
}

/// One inequality `constant + Σ terms ⪯ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub label: String,
    pub constant: Mat,
    pub terms: Vec<LmiTerm>,
}

impl LmiBlock {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        Self {
            label: label.into(),
            constant: Mat::zeros(size, size),
            terms: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn with_constant(mut self, c: Mat) -> Self {
        self.constant = c;
        self
    }

    pub fn term(mut self, t: LmiTerm) -> Self {
        self.terms.push(t);
        self
    }

    pub fn push(&mut self, t: LmiTerm) {
        self.terms.push(t);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LmiProgram {
    pub vars: Vec<LmiVar>,
    pub blocks: Vec<LmiBlock>,
    /// Symmetric variable normalized to `trace = dim`.
    pub anchor: Option<VarId>,
}

impl LmiProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn symmetric(&mut self, name: impl Into<String>, d: usize) -> VarId {
        self.add_var(name.into(), VarKind::Symmetric(d))
    }

    pub fn rectangular(&mut self, name: impl Into<String>, r: usize, c: usize) -> VarId {
        self.add_var(name.into(), VarKind::Rectangular(r, c))
    }

    fn add_var(&mut self, name: String, kind: VarKind) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(LmiVar { id, kind, name });
        id
    }

    pub fn set_anchor(&mut self, v: VarId) {
        self.anchor = Some(v);
    }

    pub fn push(&mut self, b: LmiBlock) {
        self.blocks.push(b);
    }

    pub fn var(&self, id: VarId) -> &LmiVar {
        &self.vars[id.0]
    }

    /// Plain-text dump: one section per block with its constant and terms.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let fmt = |m: &Mat| {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| format!("{:.17e}", m[(i, j)]))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        for v in &self.vars {
            let _ = writeln!(out, "var {} {} {:?}", v.id.0, v.name, v.kind);
        }
        if let Some(a) = self.anchor {
            let _ = writeln!(out, "anchor {}", a.0);
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "block {i} {} size {}", b.label, b.size());
            let _ = writeln!(out, "constant\n{}", fmt(&b.constant));
            for t in &b.terms {
                let _ = writeln!(
                    out,
                    "term var {} symmetrize {} mapped {}",
                    t.var.0,
                    t.symmetrize,
                    t.map.is_some()
                );
                let _ = writeln!(out, "left\n{}\nright\n{}", fmt(&t.left), fmt(&t.right));
                if let Some(m) = &t.map {
                    let _ = writeln!(out, "map\n{}", fmt(m));
                }
            }
            let _ = writeln!(out, "end");
        }
        out
    }
}

/// Values of every variable, indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness(#[serde(with = "serde_rows_list")] pub Vec<Mat>);

impl Witness {
    pub fn zeros(program: &LmiProgram) -> Self {
        Witness(
            program
                .vars
                .iter()
                .map(|v| {
                    let (r, c) = v.kind.shape();
                    Mat::zeros(r, c)
                })
                .collect(),
        )
    }

    pub fn get(&self, id: VarId) -> &Mat {
        &self.0[id.0]
    }
}

impl std::ops::Index<VarId> for Witness {
    type Output = Mat;
    fn index(&self, id: VarId) -> &Mat {
        &self.0[id.0]
    }
}

/// Evaluates a block at a witness.
pub fn assemble(block: &LmiBlock, witness: &Witness) -> Result<Mat> {
    let mut out = block.constant.clone();
    for t in &block.terms {
        let x = witness
            .0
            .get(t.var.0)
            .ok_or_else(|| Error::IllPosed(format!("variable {} missing from witness", t.var.0)))?;
        let c = t.apply(x)?;
        if c.shape() != out.shape() {
            return Err(Error::Dimension(format!(
                "term contributes {}x{} to block '{}' of size {}",
                c.nrows(),
                c.ncols(),
                block.label,
                block.size()
            )));
        }
        out += c;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Margin above which the program is declared feasible.
    pub feas_tol: f64,
    /// Stop once the barrier duality-gap bound falls below this.
    pub gap_tol: f64,
    /// Barrier weight growth per outer iteration.
    pub growth: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub box_radius: f64,
    /// Stop as soon as the verdict is certain instead of driving the margin to optimality.
    pub decide_early: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-9,
            growth: 8.0,
            max_outer: 60,
            max_newton: 200,
            box_radius: 1e4,
            decide_early: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateRecord {
    pub outer: usize,
    pub newton_steps: usize,
    pub weight: f64,
    pub margin: f64,
    pub gap_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmiVerdict {
    pub feasible: bool,
    /// Best uniform margin found (in scaled units); a lower bound on the optimum.
    pub margin: f64,
    /// Upper bound on the optimal margin implied by the barrier gap.
    pub margin_upper: f64,
    pub witness: Witness,
    /// `λ_min(-F_j)` of every block at the witness, recomputed from the term lists.
    pub residuals: Vec<f64>,
    /// Per-block scale `c_j` used during the solve.
    pub block_scales: Vec<f64>,
    pub newton_steps: usize,
    pub trace: Vec<IterateRecord>,
}

impl LmiVerdict {
    pub fn min_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Affine parameterization `X = offset + Σ_k x_k basis_k` of one variable.
struct VarParam {
    offset: Mat,
    first: usize,
    basis: Vec<Mat>,
    gram: Mat,
    lin: DVector<f64>,
    offset_sq: f64,
}

fn parameterize(kind: VarKind, anchored: bool, first: usize) -> VarParam {
    let (r, c) = kind.shape();
    let mut basis = Vec::new();
    let offset = match kind {
        VarKind::Symmetric(d) => {
            if anchored {
                for i in 1..d {
                    let mut e = Mat::zeros(d, d);
                    e[(i, i)] = 1.0;
                    e[(0, 0)] = -1.0;
                    basis.push(e);
                }
            } else {
                for i in 0..d {
                    let mut e = Mat::zeros(d, d);
                    e[(i, i)] = 1.0;
                    basis.push(e);
                }
            }
            for i in 0..d {
                for j in i + 1..d {
                    let mut e = Mat::zeros(d, d);
                    e[(i, j)] = 1.0;
                    e[(j, i)] = 1.0;
                    basis.push(e);
                }
            }
            if anchored {
                Mat::identity(d, d)
            } else {
                Mat::zeros(d, d)
            }
        }
        VarKind::Rectangular(..) => {
            for j in 0..c {
                for i in 0..r {
                    let mut e = Mat::zeros(r, c);
                    e[(i, j)] = 1.0;
                    basis.push(e);
                }
            }
            Mat::zeros(r, c)
        }
    };
    let k = basis.len();
    let gram = Mat::from_fn(k, k, |a, b| basis[a].dot(&basis[b]));
    let lin = DVector::from_fn(k, |a, _| offset.dot(&basis[a]));
    let offset_sq = offset.norm_squared();
    VarParam {
        offset,
        first,
        basis,
        gram,
        lin,
        offset_sq,
    }
}

/// Block in standard form `C + Σ_k x_k B_k` (already divided by `scale`).
struct StdBlock {
    scale: f64,
    constant: Mat,
    coords: Vec<usize>,
    mats: Vec<Mat>,
}

struct StdForm {
    params: Vec<VarParam>,
    blocks: Vec<StdBlock>,
    dim: usize,
    barrier_param: f64,
}

fn lower(program: &LmiProgram) -> Result<StdForm> {
    if program.blocks.is_empty() {
        return Err(Error::IllPosed("program has no blocks".into()));
    }
    if let Some(a) = program.anchor {
        match program.vars.get(a.0).map(|v| v.kind) {
            Some(VarKind::Symmetric(_)) => {}
            _ => return Err(Error::IllPosed("anchor must be a symmetric variable".into())),
        }
    }
    let mut params = Vec::with_capacity(program.vars.len());
    let mut next = 0;
    for v in &program.vars {
        let (r, c) = v.kind.shape();
        if r == 0 || c == 0 {
            return Err(Error::IllPosed(format!("variable '{}' has an empty shape", v.name)));
        }
        let p = parameterize(v.kind, program.anchor == Some(v.id), next);
        next += p.basis.len();
        params.push(p);
    }

    let mut blocks = Vec::with_capacity(program.blocks.len());
    for b in &program.blocks {
        let k = b.size();
        if b.constant.ncols() != k || k == 0 {
            return Err(Error::Dimension(format!("block '{}' constant is not square", b.label)));
        }
        let mut constant = b.constant.clone();
        let mut acc: BTreeMap<usize, Mat> = BTreeMap::new();
        for t in &b.terms {
            let p = params
                .get(t.var.0)
                .ok_or_else(|| Error::IllPosed(format!("block '{}' uses unknown variable {}", b.label, t.var.0)))?;
            let c0 = t.apply(&p.offset)?;
            if c0.shape() != (k, k) {
                return Err(Error::Dimension(format!(
                    "term on '{}' contributes {}x{} to block '{}' of size {k}",
                    program.vars[t.var.0].name,
                    c0.nrows(),
                    c0.ncols(),
                    b.label
                )));
            }
            constant += c0;
            for (i, e) in p.basis.iter().enumerate() {
                let ce = t.apply(e)?;
                if !t.symmetrize && t.map.is_none() {
                    let asym = (&ce - ce.transpose()).amax();
                    if asym > 1e-9 * ce.amax().max(1.0) {
                        return Err(Error::IllPosed(format!(
                            "term on '{}' in block '{}' is not symmetric by construction",
                            program.vars[t.var.0].name, b.label
                        )));
                    }
                }
                acc.entry(p.first + i)
                    .and_modify(|m| *m += &ce)
                    .or_insert(ce);
            }
        }
        let constant = symmetrize(&constant);
        let mut scale = constant.norm();
        let mut coords = Vec::with_capacity(acc.len());
        let mut mats = Vec::with_capacity(acc.len());
        for (coord, m) in acc {
            let m = symmetrize(&m);
            if m.amax() == 0.0 {
                continue;
            }
            scale = scale.max(m.norm());
            coords.push(coord);
            mats.push(m);
        }
        if !scale.is_finite() {
            return Err(Error::NonFinite(format!("block '{}'", b.label)));
        }
        let scale = scale.max(1.0);
        blocks.push(StdBlock {
            scale,
            constant: constant / scale,
            coords,
            mats: mats.into_iter().map(|m| m / scale).collect(),
        });
    }
    let barrier_param = blocks.iter().map(|b| b.constant.nrows() as f64).sum::<f64>()
        + 2.0 * params.len() as f64;
    Ok(StdForm {
        params,
        blocks,
        dim: next,
        barrier_param,
    })
}

/// Barrier value, gradient and Hessian in `y = (x, t)`.
struct Eval {
    phi: f64,
    grad: DVector<f64>,
    hess: Mat,
}

impl StdForm {
    fn block_matrix(&self, b: &StdBlock, y: &DVector<f64>) -> Mat {
        let t = y[self.dim];
        let mut g = -&b.constant;
        for (k, m) in b.coords.iter().zip(&b.mats) {
            g -= m * y[*k];
        }
        for i in 0..g.nrows() {
            g[(i, i)] -= t;
        }
        g
    }

    fn box_slack(&self, p: &VarParam, x: &DVector<f64>, radius: f64) -> f64 {
        let xs = x.rows(p.first, p.basis.len());
        let q = p.offset_sq + 2.0 * p.lin.dot(&xs) + xs.dot(&(&p.gram * xs));
        radius * radius - q
    }

    /// Barrier value (without the objective) or `None` outside the domain.
    fn barrier(&self, y: &DVector<f64>, radius: f64) -> Option<f64> {
        let mut phi = 0.0;
        for b in &self.blocks {
            let chol = Cholesky::new(self.block_matrix(b, y))?;
            phi -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        for p in &self.params {
            let s = self.box_slack(p, y, radius);
            if !(s > 0.0) {
                return None;
            }
            phi -= s.ln();
        }
        phi.is_finite().then_some(phi)
    }

    fn evaluate(&self, y: &DVector<f64>, radius: f64) -> Option<Eval> {
        let n = self.dim + 1;
        let tix = self.dim;
        let mut grad = DVector::zeros(n);
        let mut hess = Mat::zeros(n, n);
        let mut phi = 0.0;
        for b in &self.blocks {
            let chol = Cholesky::new(self.block_matrix(b, y))?;
            let l = chol.l();
            phi -= 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let k = l.nrows();
            let linv = l.solve_lower_triangular(&Mat::identity(k, k))?;
            // W_a = L⁻¹ B_a L⁻ᵀ; gradient tr(W_a), Hessian ⟨W_a, W_b⟩.
            let mut ws: Vec<Mat> = Vec::with_capacity(b.coords.len() + 1);
            for m in &b.mats {
                ws.push(&linv * m * linv.transpose());
            }
            ws.push(&linv * linv.transpose());
            let idx: Vec<usize> = b.coords.iter().cloned().chain(std::iter::once(tix)).collect();
            for (a, wa) in ws.iter().enumerate() {
                grad[idx[a]] += wa.trace();
                for (c, wc) in ws.iter().enumerate().skip(a) {
                    let v = wa.dot(wc);
                    hess[(idx[a], idx[c])] += v;
                    if a != c {
                        hess[(idx[c], idx[a])] += v;
                    }
                }
            }
        }
        for p in &self.params {
            let s = self.box_slack(p, y, radius);
            if !(s > 0.0) {
                return None;
            }
            phi -= s.ln();
            let k = p.basis.len();
            let xs = y.rows(p.first, k);
            let dq = (&p.lin + &p.gram * xs) * 2.0;
            for a in 0..k {
                grad[p.first + a] += dq[a] / s;
                for c in 0..k {
                    hess[(p.first + a, p.first + c)] += 2.0 * p.gram[(a, c)] / s + dq[a] * dq[c] / (s * s);
                }
            }
        }
        Some(Eval { phi, grad, hess })
    }

    fn values(&self, y: &DVector<f64>) -> Witness {
        Witness(
            self.params
                .iter()
                .map(|p| {
                    let mut x = p.offset.clone();
                    for (i, e) in p.basis.iter().enumerate() {
                        x += e * y[p.first + i];
                    }
                    x
                })
                .collect(),
        )
    }
}

fn newton_direction(ev: &Eval, weight: f64, tix: usize) -> Option<(DVector<f64>, DVector<f64>)> {
    let mut g = ev.grad.clone();
    g[tix] -= weight;
    let n = g.len();
    let diag_max = ev.hess.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut h = ev.hess.clone();
        if reg > 0.0 {
            for i in 0..n {
                h[(i, i)] += reg;
            }
        }
        if let Some(ch) = Cholesky::new(h) {
            let d = -ch.solve(&g);
            if d.iter().all(|v| v.is_finite()) {
                return Some((d, g));
            }
        }
        reg = if reg == 0.0 { 1e-14 * diag_max } else { reg * 100.0 };
    }
    None
}

/// Maximizes the uniform margin of `program`; see the module docs.
pub fn solve(program: &LmiProgram, opts: &SolveOptions) -> Result<LmiVerdict> {
    let sf = lower(program)?;
    let tix = sf.dim;
    let radius = opts.box_radius;
    let mut y = DVector::zeros(sf.dim + 1);

    // Start strictly inside every block with unit slack.
    let mut worst = f64::NEG_INFINITY;
    for b in &sf.blocks {
        worst = worst.max(-crate::matalg::min_eig_sym(&(-&b.constant))?);
    }
    y[tix] = -worst - 1.0;
    for p in &sf.params {
        if !(sf.box_slack(p, &y, radius) > 0.0) {
            return Err(Error::IllPosed("anchor normalization lies outside the variable box".into()));
        }
    }

    let mut weight = 1.0;
    let mut trace = Vec::new();
    let mut total_newton = 0;
    let mut upper = f64::INFINITY;

    for outer in 0..opts.max_outer {
        let mut steps = 0;
        loop {
            let ev = sf.evaluate(&y, radius).ok_or_else(|| Error::Solver {
                message: "iterate left the barrier domain".into(),
                trace: trace.clone(),
            })?;
            let (dir, g) = newton_direction(&ev, weight, tix).ok_or_else(|| Error::Solver {
                message: "Newton system could not be factored".into(),
                trace: trace.clone(),
            })?;
            let decrement = -g.dot(&dir);
            if decrement < 0.0 || !decrement.is_finite() {
                return Err(Error::Solver {
                    message: format!("non-descent Newton direction (decrement {decrement:e})"),
                    trace,
                });
            }
            if decrement / 2.0 < 1e-10 {
                break;
            }
            let f0 = ev.phi - weight * y[tix];
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut stalled = false;
            for _ in 0..80 {
                let cand = &y + &dir * alpha;
                if let Some(phi) = sf.barrier(&cand, radius) {
                    let f1 = phi - weight * cand[tix];
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        stalled = f0 - f1 <= 1e-14 * f0.abs().max(1.0);
                        y = cand;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            steps += 1;
            total_newton += 1;
            if !accepted || stalled {
                // Centered as well as floating point allows.
                break;
            }
            if steps >= opts.max_newton {
                return Err(Error::Solver {
                    message: format!("centering did not converge in {} Newton steps", opts.max_newton),
                    trace,
                });
            }
        }
        let margin = y[tix];
        let gap = sf.barrier_param / weight;
        upper = upper.min(margin + gap);
        trace.push(IterateRecord {
            outer,
            newton_steps: steps,
            weight,
            margin,
            gap_bound: gap,
        });
        if margin > 1e8 {
            return Err(Error::IllPosed(format!(
                "margin grows without bound ({margin:e}); is an anchor or a definiteness block missing?"
            )));
        }
        if opts.decide_early && (margin > opts.feas_tol || margin + 2.0 * gap < opts.feas_tol) {
            break;
        }
        if gap < opts.gap_tol {
            break;
        }
        weight *= opts.growth;
    }

    let witness = sf.values(&y);
    let mut residuals = Vec::with_capacity(program.blocks.len());
    for b in &program.blocks {
        let f = assemble(b, &witness)?;
        residuals.push(min_eig_sym(&symmetrize(&(-f)))?);
    }
    let margin = y[tix];
    let block_scales: Vec<f64> = sf.blocks.iter().map(|b| b.scale).collect();
    let claims_feasible = margin > opts.feas_tol;
    if claims_feasible {
        if let Some((j, r)) = residuals
            .iter()
            .enumerate()
            .find(|(_, r)| **r < 0.5 * opts.feas_tol)
        {
            return Err(Error::Solver {
                message: format!(
                    "post-hoc check failed: block '{}' residual {r:e} with margin {margin:e}",
                    program.blocks[j].label
                ),
                trace,
            });
        }
    }
    Ok(LmiVerdict {
        feasible: claims_feasible,
        margin,
        margin_upper: upper,
        witness,
        residuals,
        block_scales,
        newton_steps: total_newton,
        trace,
    })
}

/// Selector `e_r ⊗ I_n` of shape `(k n) x n`, used to place `n x n` pieces in a `k x k` block layout.
pub fn selector(k: usize, n: usize, r: usize) -> Mat {
    let mut s = Mat::zeros(k * n, n);
    s.view_mut((r * n, 0), (n, n)).fill_with_identity();
    s
}
