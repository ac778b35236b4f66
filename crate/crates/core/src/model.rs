//! System data: stochastic impulsive systems, switched and sampled-data
//! systems, dwell-time specifications, and the two embeddings that turn
//! switched and sampled-data systems into impulsive form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matalg::{block_diag, kron, serde_rows, serde_rows_list, Mat};

/// Linear stochastic impulsive system
///
/// ```text
/// dx = (A x + Bc1 uc) dt + Σ_i Ec_i x dW_i + Bc2 uc dW'      between impulses
/// x+ = J x + Bd1 ud + Ed x ν1 + Bd2 ud ν2                     at impulses
/// ```
///
/// with independent Wiener channels and i.i.d. zero-mean unit-variance `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulsiveSystem {
    #[serde(with = "serde_rows")]
    pub a: Mat,
    #[serde(with = "serde_rows_list")]
    pub e_c: Vec<Mat>,
    #[serde(with = "serde_rows")]
    pub b_c1: Mat,
    #[serde(with = "serde_rows")]
    pub b_c2: Mat,
    #[serde(with = "serde_rows")]
    pub j: Mat,
    #[serde(with = "serde_rows")]
    pub e_d: Mat,
    #[serde(with = "serde_rows")]
    pub b_d1: Mat,
    #[serde(with = "serde_rows")]
    pub b_d2: Mat,
}

/// A dimensional problem found by [`validate`], naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ImpulsiveSystem {
    /// System without control inputs.
    pub fn autonomous(a: Mat, e_c: Vec<Mat>, j: Mat, e_d: Mat) -> Self {
        let n = a.nrows();
        Self {
            a,
            e_c,
            b_c1: Mat::zeros(n, 0),
            b_c2: Mat::zeros(n, 0),
            j,
            e_d,
            b_d1: Mat::zeros(n, 0),
            b_d2: Mat::zeros(n, 0),
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m_c(&self) -> usize {
        self.b_c1.ncols()
    }

    pub fn m_d(&self) -> usize {
        self.b_d1.ncols()
    }

    /// True when no diffusion matrix has a nonzero entry.
    pub fn is_deterministic(&self) -> bool {
        self.e_c.iter().all(|e| e.amax() == 0.0) && self.e_d.amax() == 0.0
    }

    /// Largest Frobenius norm among the system matrices; used to scale ε.
    pub fn scale(&self) -> f64 {
        let mut s = self.a.norm().max(self.j.norm()).max(self.e_d.norm());
        for e in &self.e_c {
            s = s.max(e.norm());
        }
        s.max(1.0)
    }

    pub fn validated(self) -> Result<Self> {
        validate(&self).map_err(Error::InvalidSystem)?;
        Ok(self)
    }
}

fn check_shape(issues: &mut Vec<Issue>, field: &str, m: &Mat, rows: usize, cols: Option<usize>) {
    let cols_ok = cols.map_or(true, |c| m.ncols() == c);
    if m.nrows() != rows || !cols_ok {
        let want = match cols {
            Some(c) => format!("{rows}x{c}"),
            None => format!("{rows}x*"),
        };
        issues.push(Issue {
            field: field.to_string(),
            message: format!("expected {want}, found {}x{}", m.nrows(), m.ncols()),
        });
    }
    if !m.iter().all(|x| x.is_finite()) {
        issues.push(Issue {
            field: field.to_string(),
            message: "non-finite entry".into(),
        });
    }
}

/// Checks every dimensional invariant. Never panics; returns all issues found.
pub fn validate(sys: &ImpulsiveSystem) -> std::result::Result<(), Vec<Issue>> {
    let mut issues = Vec::new();
    let n = sys.a.nrows();
    if n == 0 {
        issues.push(Issue {
            field: "A".into(),
            message: "empty state dimension".into(),
        });
    }
    check_shape(&mut issues, "A", &sys.a, n, Some(n));
    if sys.e_c.is_empty() {
        issues.push(Issue {
            field: "E_c".into(),
            message: "at least one diffusion matrix is required (use zeros for a deterministic flow)"
                .into(),
        });
    }
    for (i, e) in sys.e_c.iter().enumerate() {
        check_shape(&mut issues, &format!("E_c[{i}]"), e, n, Some(n));
    }
    check_shape(&mut issues, "B_c1", &sys.b_c1, n, None);
    check_shape(&mut issues, "B_c2", &sys.b_c2, n, Some(sys.b_c1.ncols()));
    check_shape(&mut issues, "J", &sys.j, n, Some(n));
    check_shape(&mut issues, "E_d", &sys.e_d, n, Some(n));
    check_shape(&mut issues, "B_d1", &sys.b_d1, n, None);
    check_shape(&mut issues, "B_d2", &sys.b_d2, n, Some(sys.b_d1.ncols()));
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

/// Impulsive system with several admissible jump maps (one per mode switch).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiJumpImpulsiveSystem {
    pub a: Mat,
    pub e_c: Vec<Mat>,
    /// `(J_k, E_d_k)` pairs.
    pub jumps: Vec<(Mat, Mat)>,
    /// `(i, j)` mode pair of each jump: switching from mode `j` into mode `i`.
    pub labels: Vec<(usize, usize)>,
}

impl MultiJumpImpulsiveSystem {
    /// The single-jump system that uses jump `k` at every impulse.
    pub fn with_jump(&self, k: usize) -> ImpulsiveSystem {
        let (j, e_d) = self.jumps[k].clone();
        ImpulsiveSystem::autonomous(self.a.clone(), self.e_c.clone(), j, e_d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    #[serde(with = "serde_rows")]
    pub g: Mat,
    #[serde(with = "serde_rows")]
    pub h: Mat,
}

/// `dy = G_σ y dt + H_σ y dW`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchedSystem {
    pub modes: Vec<Mode>,
}

impl SwitchedSystem {
    pub fn n(&self) -> usize {
        self.modes.first().map_or(0, |m| m.g.nrows())
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Issue>> {
        let mut issues = Vec::new();
        if self.modes.len() < 2 {
            issues.push(Issue {
                field: "modes".into(),
                message: format!("need at least 2 modes, found {}", self.modes.len()),
            });
        }
        let n = self.n();
        for (i, m) in self.modes.iter().enumerate() {
            check_shape(&mut issues, &format!("modes[{i}].G"), &m.g, n, Some(n));
            check_shape(&mut issues, &format!("modes[{i}].H"), &m.h, n, Some(n));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

/// Sampled-data loop `dx = (A x + B u) dt + E x dW1 + α B u dW2` with a
/// zero-order hold on `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDataSystem {
    #[serde(with = "serde_rows")]
    pub a_sd: Mat,
    #[serde(with = "serde_rows")]
    pub b_sd: Mat,
    #[serde(with = "serde_rows")]
    pub e_sd: Mat,
    pub alpha: f64,
}

impl SampledDataSystem {
    pub fn n(&self) -> usize {
        self.a_sd.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_sd.ncols()
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Issue>> {
        let mut issues = Vec::new();
        let n = self.n();
        check_shape(&mut issues, "A_sd", &self.a_sd, n, Some(n));
        check_shape(&mut issues, "B_sd", &self.b_sd, n, None);
        check_shape(&mut issues, "E_sd", &self.e_sd, n, Some(n));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            issues.push(Issue {
                field: "alpha".into(),
                message: format!("must be a nonnegative number, found {}", self.alpha),
            });
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

/// Constraint on the gaps `T_k = t_{k+1} - t_k` between impulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwellTimeSpec {
    Constant(f64),
    Ranged { t_min: f64, t_max: f64 },
    Minimum(f64),
}

impl DwellTimeSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DwellTimeSpec::Constant(t) | DwellTimeSpec::Minimum(t) => t > 0.0 && t.is_finite(),
            DwellTimeSpec::Ranged { t_min, t_max } => {
                t_min > 0.0 && t_min <= t_max && t_max.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid dwell-time spec {self:?}")))
        }
    }
}

/// Embeds an `N`-mode switched system into an `N·n`-dimensional impulsive
/// system with reset maps `J_ij = (e_i e_jᵀ) ⊗ I_n`, `i ≠ j`.
pub fn switched_to_impulsive(sw: &SwitchedSystem) -> Result<MultiJumpImpulsiveSystem> {
    sw.validate().map_err(Error::InvalidSystem)?;
    let n = sw.n();
    let modes = sw.modes.len();
    let g: Vec<Mat> = sw.modes.iter().map(|m| m.g.clone()).collect();
    let h: Vec<Mat> = sw.modes.iter().map(|m| m.h.clone()).collect();
    let mut jumps = Vec::new();
    let mut labels = Vec::new();
    for i in 0..modes {
        for j in 0..modes {
            if i == j {
                continue;
            }
            let mut eij = Mat::zeros(modes, modes);
            eij[(i, j)] = 1.0;
            jumps.push((
                kron(&eij, &Mat::identity(n, n)),
                Mat::zeros(modes * n, modes * n),
            ));
            labels.push((i, j));
        }
    }
    Ok(MultiJumpImpulsiveSystem {
        a: block_diag(&g),
        e_c: vec![block_diag(&h)],
        jumps,
        labels,
    })
}

/// Impulsive form of a sampled-data loop with state `(x, held u)`.
///
/// With `k_d` the jump is the closed-loop `J0 + B̄ K_d`; otherwise `J0`.
pub fn sampled_data_to_impulsive(sd: &SampledDataSystem, k_d: Option<&Mat>) -> Result<ImpulsiveSystem> {
    sd.validate().map_err(Error::InvalidSystem)?;
    let n = sd.n();
    let m = sd.m();
    let dim = n + m;
    let mut a_bar = Mat::zeros(dim, dim);
    a_bar.view_mut((0, 0), (n, n)).copy_from(&sd.a_sd);
    a_bar.view_mut((0, n), (n, m)).copy_from(&sd.b_sd);
    let mut e1 = Mat::zeros(dim, dim);
    e1.view_mut((0, 0), (n, n)).copy_from(&sd.e_sd);
    let mut e2 = Mat::zeros(dim, dim);
    e2.view_mut((0, n), (n, m)).copy_from(&(&sd.b_sd * sd.alpha));
    let j0 = block_diag(&[Mat::identity(n, n), Mat::zeros(m, m)]);
    let mut b_bar = Mat::zeros(dim, m);
    b_bar.view_mut((n, 0), (m, m)).copy_from(&Mat::identity(m, m));

    let j = match k_d {
        Some(k) => {
            if k.nrows() != m || k.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "K_d must be {m}x{dim}, found {}x{}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            &j0 + &b_bar * k
        }
        None => j0,
    };
    Ok(ImpulsiveSystem {
        a: a_bar,
        e_c: vec![e1, e2],
        b_c1: Mat::zeros(dim, 0),
        b_c2: Mat::zeros(dim, 0),
        j,
        e_d: Mat::zeros(dim, dim),
        b_d1: b_bar,
        b_d2: Mat::zeros(dim, m),
    })
}
