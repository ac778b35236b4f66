//! Dense real linear algebra used by every other module.
//!
//! Matrices are plain `nalgebra::DMatrix<f64>`. The Kronecker helpers, the
//! vectorization pair and the matrix exponential are written out here; the
//! general eigensolver delegates to nalgebra's real Schur decomposition.
//!
//! The matrix exponential uses scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005). The degree is the
//! smallest one whose 1-norm threshold `THETA_m` bounds `‖A‖₁`; above
//! `THETA_13 = 5.3719...` the matrix is scaled by `2^-s` with
//! `s = ceil(log2(‖A‖₁ / THETA_13))` and the result squared `s` times.

use nalgebra::{linalg::Schur, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Eigenvalues of a square matrix plus the two summaries the stability tests need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub max_real_part: f64,
}

/// Iteration cap handed to the Schur solver.
pub const EIG_MAX_ITER: usize = 10_000;

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// `a ⊗ I + I ⊗ b`.
pub fn kron_sum(a: &Mat, b: &Mat) -> Result<Mat> {
    ensure_square(a)?;
    ensure_square(b)?;
    let ia = Mat::identity(a.nrows(), a.nrows());
    let ib = Mat::identity(b.nrows(), b.nrows());
    Ok(a.kronecker(&ib) + ia.kronecker(b))
}

/// Column-stacking vectorization, returned as an `rows*cols x 1` matrix.
pub fn vec(a: &Mat) -> Mat {
    // nalgebra storage is column-major, so the raw slice is already vec(a).
    Mat::from_column_slice(a.len(), 1, a.as_slice())
}

pub fn unvec(v: &Mat, rows: usize, cols: usize) -> Result<Mat> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Mat::from_column_slice(rows, cols, v.as_slice()))
}

pub fn ensure_square(a: &Mat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

pub fn ensure_finite(a: &Mat, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn norm1(a: &Mat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring.
pub fn expm(a: &Mat) -> Result<Mat> {
    ensure_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::ExpmOverflow { norm });
    }
    let ident = Mat::identity(n, n);

    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = pade_low(a, coeffs, &ident);
            return pade_solve(&u, &v, norm);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0);
    if s > 1000.0 {
        return Err(Error::ExpmOverflow { norm });
    }
    let s = s as i32;
    let scaled = a * 2f64.powi(-s);
    let (u, v) = pade_13(&scaled, &ident);
    let mut r = pade_solve(&u, &v, norm)?;
    for _ in 0..s {
        r = &r * &r;
        if !r.iter().all(|x| x.is_finite()) {
            return Err(Error::ExpmOverflow { norm });
        }
    }
    Ok(r)
}

fn pade_low(a: &Mat, b: &[f64], ident: &Mat) -> (Mat, Mat) {
    let a2 = a * a;
    let mut odd = ident * b[1];
    let mut even = ident * b[0];
    let mut pow = ident.clone();
    for k in 1..b.len() / 2 {
        pow = &pow * &a2;
        odd += &pow * b[2 * k + 1];
        even += &pow * b[2 * k];
    }
    (a * odd, even)
}

fn pade_13(a: &Mat, ident: &Mat) -> (Mat, Mat) {
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    (u, v)
}

fn pade_solve(u: &Mat, v: &Mat, norm: f64) -> Result<Mat> {
    let p = v + u;
    let q = v - u;
    let r = q
        .lu()
        .solve(&p)
        .ok_or(Error::ExpmOverflow { norm })?;
    if r.iter().all(|x| x.is_finite()) {
        Ok(r)
    } else {
        Err(Error::ExpmOverflow { norm })
    }
}

/// All eigenvalues of a square matrix.
pub fn eig(a: &Mat) -> Result<SpectralReport> {
    ensure_square(a)?;
    ensure_finite(a, "eigenvalue input")?;
    if a.nrows() == 0 {
        return Ok(SpectralReport {
            eigenvalues: Vec::new(),
            spectral_radius: 0.0,
            max_real_part: f64::NEG_INFINITY,
        });
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(
        Error::NoConvergence {
            iterations: EIG_MAX_ITER,
        },
    )?;
    let eigenvalues: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        eigenvalues,
        spectral_radius,
        max_real_part,
    })
}

pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eig(a)?.spectral_radius)
}

/// Relative asymmetry tolerance accepted by the symmetric routines.
pub const SYM_TOL: f64 = 1e-12;

fn check_symmetric(a: &Mat) -> Result<Mat> {
    ensure_square(a)?;
    ensure_finite(a, "symmetric eigenvalue input")?;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let deviation = (a - a.transpose()).amax();
    let tolerance = SYM_TOL * scale;
    if deviation > tolerance {
        return Err(Error::Asymmetric {
            deviation,
            tolerance,
        });
    }
    Ok(symmetrize(a))
}

/// Smallest eigenvalue of a (numerically) symmetric matrix.
pub fn min_eig_sym(a: &Mat) -> Result<f64> {
    let s = check_symmetric(a)?;
    if s.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(s.symmetric_eigenvalues().min())
}

pub fn max_eig_sym(a: &Mat) -> Result<f64> {
    let s = check_symmetric(a)?;
    if s.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(s.symmetric_eigenvalues().max())
}

/// Block-diagonal concatenation.
pub fn block_diag(blocks: &[Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Builds a matrix from row vectors; used by tests, fixtures and config parsing.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn to_rows(a: &Mat) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn col(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Serde adapter storing a matrix as nested row arrays (`[[a, b], [c, d]]`).
pub mod serde_rows {
    use super::{from_rows, to_rows, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Like [`serde_rows`] for a list of matrices.
pub mod serde_rows_list {
    use super::{from_rows, to_rows, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|rows| from_rows(rows).map_err(serde::de::Error::custom))
            .collect()
    }
}
