//! Bundled benchmark systems and the published reference values used by the
//! reproduction sweeps (`T1`..`T5`) and the acceptance suite.

use crate::matalg::{from_rows, Mat};
use crate::model::{ImpulsiveSystem, SampledDataSystem};

fn m(rows: &[&[f64]]) -> Mat {
    from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("rectangular literal")
}

/// Stable flow with an expanding jump: `A = [[-1,0],[1,-2]]`, `J = [[2,1],[1,3]]`,
/// `E_c = κI`, `E_d = δI`. Stable only for long enough dwell-times.
pub fn constant_dt_example(kappa: f64, delta: f64) -> ImpulsiveSystem {
    ImpulsiveSystem::autonomous(
        m(&[&[-1.0, 0.0], &[1.0, -2.0]]),
        vec![Mat::identity(2, 2) * kappa],
        m(&[&[2.0, 1.0], &[1.0, 3.0]]),
        Mat::identity(2, 2) * delta,
    )
}

/// Unstable flow with a contracting jump: `A = [[1,3],[-1,2]]`, `J = 0.5 I`,
/// `E_c = κI`, `E_d = δI`. Stable only for short enough dwell-times.
pub fn ranged_dt_example(kappa: f64, delta: f64) -> ImpulsiveSystem {
    ImpulsiveSystem::autonomous(
        m(&[&[1.0, 3.0], &[-1.0, 2.0]]),
        vec![Mat::identity(2, 2) * kappa],
        Mat::identity(2, 2) * 0.5,
        Mat::identity(2, 2) * delta,
    )
}

/// Open-loop unstable system with continuous and discrete inputs, used for
/// minimum dwell-time state-feedback design at `T̄ = 0.1`.
pub fn synthesis_example() -> ImpulsiveSystem {
    ImpulsiveSystem {
        a: m(&[&[1.0, 1.0], &[1.0, -2.0]]),
        e_c: vec![m(&[&[1.0, 0.0], &[1.0, 2.0]])],
        b_c1: m(&[&[4.0], &[0.0]]),
        b_c2: m(&[&[1.0], &[0.0]]),
        j: m(&[&[3.0, 1.0], &[1.0, 2.0]]),
        e_d: m(&[&[1.0, 0.0], &[1.0, -1.0]]) * 0.2,
        b_d1: m(&[&[1.0], &[0.0]]),
        b_d2: m(&[&[0.0], &[0.1]]),
    }
}

/// Initial condition used for the closed-loop simulations of [`synthesis_example`].
pub const SYNTHESIS_X0: [f64; 2] = [2.0, -2.0];

/// Discrete gain reported for [`synthesis_example`]; solver dependent, informative only.
pub const SYNTHESIS_REFERENCE_KD: [f64; 2] = [-3.9165, -2.9751];

/// Integrator plus first-order lag under sample-and-hold control.
pub fn sampled_data_example(alpha: f64) -> SampledDataSystem {
    SampledDataSystem {
        a_sd: m(&[&[0.0, 1.0], &[0.0, -1.0]]),
        b_sd: m(&[&[0.0], &[1.0]]),
        e_sd: m(&[&[0.0, 0.0], &[0.0, 0.1]]),
        alpha,
    }
}

pub const SAMPLED_DATA_ALPHA: f64 = 0.1;

/// Row and column parameters of the [`constant_dt_example`] sweeps.
pub const CONST_KAPPA: [f64; 5] = [0.0, 0.3, 0.6, 0.9, 1.2];
pub const CONST_DELTA: [f64; 5] = [0.0, 0.6, 1.2, 1.8, 2.4];

/// Row and column parameters of the [`ranged_dt_example`] sweeps.
pub const RANGED_KAPPA: [f64; 5] = [0.0, 0.75, 1.5, 2.75, 3.0];
pub const RANGED_DELTA: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

/// Lower dwell-time bound used by the ranged sweeps.
pub const RANGED_T_MIN: f64 = 0.01;

/// T1: smallest constant dwell-time from a degree-6 polynomial clock-dependent certificate.
pub const T1_CONSTANT_POLY: [[f64; 5]; 5] = [
    [1.1406, 1.1568, 1.2031, 1.2734, 1.3595],
    [1.1918, 1.2089, 1.2578, 1.3319, 1.4225],
    [1.3787, 1.3992, 1.4577, 1.5458, 1.6531],
    [1.8774, 1.9073, 1.9920, 2.1184, 2.2702],
    [3.9306, 4.0011, 4.1938, 4.4765, 4.8305],
];

/// T2: smallest constant dwell-time from the monodromy spectral test.
pub const T2_CONSTANT_SPECTRAL: [[f64; 5]; 5] = [
    [1.1406, 1.1568, 1.2030, 1.2732, 1.3593],
    [1.1918, 1.2089, 1.2577, 1.3317, 1.4223],
    [1.3787, 1.3992, 1.4576, 1.5456, 1.6528],
    [1.8773, 1.9072, 1.9918, 2.1181, 2.2700],
    [3.9315, 4.0005, 4.1932, 4.4752, 4.8083],
];

/// T3: minimum dwell-time from a degree-6 polynomial clock-dependent certificate.
pub const T3_MINIMUM_POLY: [[f64; 5]; 5] = [
    [1.1406, 1.1568, 1.2031, 1.2734, 1.3595],
    [1.1918, 1.2089, 1.2578, 1.3319, 1.4225],
    [1.3787, 1.3992, 1.4577, 1.5458, 1.6531],
    [1.8774, 1.9073, 1.9920, 2.1184, 2.2703],
    [3.9307, 4.0012, 4.1941, 4.4776, 4.8565],
];

/// Largest `T_max` (with `T_min = 0.01`) from a degree-6 polynomial ranged certificate.
pub const RANGED_TMAX_POLY: [[f64; 5]; 5] = [
    [0.4620, 0.4126, 0.2971, 0.1647, 0.0388],
    [0.3891, 0.3474, 0.2502, 0.1387, 0.0327],
    [0.2640, 0.2357, 0.1698, 0.0941, 0.0221],
    [0.1312, 0.1171, 0.0844, 0.0467, 0.0110],
    [0.1154, 0.1031, 0.0742, 0.0411, 0.0064],
];

/// T4: largest `T_max` (with `T_min = 0.01`) from the 201-point gridded
/// quadratic stability test on the monodromy family.
pub const T4_LIFTED_QUADRATIC: [[f64; 5]; 5] = [
    [0.4620, 0.4126, 0.2971, 0.1647, 0.0388],
    [0.3891, 0.3474, 0.2502, 0.1387, 0.0327],
    [0.2640, 0.2357, 0.1698, 0.0941, 0.0221],
    [0.1312, 0.1171, 0.0844, 0.0467, 0.0110],
    [0.1155, 0.1031, 0.0742, 0.0411, 0.0411],
];

/// Cell of T4 known to be a gridding artifact (row, column).
pub const T4_UNRELIABLE_CELL: (usize, usize) = (4, 4);

/// T5: sampled-data design intervals and the discrete gains reported for them.
pub const T5_SAMPLED_DATA: [(f64, f64, [f64; 3]); 6] = [
    (0.001, 0.1, [-0.4069, -0.1734, -0.0045]),
    (0.001, 0.5, [-0.4421, -0.2137, -0.0215]),
    (0.001, 1.0, [-0.3410, -0.1332, 0.0036]),
    (1.0, 5.0, [-0.1977, -0.1931, 0.0014]),
    (1.0, 10.0, [-0.1053, -0.1061, 0.0011]),
    (1.0, 20.0, [-0.0583, -0.0559, -0.0003]),
];
