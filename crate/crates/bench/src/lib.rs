//! Shared fixtures for the criterion benches.

use dwellcert_core::benchmarks::constant_dt_example;
use dwellcert_core::sde_sim::{ScheduleKind, SimSpec};
use dwellcert_core::{ImpulsiveSystem, Mat};

/// Deterministic dense test matrix with entries in [-1, 1], shifted to be Hurwitz.
pub fn dense_matrix(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| ((i * 7 + j * 13 + 3) % 17) as f64 / 8.5 - 1.0) - Mat::identity(n, n) * (n as f64)
}

/// Mid-grid cell of the constant dwell-time example.
pub fn mid_system() -> ImpulsiveSystem {
    constant_dt_example(0.6, 1.2)
}

pub fn sim_spec(paths: usize) -> SimSpec {
    let mut spec = SimSpec::new(mid_system(), ScheduleKind::Constant { t: 2.5 }, vec![1.0, 1.0], 5.0, 50, paths, 1);
    spec.h = 0.01;
    spec
}
