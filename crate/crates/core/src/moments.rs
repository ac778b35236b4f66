//! Exact second-moment machinery.
//!
//! For `X(t) = E[x(t) x(t)ᵀ]` the flow gives `vec Ẋ = 𝒜 vec X` with
//! `𝒜 = A⊕A + Σ_i E_i⊗E_i` and an impulse gives `vec X⁺ = 𝒥 vec X` with
//! `𝒥 = J⊗J + E_d⊗E_d`. The dual (observability) form `Q̇ = AᵀQ + QA + Σ E_iᵀQE_i`
//! uses `𝒜ᵀ`; [`propagate_xi`] evaluates `E[Φ(t)ᵀ Z Φ(t)]` through it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matalg::{expm, kron, kron_sum, spectral_radius, symmetrize, unvec, vec, Mat};
use crate::model::ImpulsiveSystem;

/// `(𝒜, 𝒥)` of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPair {
    pub gen: Mat,
    pub jump: Mat,
}

pub fn lift(sys: &ImpulsiveSystem) -> LiftedPair {
    LiftedPair {
        gen: lifted_generator(&sys.a, sys.e_c.iter()),
        jump: kron(&sys.j, &sys.j) + kron(&sys.e_d, &sys.e_d),
    }
}

fn lifted_generator<'a>(a: &Mat, channels: impl Iterator<Item = &'a Mat>) -> Mat {
    let mut gen = kron_sum(a, a).expect("square drift");
    for e in channels {
        gen += kron(e, e);
    }
    gen
}

/// One-period map `M(T) = exp(𝒜T) 𝒥` acting on `vec E[x xᵀ]` at pre-jump instants.
pub fn monodromy(sys: &ImpulsiveSystem, t: f64) -> Result<Mat> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("dwell-time must be positive, got {t}")));
    }
    let lp = lift(sys);
    Ok(expm(&(&lp.gen * t))? * lp.jump)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDtVerdict {
    pub stable: bool,
    pub rho: f64,
}

/// Mean-square stability under constant dwell-time `t`: `ρ(M(t)) < 1`.
pub fn constant_dt_stable(sys: &ImpulsiveSystem, t: f64) -> Result<ConstantDtVerdict> {
    let rho = spectral_radius(&monodromy(sys, t)?)?;
    Ok(ConstantDtVerdict { stable: rho < 1.0, rho })
}

/// `E[Φ(t)ᵀ Z Φ(t)]` for the uncontrolled flow, computed exactly.
pub fn propagate_xi(sys: &ImpulsiveSystem, z: &Mat, t: f64) -> Result<Mat> {
    let n = sys.n();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::Dimension(format!("Z must be {n}x{n}")));
    }
    let dev = (z - z.transpose()).amax();
    let tol = 1e-12 * z.norm().max(f64::MIN_POSITIVE);
    if dev > tol {
        return Err(Error::Asymmetric { deviation: dev, tolerance: tol });
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let gen_t = lift(sys).gen.transpose();
    let out = expm(&(gen_t * t))? * vec(z);
    Ok(symmetrize(&unvec(&out, n, n)?))
}

/// Evaluates the clock-dependent feedback used by the closed-loop moment maps.
pub trait ClockGains: Sync {
    /// Continuous gain `K_c(τ)` (`m_c x n`); must clamp beyond its horizon.
    fn k_c(&self, tau: f64) -> Result<Mat>;
    /// Discrete gain `K_d` (`m_d x n`).
    fn k_d(&self) -> &Mat;
}

/// Clock-independent feedback `u_c = K_c x`, `u_d = K_d x`.
#[derive(Debug, Clone)]
pub struct ConstantGains {
    pub k_c: Mat,
    pub k_d: Mat,
}

impl ConstantGains {
    pub fn zero(sys: &ImpulsiveSystem) -> Self {
        Self {
            k_c: Mat::zeros(sys.m_c(), sys.n()),
            k_d: Mat::zeros(sys.m_d(), sys.n()),
        }
    }
}

impl ClockGains for ConstantGains {
    fn k_c(&self, _tau: f64) -> Result<Mat> {
        Ok(self.k_c.clone())
    }
    fn k_d(&self) -> &Mat {
        &self.k_d
    }
}

/// Linear map carrying `vec E[x xᵀ]` across a flow interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFlow {
    pub map: Mat,
}

/// Default RK4 step count for a flow of length `theta`.
pub fn default_steps(theta: f64) -> usize {
    ((theta / 0.005).ceil() as usize).max(200)
}

/// Closed-loop system with feedback frozen at clock value `tau`.
pub fn closed_loop_at(sys: &ImpulsiveSystem, k_c: &Mat) -> ImpulsiveSystem {
    let mut cl = sys.clone();
    if sys.m_c() > 0 {
        cl.a = &sys.a + &sys.b_c1 * k_c;
        cl.e_c.push(&sys.b_c2 * k_c);
    }
    cl.b_c1 = Mat::zeros(sys.n(), 0);
    cl.b_c2 = Mat::zeros(sys.n(), 0);
    cl
}

fn closed_loop_generator(sys: &ImpulsiveSystem, gains: &dyn ClockGains, tau: f64) -> Result<Mat> {
    let k = gains.k_c(tau)?;
    let a_cl = &sys.a + &sys.b_c1 * &k;
    let b2k = &sys.b_c2 * &k;
    Ok(lifted_generator(&a_cl, sys.e_c.iter().chain(std::iter::once(&b2k))))
}

/// Second-moment flow of the closed loop over `[0, theta]`, integrated with
/// fixed-step RK4 (`steps` steps). Columns are propagated independently, so
/// the result does not depend on the number of worker threads.
pub fn closed_loop_flow(
    sys: &ImpulsiveSystem,
    gains: &dyn ClockGains,
    theta: f64,
    steps: usize,
) -> Result<MomentFlow> {
    if !(theta > 0.0) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need theta > 0 and steps > 0 (theta={theta}, steps={steps})"
        )));
    }
    let n2 = sys.n() * sys.n();
    if sys.m_c() == 0 {
        return Ok(MomentFlow {
            map: expm(&(lift(sys).gen * theta))?,
        });
    }
    let h = theta / steps as f64;
    // Generators at every half step: index 2k is τ = k h.
    let gens: Vec<Mat> = (0..=2 * steps)
        .map(|i| closed_loop_generator(sys, gains, 0.5 * h * i as f64))
        .collect::<Result<_>>()?;

    let columns: Vec<Vec<f64>> = (0..n2)
        .into_par_iter()
        .map(|c| {
            let mut y = nalgebra::DVector::<f64>::zeros(n2);
            y[c] = 1.0;
            for k in 0..steps {
                let g0 = &gens[2 * k];
                let gm = &gens[2 * k + 1];
                let g1 = &gens[2 * k + 2];
                let k1 = g0 * &y;
                let k2 = gm * (&y + &k1 * (0.5 * h));
                let k3 = gm * (&y + &k2 * (0.5 * h));
                let k4 = g1 * (&y + &k3 * h);
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            y.as_slice().to_vec()
        })
        .collect();
    let mut map = Mat::zeros(n2, n2);
    for (c, data) in columns.iter().enumerate() {
        map.column_mut(c).copy_from_slice(data);
    }
    if !map.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("closed-loop moment flow".into()));
    }
    Ok(MomentFlow { map })
}

/// `(J + B_d1 K_d)⊗(J + B_d1 K_d) + E_d⊗E_d + (B_d2 K_d)⊗(B_d2 K_d)`.
pub fn closed_loop_jump(sys: &ImpulsiveSystem, k_d: &Mat) -> Mat {
    let jcl = &sys.j + &sys.b_d1 * k_d;
    let b2k = &sys.b_d2 * k_d;
    kron(&jcl, &jcl) + kron(&sys.e_d, &sys.e_d) + kron(&b2k, &b2k)
}

/// Jump-then-flow map of the closed loop over one dwell interval `theta`;
/// `ρ < 1` certifies mean-square stability under constant dwell-time `theta`.
pub fn closed_loop_monodromy(
    sys: &ImpulsiveSystem,
    gains: &dyn ClockGains,
    theta: f64,
    steps: usize,
) -> Result<Mat> {
    let flow = closed_loop_flow(sys, gains, theta, steps)?;
    Ok(flow.map * closed_loop_jump(sys, gains.k_d()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::matalg::{eig, from_rows, min_eig_sym};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64, e_c: f64, j: f64, e_d: f64) -> ImpulsiveSystem {
        let s = |x: f64| Mat::from_element(1, 1, x);
        ImpulsiveSystem::autonomous(s(a), vec![s(e_c)], s(j), s(e_d))
    }

    #[test]
    fn lift_scalar_and_deterministic() {
        let lp = lift(&scalar(-0.7, 0.4, 1.3, 0.5));
        assert!((lp.gen[(0, 0)] - (-1.4 + 0.16)).abs() < 1e-15);
        assert!((lp.jump[(0, 0)] - (1.69 + 0.25)).abs() < 1e-15);

        let sys = benchmarks::constant_dt_example(0.0, 0.0);
        let lp = lift(&sys);
        assert_eq!(lp.gen, kron_sum(&sys.a, &sys.a).unwrap());
        assert_eq!(lp.jump, kron(&sys.j, &sys.j));
    }

    #[test]
    fn lift_isotropic_diffusion_shifts_generator() {
        let sys = benchmarks::constant_dt_example(0.3, 0.0);
        let lp = lift(&sys);
        let want = kron_sum(&sys.a, &sys.a).unwrap() + Mat::identity(4, 4) * 0.09;
        assert!((lp.gen - want).amax() < 1e-15);
    }

    #[test]
    fn monodromy_cases() {
        let mut sys = benchmarks::constant_dt_example(0.4, 0.0);
        sys.j = Mat::identity(2, 2);
        sys.e_d = Mat::zeros(2, 2);
        let m = monodromy(&sys, 0.8).unwrap();
        let want = expm(&(lift(&sys).gen * 0.8)).unwrap();
        assert!((m - want).amax() < 1e-14);

        let t = 4f64.ln() / 2.0;
        let m = monodromy(&scalar(-1.0, 0.0, 2.0, 0.0), t).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14);

        let sys = benchmarks::constant_dt_example(0.0, 0.0);
        let rho = spectral_radius(&monodromy(&sys, 1.1406).unwrap()).unwrap();
        assert!((rho - 1.0).abs() < 5e-4, "rho = {rho}");
        assert!(monodromy(&sys, 0.0).is_err());
    }

    #[test]
    fn constant_dt_verdicts() {
        let sys = benchmarks::constant_dt_example(0.0, 0.0);
        assert!(constant_dt_stable(&sys, 1.2).unwrap().stable);
        assert!(!constant_dt_stable(&sys, 1.0).unwrap().stable);
        for t in [0.1, 1.0, 7.0] {
            assert!(constant_dt_stable(&scalar(0.0, 0.0, 0.6, 0.7), t).unwrap().stable);
        }
    }

    #[test]
    fn propagate_xi_cases() {
        let sys = benchmarks::constant_dt_example(0.0, 0.0);
        let z = from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!((propagate_xi(&sys, &z, 0.0).unwrap() - &z).amax() < 1e-15);

        let t = 0.7;
        let e = expm(&(&sys.a * t)).unwrap();
        let want = e.transpose() * &z * &e;
        assert!((propagate_xi(&sys, &z, t).unwrap() - want).amax() < 1e-13);

        let s = scalar(-0.8, 0.6, 1.0, 0.0);
        let got = propagate_xi(&s, &Mat::from_element(1, 1, 3.0), 1.5).unwrap();
        assert!((got[(0, 0)] - 3.0 * ((-1.6 + 0.36) * 1.5f64).exp()).abs() < 1e-13);

        let bad = from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(propagate_xi(&sys, &bad, 1.0).is_err());
    }

    fn random_system(rng: &mut ChaCha8Rng) -> ImpulsiveSystem {
        let mut r = |s: f64| Mat::from_fn(2, 2, |_, _| rng.random_range(-s..s));
        ImpulsiveSystem::autonomous(r(2.0), vec![r(1.0)], r(2.0), r(1.0))
    }

    #[test]
    fn propagate_xi_semigroup_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let sys = random_system(&mut rng);
            let b = Mat::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let z = &b * b.transpose();
            let (s, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let direct = propagate_xi(&sys, &z, s + t).unwrap();
            let stepped = propagate_xi(&sys, &propagate_xi(&sys, &z, s).unwrap(), t).unwrap();
            assert!((&direct - &stepped).norm() <= 1e-9 * direct.norm().max(1e-300));
            assert!(min_eig_sym(&direct).unwrap() >= -1e-9 * direct.norm());
        }
    }

    #[test]
    fn zero_gain_flow_is_open_loop() {
        let sys = benchmarks::synthesis_example();
        let zero = ConstantGains::zero(&sys);
        let flow = closed_loop_flow(&sys, &zero, 0.3, 200).unwrap();
        let want = expm(&(lift(&sys).gen * 0.3)).unwrap();
        assert!((&flow.map - &want).amax() < 1e-8 * want.amax());

        let cm = closed_loop_monodromy(&sys, &zero, 0.3, 200).unwrap();
        let m = monodromy(&sys, 0.3).unwrap();
        assert!((&cm - &m).amax() < 1e-8 * m.amax());

        let mut plain = sys.clone();
        plain.e_d = Mat::zeros(2, 2);
        let jump = closed_loop_jump(&plain, &Mat::zeros(1, 2));
        assert_eq!(jump, kron(&plain.j, &plain.j));
    }

    #[test]
    fn constant_gain_flow_matches_exponential() {
        let sys = benchmarks::synthesis_example();
        let gains = ConstantGains {
            k_c: from_rows(&[vec![-1.2, -0.4]]).unwrap(),
            k_d: from_rows(&[vec![-2.5, -1.0]]).unwrap(),
        };
        let theta = 0.4;
        let cl = closed_loop_at(&sys, &gains.k_c);
        let want = expm(&(lift(&cl).gen * theta)).unwrap();
        let flow = closed_loop_flow(&sys, &gains, theta, default_steps(theta)).unwrap();
        assert!((&flow.map - &want).amax() <= 1e-7 * want.amax());

        let mut cl_full = cl.clone();
        cl_full.j = &sys.j + &sys.b_d1 * &gains.k_d;
        cl_full.e_d = sys.e_d.clone();
        let via_sys = monodromy(&cl_full, theta).unwrap();
        // The B_d2 K_d channel is an extra jump noise term.
        let b2k = &sys.b_d2 * &gains.k_d;
        let via_sys = via_sys + expm(&(lift(&cl).gen * theta)).unwrap() * kron(&b2k, &b2k);
        let cm = closed_loop_monodromy(&sys, &gains, theta, default_steps(theta)).unwrap();
        assert!((&cm - &via_sys).amax() <= 1e-7 * via_sys.amax());
    }

    struct Ramp;
    impl ClockGains for Ramp {
        fn k_c(&self, tau: f64) -> Result<Mat> {
            let t = tau.min(0.5);
            Ok(from_rows(&[vec![-1.0 - 2.0 * t, 0.3 * t * t]]).unwrap())
        }
        fn k_d(&self) -> &Mat {
            static KD: std::sync::OnceLock<Mat> = std::sync::OnceLock::new();
            KD.get_or_init(|| from_rows(&[vec![-3.0, -2.0]]).unwrap())
        }
    }

    #[test]
    fn rk4_self_convergence() {
        let sys = benchmarks::synthesis_example();
        let a = closed_loop_flow(&sys, &Ramp, 0.6, 200).unwrap().map;
        let b = closed_loop_flow(&sys, &Ramp, 0.6, 400).unwrap().map;
        assert!((&a - &b).amax() < 1e-8 * b.amax());
    }

    #[test]
    fn flow_preserves_symmetric_matrices() {
        let sys = benchmarks::synthesis_example();
        let flow = closed_loop_flow(&sys, &Ramp, 0.6, 200).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let mut e = Mat::zeros(2, 2);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let out = unvec(&(&flow.map * vec(&e)), 2, 2).unwrap();
            assert!((&out - out.transpose()).amax() < 1e-9 * out.amax());
        }
    }

    #[test]
    fn flow_is_thread_count_independent() {
        let sys = benchmarks::synthesis_example();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| closed_loop_flow(&sys, &Ramp, 0.6, 300).unwrap());
        let b = four.install(|| closed_loop_flow(&sys, &Ramp, 0.6, 300).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn eigen_of_generator_is_pairwise_sum_for_deterministic() {
        let sys = benchmarks::ranged_dt_example(0.0, 0.0);
        let rep = eig(&lift(&sys).gen).unwrap();
        assert!((rep.max_real_part - 3.0).abs() < 1e-12);
    }
}
