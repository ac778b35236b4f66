//! Invariants checked over random inputs.

use dwellcert_core::clockcond::{exact_constant_dt, CertOptions};
use dwellcert_core::dtsearch::smallest_constant_dt;
use dwellcert_core::matalg::{expm, kron, unvec, vec};
use dwellcert_core::moments::{constant_dt_stable, lift, monodromy};
use dwellcert_core::sde_sim::{generate_schedule, pairwise_sum, ScheduleKind};
use dwellcert_core::{ImpulsiveSystem, Mat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar(a: f64, e_c: f64, j: f64, e_d: f64) -> ImpulsiveSystem {
    let m = |v: f64| Mat::from_element(1, 1, v);
    ImpulsiveSystem::autonomous(m(a), vec![m(e_c)], m(j), m(e_d))
}

fn small_matrix(n: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| Mat::from_vec(n, n, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_constant_threshold_has_closed_form(a in -3.0..-0.2f64, e_c in 0.0..0.5f64, j in 1.2..3.0f64, e_d in 0.0..1.0f64) {
        let rate = 2.0 * a + e_c * e_c;
        prop_assume!(rate < -0.05);
        let sys = scalar(a, e_c, j, e_d);
        let expected = (j * j + e_d * e_d).ln() / -rate;
        prop_assume!(expected > 0.02 && expected < 9.0);
        let r = smallest_constant_dt(&sys, (0.01, 10.0), 1e-6).unwrap();
        prop_assert!((r.threshold - expected).abs() < 1e-4, "{} vs {}", r.threshold, expected);
    }

    #[test]
    fn exact_certificate_agrees_with_spectral_test(a in -3.0..-0.2f64, e_c in 0.0..0.5f64, j in 1.2..3.0f64, e_d in 0.0..1.0f64, t in 0.05..5.0f64) {
        let sys = scalar(a, e_c, j, e_d);
        let rho = constant_dt_stable(&sys, t).unwrap().rho;
        prop_assume!((rho - 1.0).abs() > 1e-3);
        let cert = exact_constant_dt(&sys, t, &CertOptions::default()).unwrap();
        prop_assert_eq!(cert.verdict, rho < 1.0);
    }

    #[test]
    fn monodromy_is_flow_then_jump(m in small_matrix(2), e in small_matrix(2), t in 0.0..2.0f64) {
        let i = Mat::identity(2, 2);
        let (j, e_d) = (&i * 0.7, &m * 0.3);
        let sys = ImpulsiveSystem::autonomous(m.clone(), vec![e.clone()], j.clone(), e_d.clone());
        let pair = lift(&sys);
        let gen = kron(&i, &m) + kron(&m, &i) + kron(&e, &e);
        let jump = kron(&j, &j) + kron(&e_d, &e_d);
        prop_assert!((&pair.gen - &gen).norm() < 1e-12);
        prop_assert!((&pair.jump - &jump).norm() < 1e-12);
        let expected = expm(&(gen * t)).unwrap() * jump;
        let got = monodromy(&sys, t).unwrap();
        prop_assert!((got - expected).norm() < 1e-9);
    }

    #[test]
    fn kron_vec_identity(a in small_matrix(3), x in small_matrix(3), b in small_matrix(3)) {
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert_eq!(unvec(&vec(&x), 3, 3).unwrap(), x);
    }

    #[test]
    fn schedules_respect_their_dwell_constraints(t_min in 0.05..1.0f64, width in 0.0..1.0f64, horizon in 0.0..20.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kinds = [
            ScheduleKind::Constant { t: t_min },
            ScheduleKind::Uniform { t_min, t_max: t_min + width },
            ScheduleKind::MinDt { t_bar: t_min, scale: width },
        ];
        for kind in kinds {
            let s = generate_schedule(kind, horizon, &mut rng).unwrap();
            let mut prev = 0.0;
            for &t in &s.times {
                let gap = t - prev;
                prop_assert!(gap >= t_min * (1.0 - 1e-9), "{kind:?} gap {gap}");
                if let ScheduleKind::Uniform { t_max, .. } = kind {
                    prop_assert!(gap <= t_max * (1.0 + 1e-9) + 1e-12);
                }
                prop_assert!(t <= horizon + 1e-9);
                prev = t;
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_sum(v in prop::collection::vec(-1e3..1e3f64, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }
}
