use corrdet_core::joint_design::c_tilde;
use corrdet_core::*;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|var_z| NoiseModel::Gaussian { var_z }),
        (0.5f64..5.0).prop_map(|q| NoiseModel::Laplacian { q }),
        (0.1f64..8.0).prop_map(|z0| NoiseModel::BinarySymmetric { z0 }),
        (0.1f64..8.0).prop_map(|z0| NoiseModel::Uniform { z0 }),
        (0.05f64..0.95, 0.1f64..3.0, 0.5f64..5.0)
            .prop_map(|(delta, z0, q)| NoiseModel::MixtureBinaryLaplace { delta, z0, q }),
    ]
}

/// A point strictly inside the CGF domain, as a fraction of its extent.
fn inside(m: &NoiseModel, frac: f64) -> f64 {
    match m.pole() {
        Some(q) => 0.95 * q * frac,
        None => 10.0 * frac,
    }
}

fn joint() -> impl Strategy<Value = JointAtoms> {
    prop::collection::vec((-2.0f64..2.0, -3.0f64..3.0, 0.1f64..1.0), 1..6).prop_map(|v| {
        JointAtoms::normalized(v.into_iter().map(|(w, s, weight)| Atom { w, s, weight }).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cgf_is_symmetric(m in model(), f in -1.0f64..1.0) {
        let v = inside(&m, f);
        prop_assert!((m.cgf(v).unwrap() - m.cgf(-v).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cgf_is_convex(m in model(), f in -0.9f64..0.9, hf in 0.001f64..0.09) {
        let (v, h) = (inside(&m, f), inside(&m, hf));
        let d2 = m.cgf(v + h).unwrap() + m.cgf(v - h).unwrap() - 2.0 * m.cgf(v).unwrap();
        prop_assert!(d2 >= -1e-10);
        prop_assert!(m.cgf_deriv(v + h).unwrap() >= m.cgf_deriv(v).unwrap() - 1e-12);
    }

    #[test]
    fn md_objective_is_concave_in_tilt(m in model(), j in joint(), theta in 0.0f64..2.0,
                                       a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let budget = PowerBudget::new(1.0, 1.0).unwrap();
        let lim = m.feasible_limit().min(50.0) / j.max_abs_w().max(1e-9);
        let (l1, l2) = (a.min(b) * 0.9 * lim, a.max(b) * 0.9 * lim);
        let f = |l: f64| md_objective(&j, l, theta, &budget, &m).unwrap();
        prop_assert!(f(0.5 * (l1 + l2)) >= 0.5 * (f(l1) + f(l2)) - 1e-10 * (1.0 + f(l1).abs() + f(l2).abs()));
    }

    #[test]
    fn md_exponent_dominates_probes_and_falls_in_threshold(m in model(), j in joint(),
                                                            theta in 0.0f64..1.0, probe in 0.0f64..1.0) {
        let budget = PowerBudget::new(1.0, 1.0).unwrap();
        let e = md_exponent(&j, theta, &budget, &m);
        prop_assert!(e.value >= 0.0);
        let lim = m.feasible_limit().min(50.0) / j.max_abs_w().max(1e-9);
        let p = md_objective(&j, probe * 0.9 * lim, theta, &budget, &m).unwrap();
        prop_assert!(e.value >= p - 1e-9 * (1.0 + p.abs()));
        let higher = md_exponent(&j, theta + 0.3, &budget, &m);
        prop_assert!(higher.value <= e.value + 1e-9);
    }

    #[test]
    fn exponent_is_invariant_to_joint_scaling(m in model(), j in joint(), theta in 0.0f64..1.0, c in 0.2f64..5.0) {
        let budget = PowerBudget::new(1.0, 1.0).unwrap();
        let scaled = PowerBudget::new(c * c, 1.0).unwrap();
        let a = md_exponent(&j, theta, &budget, &m).value;
        let b = md_exponent(&j.scale_weights(c), c * theta, &scaled, &m).value;
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a), "{} vs {}", a, b);
    }

    #[test]
    fn threshold_round_trip(e in 0.0f64..5.0, p_w in 0.1f64..10.0, var_n in 0.1f64..10.0) {
        let b = PowerBudget::new(p_w, var_n).unwrap();
        prop_assert!((fa_exponent(theta_for_fa(e, &b), &b) - e).abs() < 1e-12 * (1.0 + e));
    }

    #[test]
    fn g_inverse_round_trip(m in model(), s in -20.0f64..20.0, rho in 0.0f64..3.0, lambda in 0.05f64..3.0) {
        let w = g_inverse(&m, s, rho, lambda, 1.0);
        let g = g_eval(&m, w, rho, lambda, 1.0).unwrap();
        prop_assert!((g - s).abs() < 1e-9 * (1.0 + s.abs()));
    }

    #[test]
    fn energy_fa_exponent_is_monotone(theta in 0.0f64..3.0, alpha in 0.0f64..1.0, p_w in 0.2f64..4.0) {
        let b = PowerBudget::new(p_w, 1.0).unwrap();
        let base = fa_exponent_energy(theta, &b, alpha).value;
        prop_assert!(base >= 0.0);
        prop_assert!(fa_exponent_energy(theta, &b.with_p_w(p_w * 1.5), alpha).value <= base + 1e-12);
        prop_assert!(fa_exponent_energy(theta + 0.2, &b, alpha).value >= base - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn envelope_is_convex_and_below_function(m in model(), lambda in 0.2f64..2.0) {
        let cap = match m.pole() {
            Some(q) => 0.9 * (q / lambda).powi(2),
            None => 50.0,
        };
        let ps: Vec<f64> = (1..40).map(|i| cap * i as f64 / 40.0).collect();
        let vals: Vec<f64> = ps.iter().map(|&p| c_tilde(&m, lambda, p, cap).unwrap().value).collect();
        for (p, v) in ps.iter().zip(&vals) {
            prop_assert!(*v <= m.cgf(lambda * p.sqrt()).unwrap() + 1e-12);
        }
        for w in vals.windows(3) {
            prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10 * (1.0 + w[1].abs()));
        }
    }
}
