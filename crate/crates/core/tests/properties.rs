use cpf_core::analytic::NoiseModel;
use cpf_core::spinbath::lorentz::{lorentz_conditional_coherence, lorentz_cpf};
use cpf_core::spinbath::oracle::{oracle_protocol, SystemInit};
use cpf_core::{
    cpf_from_moments, cpf_from_table, cpf_probability_table, MomentSet, Outcome, SpinBathSpec,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Plus), Just(Outcome::Minus)]
}

/// Moment sets whose table entries are all in [0, 1].
fn feasible_moments() -> impl Strategy<Value = MomentSet> {
    (-1.0f64..=1.0, -1.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b, u)| {
        let lo = (a + b).abs() - 1.0;
        let hi = 1.0 - (a - b).abs();
        MomentSet::new(a, b, lo + u * (hi - lo)).unwrap()
    })
}

fn noise_model() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        (0.01f64..5.0).prop_map(|w| NoiseModel::white(w).unwrap()),
        (0.05f64..3.0, 0.01f64..50.0).prop_map(|(g, c)| NoiseModel::exp_corr_gauss(g, c).unwrap()),
        (0.05f64..3.0).prop_map(|g| NoiseModel::static_gauss(g).unwrap()),
        (0.05f64..3.0, -3.0f64..3.0).prop_map(|(g, w)| NoiseModel::static_lorentz(g, w).unwrap()),
    ]
}

fn spin_bath(max_n: usize) -> impl Strategy<Value = SpinBathSpec> {
    prop::collection::vec(
        (
            -2.0f64..2.0,
            0.0f64..std::f64::consts::PI,
            0.0f64..6.3,
            0.0f64..6.3,
        ),
        1..=max_n,
    )
    .prop_map(|spins| {
        let g = spins.iter().map(|s| s.0).collect();
        let a = spins
            .iter()
            .map(|s| Complex64::from_polar((s.1 / 2.0).cos(), s.2))
            .collect();
        let b = spins
            .iter()
            .map(|s| Complex64::from_polar((s.1 / 2.0).sin(), s.3))
            .collect();
        SpinBathSpec::new(g, a, b).unwrap()
    })
}

proptest! {
    #[test]
    fn table_round_trip(m in feasible_moments(), y in outcome()) {
        let tbl = cpf_probability_table(&m, y).unwrap();
        prop_assert!((cpf_from_table(&tbl) - cpf_from_moments(&m).unwrap()).abs() <= 1e-12);
        prop_assert!((tbl.total() - 1.0).abs() <= 1e-12);
        for x in Outcome::BOTH {
            prop_assert!((tbl.marginal_x(x) - (1.0 + x.sign() * y.sign() * m.f_t) / 2.0).abs() <= 1e-12);
            prop_assert!((tbl.marginal_z(x) - (1.0 + x.sign() * y.sign() * m.f_tau) / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn y_relabeling(m in feasible_moments()) {
        let p = cpf_probability_table(&m, Outcome::Plus).unwrap();
        let q = cpf_probability_table(&m, Outcome::Minus).unwrap();
        let r = p.relabeled();
        for z in Outcome::BOTH {
            for x in Outcome::BOTH {
                prop_assert_eq!(r.entry(z, x), q.entry(z, x));
            }
        }
        prop_assert!((cpf_from_table(&p) - cpf_from_table(&q)).abs() <= 1e-15);
    }

    #[test]
    fn noise_models_give_valid_tables(model in noise_model(), t in 0.0f64..6.0, tau in 0.0f64..6.0, y in outcome()) {
        let m = model.moments(t, tau).unwrap();
        prop_assert!(m.f_joint.abs() <= 1.0 + 1e-12);
        cpf_probability_table(&m, y).unwrap();
        prop_assert!(model.cpf(t, 0.0).unwrap().abs() < 1e-15);
        prop_assert!(model.cpf(0.0, tau).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gaussian_cpf_nonnegative(g in 0.05f64..3.0, c in 0.01f64..100.0, t in 0.0f64..5.0, tau in 0.0f64..5.0) {
        let ou = NoiseModel::exp_corr_gauss(g, c).unwrap();
        prop_assert!(ou.joint_moment(t, tau).unwrap() >= ou.first_moment(t).unwrap() * ou.first_moment(tau).unwrap());
        prop_assert!(ou.cpf(t, tau).unwrap() >= 0.0);
    }

    #[test]
    fn conditional_coherence_bounded(model in noise_model(), t in 0.01f64..6.0, tau in 0.0f64..6.0, yx in outcome()) {
        if let Ok(c) = model.conditional_coherence(t, tau, yx) {
            prop_assert!(c.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn lorentz_closed_forms(gamma in 0.01f64..5.0, t in 0.01f64..10.0, tau in 0.0f64..10.0, yx in outcome()) {
        let c = lorentz_conditional_coherence(gamma, t, tau, yx).unwrap();
        prop_assert!(c.abs() <= 1.0 + 1e-12);
        let cpf = lorentz_cpf(gamma, t, tau).unwrap();
        prop_assert!((0.0..=0.5).contains(&cpf));
    }

    #[test]
    fn single_spin_has_no_correlation(spec in spin_bath(1), t in 0.0f64..10.0, tau in 0.0f64..10.0) {
        prop_assert!(spec.cpf(t, tau).unwrap().abs() < 1e-14);
    }

    #[test]
    fn spin_bath_coherence_bounded(spec in spin_bath(20), t in 0.0f64..10.0) {
        prop_assert!(spec.coherence(t).unwrap().norm() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_matches_product_formula(spec in spin_bath(8), t in 0.0f64..4.0, tau in 0.0f64..4.0, y in outcome()) {
        let o = oracle_protocol(&spec, &SystemInit::plus(), t, tau, y).unwrap();
        let p = spec.cpf_probability(t, tau, y).unwrap();
        for z in Outcome::BOTH {
            for x in Outcome::BOTH {
                prop_assert!((o.entry(z, x) - p.entry(z, x)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn edge_tables_have_exact_zeros() {
    let models = [
        NoiseModel::white(0.3).unwrap(),
        NoiseModel::exp_corr_gauss(1.0, 0.4).unwrap(),
        NoiseModel::static_gauss(1.0).unwrap(),
        NoiseModel::static_lorentz(1.0, 2.0).unwrap(),
    ];
    for m in &models {
        for k in 0..40 {
            let t = 0.1 * k as f64;
            for y in Outcome::BOTH {
                for (a, b) in [(t, 0.0), (0.0, t)] {
                    let tbl = cpf_probability_table(&m.moments(a, b).unwrap(), y).unwrap();
                    for z in Outcome::BOTH {
                        for x in Outcome::BOTH {
                            assert!(
                                tbl.entry(z, x) >= 0.0,
                                "{m:?} ({a}, {b}) {:?}",
                                tbl.entries()
                            );
                        }
                    }
                }
            }
        }
    }
}
