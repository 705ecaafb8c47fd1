use gompertz_core::{
    c0, controls, endogenous_mortality, solve_u_star, validate, value_function, EfficacyModel, GridSpec, ModelParams,
    Regime,
};
use proptest::prelude::*;

fn params(gamma: f64, zeta: f64) -> ModelParams {
    ModelParams {
        gamma,
        zeta,
        ..ModelParams::calibrated()
    }
}

fn well_posed(p: &ModelParams, eff: &EfficacyModel) -> bool {
    validate(p, eff, Regime::AgingHealth).into_result().is_ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solved_curve_is_increasing_and_bracketed(
        a in 0.01f64..0.15,
        q in 0.3f64..0.7,
        gamma in 0.55f64..0.9,
        zeta in 0.2f64..0.8,
    ) {
        let p = params(gamma, zeta);
        let eff = EfficacyModel::isoelastic(a, q).unwrap();
        prop_assume!(well_posed(&p, &eff));
        let curve = solve_u_star(&p, &eff, &GridSpec::log(1e-5, 20.0, 48), 1e-8).unwrap();
        let u = curve.u();
        prop_assert!(u.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(curve.du().iter().all(|&d| d > 0.0));
        for (i, &m) in curve.nodes().iter().enumerate() {
            let floor = c0(m, &p).unwrap();
            prop_assert!(u[i] >= floor * (1.0 - 1e-9), "u {} below c0 {} at m {}", u[i], floor, m);
            prop_assert!(u[i] <= (floor + p.beta) * (1.0 + 1e-9));
            prop_assert!(curve.bracket_lo()[i] <= u[i] * (1.0 + 1e-6));
            prop_assert!(u[i] <= curve.bracket_hi()[i] * (1.0 + 1e-6));
            let ctl = controls(m, &curve, &eff).unwrap();
            prop_assert!(ctl.h >= 0.0 && ctl.h.is_finite());
        }
        prop_assert!(curve.max_relative_residual() < 1e-6);
    }

    #[test]
    fn healthcare_keeps_mortality_below_gompertz(a in 0.02f64..0.12, q in 0.35f64..0.6) {
        let p = ModelParams::calibrated();
        let eff = EfficacyModel::isoelastic(a, q).unwrap();
        prop_assume!(well_posed(&p, &eff));
        let curve = solve_u_star(&p, &eff, &GridSpec::log(1e-5, 20.0, 96), 1e-8).unwrap();
        let prof = endogenous_mortality(&p, &eff, &curve, (0.0, 90.0), (0.0, p.m0)).unwrap();
        for (i, (&t, &m)) in prof.ages.iter().zip(&prof.mortality).enumerate().skip(1) {
            prop_assert!(m < p.m0 * (p.beta * t).exp());
            prop_assert!(m > prof.mortality[i - 1]);
        }
    }

    #[test]
    fn value_is_homogeneous_in_wealth(x in 1e-3f64..1e3, scale in 1e-2f64..1e2, m in 1e-4f64..5.0) {
        let p = ModelParams::calibrated();
        let eff = EfficacyModel::isoelastic(0.1, 0.46).unwrap();
        let curve = solve_u_star(&p, &eff, &GridSpec::log(1e-5, 20.0, 64), 1e-8).unwrap();
        let r = value_function(scale * x, m, &curve).unwrap() / value_function(x, m, &curve).unwrap();
        prop_assert!((r / scale.powf(1.0 - p.gamma) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn zero_efficacy_spends_nothing_and_keeps_gompertz() {
    let p = ModelParams::calibrated();
    let curve = solve_u_star(&p, &EfficacyModel::Zero, &GridSpec::log(1e-5, 20.0, 64), 1e-8).unwrap();
    assert!(curve.h().iter().all(|&h| h == 0.0));
    let prof = endogenous_mortality(&p, &EfficacyModel::Zero, &curve, (0.0, 100.0), (0.0, p.m0)).unwrap();
    for (&t, &m) in prof.ages.iter().zip(&prof.mortality) {
        assert!((m / (p.m0 * (p.beta * t).exp()) - 1.0).abs() < 1e-10);
    }
}
