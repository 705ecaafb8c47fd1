use std::sync::Arc;

use gompertz_core::{solve_u_star, EfficacyModel, GridSpec, ModelParams, PolicyCurve};
use gompertz_opt::sim::{optimality_probe, pairwise_sum, simulate, Perturbation, Policy, SimConfig};
use proptest::prelude::*;

fn calibrated() -> ModelParams {
    ModelParams::calibrated()
}

fn iso() -> EfficacyModel {
    EfficacyModel::isoelastic(0.1, 0.46).unwrap()
}

fn curve() -> PolicyCurve {
    solve_u_star(&calibrated(), &iso(), &GridSpec::log(1e-5, 1000.0, 160), 1e-8).unwrap()
}

fn cfg(n_paths: usize, horizon: f64, seed: u64) -> SimConfig {
    SimConfig {
        n_paths,
        horizon,
        seed,
        ..SimConfig::default()
    }
}

/// Welfare of constant rates when deaths cost nothing and wealth is safe.
fn closed_form_safe(p: &ModelParams, c: f64, h: f64) -> f64 {
    let g1 = 1.0 - p.gamma;
    c.powf(g1) / g1 / (p.delta - g1 * (p.r - c - h))
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn same_seed_is_bit_identical_across_thread_counts() {
    let c = curve();
    let run = || simulate(&calibrated(), &iso(), Policy::Analytic(&c), &cfg(400, 120.0, 11)).unwrap();
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    let again = in_pool(4, run);
    let bits = |o: &gompertz_opt::sim::SimOutcome| o.welfare.iter().map(|w| w.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&four));
    assert_eq!(bits(&four), bits(&again));
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    assert_eq!(one.first_death, four.first_death);

    let other = simulate(&calibrated(), &iso(), Policy::Analytic(&c), &cfg(400, 120.0, 12)).unwrap();
    assert_ne!(bits(&one), bits(&other));
}

#[test]
fn costless_deaths_give_deterministic_welfare() {
    let p = ModelParams {
        beta: 0.0,
        m0: 0.02,
        zeta: 1.0,
        ..calibrated()
    };
    let (c, h) = (0.05, 0.0);
    let out = simulate(&p, &EfficacyModel::Zero, Policy::ConstantRates { c, h }, &cfg(64, 1500.0, 5)).unwrap();
    let exact = closed_form_safe(&p, c, h);
    assert!(out.n_deaths.iter().any(|&n| n > 0));
    for w in &out.welfare {
        assert!((w / exact - 1.0).abs() < 1e-9, "{w} vs {exact}");
    }
    assert!(out.std_err <= 1e-9 * exact);
}

#[test]
fn truncation_bound_covers_a_longer_horizon() {
    let c = curve();
    let short = simulate(&calibrated(), &iso(), Policy::Analytic(&c), &cfg(2000, 30.0, 7)).unwrap();
    let long = simulate(&calibrated(), &iso(), Policy::Analytic(&c), &cfg(2000, 50.0, 7)).unwrap();
    let diffs: Vec<f64> = short.welfare.iter().zip(&long.welfare).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let mean = pairwise_sum(&diffs) / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!(mean.abs() <= short.truncation_bound + 3.0 * se, "{mean} vs {} + 3·{se}", short.truncation_bound);
    assert!(long.truncation_bound < short.truncation_bound);
    assert!(!short.horizon_adequate);
}

#[test]
fn custom_policy_matches_constant_rates() {
    let (c, h) = (0.04, 0.01);
    let f: gompertz_opt::sim::PolicyFn = Arc::new(move |_, _, _| (c, h));
    let a = simulate(&calibrated(), &iso(), Policy::ConstantRates { c, h }, &cfg(300, 80.0, 9)).unwrap();
    let b = simulate(&calibrated(), &iso(), Policy::Custom(f), &cfg(300, 80.0, 9)).unwrap();
    for (x, y) in a.welfare.iter().zip(&b.welfare) {
        assert!((x / y - 1.0).abs() < 1e-12, "{x} vs {y}");
    }
    assert_eq!(a.n_deaths, b.n_deaths);
}

#[test]
fn invalid_custom_rates_name_the_time() {
    let f: gompertz_opt::sim::PolicyFn = Arc::new(|t, _, _| if t < 2.0 { (0.05, 0.0) } else { (-1.0, 0.0) });
    let e = simulate(&calibrated(), &iso(), Policy::Custom(f), &cfg(4, 10.0, 1)).unwrap_err().to_string();
    assert!(e.contains("c=-1") && e.contains("t=2"), "{e}");

    let g: gompertz_opt::sim::PolicyFn = Arc::new(|_, _, _| (0.05, f64::NAN));
    assert!(simulate(&calibrated(), &iso(), Policy::Custom(g), &cfg(4, 10.0, 1)).is_err());
}

#[test]
fn risky_constant_mortality_matches_closed_form() {
    let p = ModelParams {
        beta: 0.0,
        m0: 0.02,
        delta: 0.03,
        mu: 0.04,
        sigma: 0.2,
        ..calibrated()
    };
    let (c, h) = (0.05, 0.0);
    let g1 = 1.0 - p.gamma;
    let pi = p.mu / (p.gamma * p.sigma * p.sigma);
    let var = (p.sigma * pi).powi(2);
    let lambda = -p.delta + g1 * (p.r + p.mu * pi - c - h - 0.5 * var) + 0.5 * g1 * g1 * var;
    let exact = c.powf(g1) / g1 / (-lambda + p.m0 * (1.0 - p.zeta.powf(g1)));

    let mut config = cfg(20_000, 400.0, 21);
    config.risky = true;
    let out = simulate(&p, &EfficacyModel::Zero, Policy::ConstantRates { c, h }, &config).unwrap();
    assert!(out.std_err > 0.0);
    assert!(
        (out.mean - exact).abs() < 4.0 * out.std_err + out.truncation_bound,
        "{} ± {} vs {exact}",
        out.mean,
        out.std_err
    );

    config.risky = false;
    assert!(simulate(&p, &EfficacyModel::Zero, Policy::ConstantRates { c, h }, &config).is_err());
}

#[test]
fn unit_scaling_reproduces_the_analytic_policy() {
    let c = curve();
    let config = cfg(300, 100.0, 4);
    let a = simulate(&calibrated(), &iso(), Policy::Analytic(&c), &config).unwrap();
    let b = simulate(
        &calibrated(),
        &iso(),
        Policy::ScaledAnalytic {
            curve: &c,
            c_scale: 1.0,
            h_scale: 1.0,
        },
        &config,
    )
    .unwrap();
    assert_eq!(a.welfare, b.welfare);

    let probe = optimality_probe(&calibrated(), &iso(), &c, Perturbation::ScaleC(1.0), &config).unwrap();
    assert_eq!(probe.base, probe.perturbed);
    assert!(!probe.significant_worse);
    assert!(optimality_probe(&calibrated(), &iso(), &c, Perturbation::ScaleH(2.5), &config).is_err());
}

#[test]
fn recorded_deaths_agree_with_counts() {
    let mut config = cfg(200, 100.0, 8);
    config.record_deaths = true;
    let out = simulate(&calibrated(), &iso(), Policy::ConstantRates { c: 0.05, h: 0.01 }, &config).unwrap();
    let deaths = out.death_times.as_ref().unwrap();
    for i in 0..out.welfare.len() {
        assert_eq!(deaths[i].len(), out.n_deaths[i] as usize);
        assert!(deaths[i].windows(2).all(|w| w[0] < w[1]));
        match deaths[i].first() {
            Some(t) => assert_eq!(*t, out.first_death[i]),
            None => assert!(out.first_death[i].is_infinite()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_rates_without_death_cost_match_closed_form(c in 0.01f64..0.2, h in 0.0f64..0.05) {
        let p = ModelParams { beta: 0.0, m0: 0.01, zeta: 1.0, ..calibrated() };
        let out = simulate(&p, &EfficacyModel::Zero, Policy::ConstantRates { c, h }, &cfg(4, 3000.0, 0)).unwrap();
        let exact = closed_form_safe(&p, c, h);
        prop_assert!((out.mean / exact - 1.0).abs() < 1e-8, "{} vs {}", out.mean, exact);
    }

    #[test]
    fn pairwise_sum_matches_naive_sum(xs in prop::collection::vec(-1e3f64..1e3, 0..200)) {
        let naive: f64 = xs.iter().sum();
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-12 * scale);
    }
}
