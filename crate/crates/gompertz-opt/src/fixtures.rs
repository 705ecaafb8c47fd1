//! Synthetic cohort tables with multiplicative lognormal noise.

use gompertz_core::{
    mortality_at_ages, solve_u_star, CohortTable, EfficacyModel, GridSpec, ModelParams, Result,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seed, noise and ages of the shipped fixtures.
pub const FIXTURE_SEED: u64 = 20_240_601;
pub const FIXTURE_NOISE: f64 = 0.02;
pub const FIXTURE_AGES: (u32, u32) = (0, 100);

fn noisy(ages: &[f64], hazards: &[f64], noise: f64, seed: u64, year: i32) -> Result<CohortTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(f64, f64)> = ages
        .iter()
        .zip(hazards)
        .map(|(&a, &h)| {
            let z: f64 = rng.sample(StandardNormal);
            (a, h * (noise * z).exp())
        })
        .collect();
    CohortTable::new(year, &rows)
}

/// Hazards `m0·e^{β·age}` with noise factor `e^{noise·Z}`.
pub fn gompertz_cohort(m0: f64, beta: f64, ages: &[f64], noise: f64, seed: u64, year: i32) -> Result<CohortTable> {
    let h: Vec<f64> = ages.iter().map(|a| m0 * (beta * a).exp()).collect();
    noisy(ages, &h, noise, seed, year)
}

/// Endogenous hazards of the model with `efficacy`, pinned at `(0, m0)`.
pub fn model_cohort(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    ages: &[f64],
    noise: f64,
    seed: u64,
    year: i32,
) -> Result<CohortTable> {
    let last = ages.last().copied().unwrap_or(0.0);
    let grid = GridSpec::log(0.25 * params.m0, 4.0 * params.m0 * (params.beta * last).exp(), 160);
    let curve = solve_u_star(params, efficacy, &grid, 1e-10)?;
    let h = mortality_at_ages(params, efficacy, &curve, (0.0, params.m0), ages)?;
    noisy(ages, &h, noise, seed, year)
}

pub fn fixture_ages() -> Vec<f64> {
    (FIXTURE_AGES.0..=FIXTURE_AGES.1).map(f64::from).collect()
}

/// The shipped early cohort: Gompertz hazards without healthcare.
pub fn fixture_1900() -> Result<CohortTable> {
    let p = ModelParams::calibrated();
    gompertz_cohort(p.m0, p.beta, &fixture_ages(), FIXTURE_NOISE, FIXTURE_SEED, 1900)
}

/// The shipped late cohort: endogenous hazards with `a = 0.1`, `q = 0.46`.
pub fn fixture_1940() -> Result<CohortTable> {
    let p = ModelParams::calibrated();
    let eff = EfficacyModel::isoelastic(0.1, 0.46)?;
    model_cohort(&p, &eff, &fixture_ages(), FIXTURE_NOISE, FIXTURE_SEED + 1, 1940)
}
