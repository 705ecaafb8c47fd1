//! Controls, endogenous mortality by age, the risky-asset equivalence and
//! the value function, all read off a solved [`PolicyCurve`].

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::efficacy::EfficacyModel;
use crate::error::{Error, Result};
use crate::hjb::PolicyCurve;
use crate::ode::{integrate, StepControl};
use crate::params::ModelParams;

const AGE_RTOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    /// Consumption as a fraction of wealth per year.
    pub c: f64,
    /// Healthcare spending as a fraction of wealth per year.
    pub h: f64,
}

/// Optimal consumption `u*(m)` and healthcare `I(k u*/(m u*'))` at hazard `m`.
pub fn controls(m: f64, curve: &PolicyCurve, efficacy: &EfficacyModel) -> Result<Controls> {
    let (u, du) = curve.interpolate(m)?;
    Ok(Controls {
        c: u,
        h: healthcare(m, u, du, curve.params().k(), efficacy),
    })
}

fn healthcare(m: f64, u: f64, du: f64, k: f64, efficacy: &EfficacyModel) -> f64 {
    let s = m * du;
    if efficacy.is_zero() || !(s > 0.0) {
        return 0.0;
    }
    efficacy.inverse_marginal(k * u / s)
}

/// Mortality, controls and healthcare share by age.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeProfile {
    pub ages: Vec<f64>,
    pub mortality: Vec<f64>,
    pub consumption_rate: Vec<f64>,
    pub health_rate: Vec<f64>,
    /// `h/(c + h)`.
    pub health_share: Vec<f64>,
}

/// Hazard at each of `ages` when mortality grows at `β − g(ĥ(M))` from
/// `anchor = (age, hazard)`. Ages on either side of the anchor are allowed.
pub fn mortality_at_ages(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    curve: &PolicyCurve,
    anchor: (f64, f64),
    ages: &[f64],
) -> Result<Vec<f64>> {
    let (t0, m0) = anchor;
    let (lo, hi) = curve.range();
    if !(m0 >= lo && m0 <= hi) {
        return Err(Error::OutOfRange { m: m0, min: lo, max: hi });
    }
    if ages.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("ages must be strictly increasing"));
    }
    let k = params.k();
    let beta = params.beta;
    let rhs = |_t: f64, y: f64| -> Result<f64> {
        let m = y.exp();
        let (u, du) = curve.interpolate(m)?;
        Ok(beta - efficacy.g(healthcare(m, u, du, k, efficacy)))
    };
    let ctl = StepControl::new(AGE_RTOL);
    let y0 = m0.ln();
    let split = ages.partition_point(|&a| a < t0);
    let mut before: Vec<f64> = ages[..split].iter().rev().copied().collect();
    let after = &ages[split..];
    let mut out = Vec::with_capacity(ages.len());
    if !before.is_empty() {
        let mut ys = integrate(rhs, t0, y0, &before, &ctl).map_err(tag_age)?;
        ys.reverse();
        before.clear();
        out.extend(ys.into_iter().map(f64::exp));
    }
    if !after.is_empty() {
        let ys = integrate(rhs, t0, y0, after, &ctl).map_err(tag_age)?;
        out.extend(ys.into_iter().map(f64::exp));
    }
    Ok(out)
}

fn tag_age(e: Error) -> Error {
    match e {
        Error::Integration { at, reason } => Error::Integration {
            at,
            reason: format!("mortality integration stopped after age {at}: {reason}"),
        },
        other => other,
    }
}

/// Yearly profile over `age_span` (inclusive of both ends) with mortality
/// pinned at `anchor = (age, hazard)`.
pub fn endogenous_mortality(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    curve: &PolicyCurve,
    age_span: (f64, f64),
    anchor: (f64, f64),
) -> Result<AgeProfile> {
    let (t0, t1) = age_span;
    if !(t1 > t0 && t0.is_finite() && t1.is_finite()) {
        return Err(Error::domain("age span must be finite and increasing"));
    }
    let n = (t1 - t0).floor() as usize;
    let mut ages: Vec<f64> = (0..=n).map(|i| t0 + i as f64).collect();
    if t1 - ages[n] > 1e-9 {
        ages.push(t1);
    }
    age_profile(params, efficacy, curve, anchor, &ages)
}

/// Profile at arbitrary increasing `ages`.
pub fn age_profile(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    curve: &PolicyCurve,
    anchor: (f64, f64),
    ages: &[f64],
) -> Result<AgeProfile> {
    let mortality = mortality_at_ages(params, efficacy, curve, anchor, ages)?;
    let mut consumption_rate = Vec::with_capacity(ages.len());
    let mut health_rate = Vec::with_capacity(ages.len());
    let mut health_share = Vec::with_capacity(ages.len());
    for &m in &mortality {
        let c = controls(m, curve, efficacy)?;
        consumption_rate.push(c.c);
        health_rate.push(c.h);
        health_share.push(c.h / (c.c + c.h));
    }
    Ok(AgeProfile {
        ages: ages.to_vec(),
        mortality,
        consumption_rate,
        health_rate,
        health_share,
    })
}

/// Optimal risky share `μ/(γσ²)` and the equivalent safe rate `r + μ²/(2γσ²)`.
pub fn portfolio_and_equivalent_rate(params: &ModelParams) -> Result<(f64, f64)> {
    if params.mu == 0.0 {
        return Ok((0.0, params.r));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::domain("sigma must be positive when mu != 0"));
    }
    let pi = params.mu / (params.gamma * params.sigma * params.sigma);
    Ok((pi, params.equivalent_rate()?))
}

/// `V(x, m) = x^(1−γ)/(1−γ) · u*(m)^(−γ)`.
pub fn value_function(x: f64, m: f64, curve: &PolicyCurve) -> Result<f64> {
    let g = curve.params().gamma;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("wealth x={x} must be finite and nonnegative")));
    }
    if x == 0.0 && g > 1.0 {
        return Err(Error::domain("value is -inf at zero wealth when γ > 1"));
    }
    let u = curve.u_at(m)?;
    Ok(x.powf(1.0 - g) / (1.0 - g) * u.powf(-g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::hjb::solve_u_star;

    fn p() -> ModelParams {
        ModelParams::calibrated()
    }
    fn iso() -> EfficacyModel {
        EfficacyModel::isoelastic(0.1, 0.46).unwrap()
    }
    fn curve(eff: &EfficacyModel, m_max: f64) -> PolicyCurve {
        solve_u_star(&p(), eff, &GridSpec::log(1e-5, m_max, 192), 1e-8).unwrap()
    }

    #[test]
    fn zero_efficacy_has_no_healthcare() {
        let c = curve(&EfficacyModel::Zero, 20.0);
        assert!(c.h().iter().all(|&h| h == 0.0));
        for m in [1e-4, 0.05, 3.3] {
            assert_eq!(controls(m, &c, &EfficacyModel::Zero).unwrap().h, 0.0);
        }
    }

    #[test]
    fn healthcare_rises_to_its_limit() {
        let c = curve(&iso(), 20.0);
        assert!(c.h().windows(2).all(|w| w[1] >= w[0]));
        let limit = iso().conjugate(p().k()).unwrap().h_star;
        let last = *c.h().last().unwrap();
        assert!((last / limit - 1.0).abs() < 0.05, "{last} vs {limit}");
        let k = p().k();
        for i in 0..c.nodes().len() {
            let (m, u, du, h) = (c.nodes()[i], c.u()[i], c.du()[i], c.h()[i]);
            let foc = iso().dg(h) * m * du / (k * u);
            assert!((foc - 1.0).abs() < 1e-9, "{foc}");
        }
    }

    #[test]
    fn controls_outside_grid_fail() {
        let c = curve(&iso(), 20.0);
        assert!(matches!(controls(21.0, &c, &iso()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn gompertz_without_healthcare() {
        let c = curve(&EfficacyModel::Zero, 20.0);
        let ages: Vec<f64> = (0..=100).map(f64::from).collect();
        let prof = age_profile(&p(), &EfficacyModel::Zero, &c, (0.0, p().m0), &ages).unwrap();
        for (&t, &m) in prof.ages.iter().zip(&prof.mortality) {
            assert!((m / (p().m0 * (p().beta * t).exp()) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn healthcare_lowers_mortality() {
        let c = curve(&iso(), 20.0);
        let prof = endogenous_mortality(&p(), &iso(), &c, (0.0, 100.0), (0.0, p().m0)).unwrap();
        assert_eq!(prof.ages.len(), 101);
        let m40 = prof.mortality[40];
        assert!(m40 < p().m0 * (p().beta * 40.0).exp());
        for w in prof.mortality.windows(2) {
            assert!(w[1] > w[0]);
        }
        for (i, &t) in prof.ages.iter().enumerate().skip(1) {
            assert!(prof.mortality[i] < p().m0 * (p().beta * t).exp());
            assert!((0.0..1.0).contains(&prof.health_share[i]));
        }
    }

    #[test]
    fn anchor_may_sit_inside_the_span() {
        let c = curve(&iso(), 20.0);
        let full = endogenous_mortality(&p(), &iso(), &c, (0.0, 90.0), (0.0, p().m0)).unwrap();
        let mid = endogenous_mortality(&p(), &iso(), &c, (0.0, 90.0), (50.0, full.mortality[50])).unwrap();
        for (a, b) in full.mortality.iter().zip(&mid.mortality) {
            assert!((a / b - 1.0).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn mortality_growth_becomes_exponential() {
        let c = curve(&iso(), 400.0);
        let ages: Vec<f64> = (0..=420).map(f64::from).collect();
        let m = mortality_at_ages(&p(), &iso(), &c, (0.0, p().m0), &ages).unwrap();
        let limit = p().beta - iso().g_at_inverse(p().k());
        assert!((limit - 0.021).abs() < 5e-4, "{limit}");
        let slopes: Vec<f64> = m.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let first = m.iter().position(|&v| v >= 5.0).unwrap();
        // Growth decreases toward the limit from above.
        for w in slopes[first..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9 && w[1] > limit, "{w:?}");
        }
        assert!((slopes[first] / limit - 1.0).abs() < 0.1, "{}", slopes[first]);
        assert!((slopes.last().unwrap() / limit - 1.0).abs() < 0.01);
        let tail = &slopes[slopes.len() - 10..];
        let mean = tail.iter().sum::<f64>() / 10.0;
        let var = tail.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 10.0;
        assert!(var < 1e-6);
    }

    #[test]
    fn health_share_rises_then_stalls() {
        let c = curve(&iso(), 400.0);
        let share: Vec<f64> = c.u().iter().zip(c.h()).map(|(u, h)| h / (u + h)).collect();
        for i in 1..c.nodes().len() {
            if c.nodes()[i - 1] >= 1e-4 && c.nodes()[i] <= 1e-1 {
                assert!(share[i] > share[i - 1], "at {}", c.nodes()[i]);
            }
        }
        let limit = iso().conjugate(p().k()).unwrap().h_star;
        let start = c.h().iter().position(|&h| h >= 0.99 * limit).unwrap();
        for i in start + 1..share.len() {
            assert!(share[i] <= share[i - 1]);
        }
    }

    #[test]
    fn portfolio_rule() {
        assert_eq!(portfolio_and_equivalent_rate(&p()).unwrap(), (0.0, 0.01));
        let mut q = p();
        q.mu = 0.04;
        q.sigma = 0.2;
        let (pi, r_eq) = portfolio_and_equivalent_rate(&q).unwrap();
        assert!((pi - 1.4925).abs() < 1e-4 && (r_eq - 0.0399).abs() < 1e-4);
        // First-order condition −μ V_x / (σ² x V_xx) from differences of V(x) ∝ x^(1−γ).
        let v = |x: f64| x.powf(1.0 - q.gamma) / (1.0 - q.gamma);
        let (x, d) = (1.3, 1e-4);
        let vx = (v(x + d) - v(x - d)) / (2.0 * d);
        let vxx = (v(x + d) - 2.0 * v(x) + v(x - d)) / (d * d);
        assert!((-q.mu * vx / (q.sigma * q.sigma * x * vxx) / pi - 1.0).abs() < 1e-6);
        let mut q2 = q;
        q2.mu *= 2.0;
        q2.sigma *= 2.0;
        let (pi2, r2) = portfolio_and_equivalent_rate(&q2).unwrap();
        assert!((pi2 - pi / 2.0).abs() < 1e-15 && (r2 - r_eq).abs() < 1e-15);
        q.sigma = 0.0;
        assert!(portfolio_and_equivalent_rate(&q).is_err());
    }

    #[test]
    fn value_function_homogeneity() {
        let c = curve(&iso(), 20.0);
        assert_eq!(value_function(0.0, 0.01, &c).unwrap(), 0.0);
        let r = value_function(2.0, 0.01, &c).unwrap() / value_function(1.0, 0.01, &c).unwrap();
        assert!((r - 2f64.powf(1.0 - p().gamma)).abs() < 1e-14);
        assert!(value_function(-1.0, 0.01, &c).is_err());
    }
}
