//! Economic, preference and mortality parameters and the well-posedness
//! conditions of each regime.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::efficacy::EfficacyModel;
use crate::error::{Error, Result};

/// Household and market parameters. All rates are per year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Safe interest rate.
    pub r: f64,
    /// Time preference rate δ.
    pub delta: f64,
    /// Natural mortality growth β.
    pub beta: f64,
    /// Relative risk aversion γ; positive and different from one.
    pub gamma: f64,
    /// Fraction ζ of household wealth retained at each death, in [0, 1].
    pub zeta: f64,
    /// Excess drift μ of the risky asset.
    pub mu: f64,
    /// Volatility σ of the risky asset; positive whenever `mu != 0`.
    pub sigma: f64,
    /// Initial mortality hazard.
    pub m0: f64,
}

impl ModelParams {
    /// US calibration: r = δ = 1%, β = 7.7%, γ = 0.67, ζ = 0.5,
    /// m0 = 0.019% at age 0, no risky asset.
    pub const fn calibrated() -> Self {
        ModelParams {
            r: 0.01,
            delta: 0.01,
            beta: 0.077,
            gamma: 0.67,
            zeta: 0.5,
            mu: 0.0,
            sigma: 0.0,
            m0: 0.00019,
        }
    }

    /// Field-level invariants. Regime conditions are in [`validate`].
    pub fn check(&self) -> Result<()> {
        let fields = [
            ("r", self.r),
            ("delta", self.delta),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("m0", self.m0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.gamma <= 0.0 || self.gamma == 1.0 {
            return Err(Error::invalid("gamma", "must be positive and different from 1"));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(Error::invalid("zeta", "must lie in [0, 1]"));
        }
        if self.beta < 0.0 {
            return Err(Error::invalid("beta", "must be nonnegative"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma", "must be nonnegative"));
        }
        if self.mu != 0.0 && self.sigma == 0.0 {
            return Err(Error::invalid("sigma", "must be positive when mu != 0"));
        }
        if self.m0 < 0.0 {
            return Err(Error::invalid("m0", "must be nonnegative"));
        }
        Ok(())
    }

    /// Safe rate that makes a riskless market equivalent to the one with
    /// the risky asset: `r + μ²/(2γσ²)`.
    pub fn equivalent_rate(&self) -> Result<f64> {
        if self.mu == 0.0 {
            return Ok(self.r);
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain("sigma must be positive when mu != 0"));
        }
        Ok(self.r + self.mu * self.mu / (2.0 * self.gamma * self.sigma * self.sigma))
    }

    /// Forever-young consumption rate at zero hazard, `δ/γ + (1 − 1/γ) r_eq`.
    pub fn c_bar(&self) -> Result<f64> {
        let r_eq = self.equivalent_rate()?;
        Ok(self.delta / self.gamma + (1.0 - 1.0 / self.gamma) * r_eq)
    }

    /// Utility cost of one death, `1 − ζ^(1−γ)`.
    pub fn death_cost(&self) -> f64 {
        1.0 - self.zeta.powf(1.0 - self.gamma)
    }

    /// Slope of `c0` in the hazard, `(1 − ζ^(1−γ))/γ`.
    pub fn c0_slope(&self) -> f64 {
        self.death_cost() / self.gamma
    }

    /// Price of healthcare in units of consumption rate, `(1 − γ)/γ`.
    pub fn k(&self) -> f64 {
        (1.0 - self.gamma) / self.gamma
    }
}

/// Which sub-model a set of parameters is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Constant hazard `m`, no healthcare.
    ConstMortality(f64),
    /// Gompertz aging at rate β, no healthcare.
    AgingNoHealth,
    /// Gompertz aging slowed by optimal healthcare.
    AgingHealth,
}

/// One evaluated inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// The inequality that must hold.
    pub requirement: &'static str,
    /// How the failure is reported.
    pub violation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub regime: Regime,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// `Ok` when the regime is well posed, otherwise the first violated condition.
    pub fn into_result(self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        match self.first_failure() {
            Some(c) => Err(Error::Condition {
                condition: c.violation.into(),
                lhs: c.lhs,
                rhs: c.rhs,
            }),
            None => Err(Error::Condition {
                condition: "no admissible parameter case holds".into(),
                lhs: f64::NAN,
                rhs: f64::NAN,
            }),
        }
    }
}

fn check(
    name: &'static str,
    requirement: &'static str,
    violation: &'static str,
    lhs: f64,
    rhs: f64,
    passed: bool,
) -> Check {
    Check {
        name,
        requirement,
        violation,
        lhs,
        rhs,
        passed,
    }
}

/// Evaluates every condition of `regime`. Never fails; inspect `passed`.
pub fn validate(params: &ModelParams, efficacy: &EfficacyModel, regime: Regime) -> ValidationReport {
    let mut checks = Vec::new();
    let fields_ok = params.check().is_ok();
    checks.push(check(
        "parameter_domain",
        "γ > 0, γ ≠ 1, ζ ∈ [0,1], β ≥ 0, σ > 0 if μ ≠ 0, m0 ≥ 0",
        "parameter outside its domain",
        0.0,
        0.0,
        fields_ok,
    ));
    let r_eq = params.equivalent_rate().unwrap_or(f64::NAN);
    let c_bar = params.c_bar().unwrap_or(f64::NAN);
    let g = params.gamma;
    let z = params.zeta;

    let passed = match regime {
        Regime::ConstMortality(m) => {
            let lhs = params.delta + params.death_cost() * m - (1.0 - g) * r_eq;
            checks.push(check(
                "hazard_nonnegative",
                "m ≥ 0",
                "m < 0",
                m,
                0.0,
                m >= 0.0,
            ));
            checks.push(check(
                "assumption_0",
                "δ + (1-ζ^(1-γ))m - (1-γ)r > 0",
                "δ + (1-ζ^(1-γ))m - (1-γ)r ≤ 0",
                lhs,
                0.0,
                lhs > 0.0,
            ));
            fields_ok && m >= 0.0 && lhs > 0.0
        }
        Regime::AgingNoHealth => {
            let beta_ok = params.beta > 0.0;
            checks.push(check("beta_positive", "β > 0", "β ≤ 0", params.beta, 0.0, beta_ok));
            let i_gamma = g > 0.0 && g < 1.0;
            let i_zeta = z > 0.0 && z < 1.0;
            let i_cbar = c_bar > 0.0;
            checks.push(check("case_i_gamma", "0 < γ < 1", "γ ∉ (0,1)", g, 1.0, i_gamma));
            checks.push(check("case_i_zeta", "0 < ζ < 1", "ζ ∉ (0,1)", z, 1.0, i_zeta));
            checks.push(check("case_i_c_bar", "c̄ > 0", "c̄ ≤ 0", c_bar, 0.0, i_cbar));
            let ii = g > 1.0 && z > 1.0;
            checks.push(check("case_ii", "γ > 1 and ζ > 1", "γ ≤ 1 or ζ ≤ 1", g, z, ii));
            let case_i = i_gamma && i_zeta && i_cbar;
            fields_ok && beta_ok && (case_i || ii)
        }
        Regime::AgingHealth => {
            let gamma_ok = g > 0.0 && g < 1.0;
            checks.push(check("gamma_below_one", "0 < γ < 1", "γ ∉ (0,1)", g, 1.0, gamma_ok));
            let zeta_ok = z > 0.0 && z < 1.0;
            checks.push(check("zeta_in_unit_interval", "0 < ζ < 1", "ζ ∉ (0,1)", z, 1.0, zeta_ok));
            let cbar_ok = c_bar > 0.0;
            checks.push(check("c_bar_positive", "c̄ > 0", "c̄ ≤ 0", c_bar, 0.0, cbar_ok));
            let lhs = if gamma_ok {
                efficacy.g_at_inverse(params.k())
            } else {
                f64::NAN
            };
            let g_ok = lhs < params.beta;
            checks.push(check(
                "g_below_beta",
                "g(I((1-γ)/γ)) < β",
                "g(I((1-γ)/γ)) ≥ β",
                lhs,
                params.beta,
                g_ok,
            ));
            fields_ok && gamma_ok && zeta_ok && cbar_ok && g_ok
        }
    };

    ValidationReport {
        regime,
        checks,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_params_pass_aging_health() {
        let p = ModelParams::calibrated();
        let eff = EfficacyModel::isoelastic(0.1, 0.46).unwrap();
        let rep = validate(&p, &eff, Regime::AgingHealth);
        assert!(rep.passed, "{rep:?}");
        let g = rep.checks.iter().find(|c| c.name == "g_below_beta").unwrap();
        // Oracle: maximize g(h) - k h on a dense grid, then evaluate g at the maximizer.
        let k = p.k();
        let (mut best_h, mut best) = (0.0, f64::MIN);
        for i in 1..=200_000 {
            let h = i as f64 * 1e-6;
            let v = 0.1 * h.powf(0.46) / 0.46 - k * h;
            if v > best {
                best = v;
                best_h = h;
            }
        }
        let g_oracle = 0.1 * best_h.powf(0.46) / 0.46;
        assert!((g.lhs - g_oracle).abs() < 1e-5, "{} vs {}", g.lhs, g_oracle);
        assert!((g.lhs - 0.056).abs() < 5e-4);
        assert_eq!(g.rhs, 0.077);
    }

    #[test]
    fn zeta_one_reduces_assumption_0() {
        let mut p = ModelParams::calibrated();
        p.zeta = 1.0;
        p.delta = 0.02;
        for m in [0.0, 0.5, 3.0] {
            let rep = validate(&p, &EfficacyModel::Zero, Regime::ConstMortality(m));
            let c = rep.checks.iter().find(|c| c.name == "assumption_0").unwrap();
            assert_eq!(c.lhs, p.delta + (p.gamma - 1.0) * p.r);
        }
    }

    #[test]
    fn risk_averse_household_with_partial_retention_fails_aging_no_health() {
        let mut p = ModelParams::calibrated();
        p.gamma = 1.5;
        p.zeta = 0.5;
        let rep = validate(&p, &EfficacyModel::Zero, Regime::AgingNoHealth);
        assert!(!rep.passed);
        assert!(rep.into_result().is_err());
    }

    #[test]
    fn strong_efficacy_names_violated_condition() {
        let p = ModelParams::calibrated();
        let eff = EfficacyModel::isoelastic(0.5, 0.46).unwrap();
        let err = validate(&p, &eff, Regime::AgingHealth).into_result().unwrap_err();
        match err {
            Error::Condition { condition, lhs, rhs } => {
                assert_eq!(condition, "g(I((1-γ)/γ)) ≥ β");
                assert!(lhs >= rhs);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn log_utility_rejected() {
        let mut p = ModelParams::calibrated();
        p.gamma = 1.0;
        assert!(p.check().is_err());
        assert!(!validate(&p, &EfficacyModel::Zero, Regime::AgingNoHealth).passed);
    }

    #[test]
    fn volatility_required_with_drift() {
        let mut p = ModelParams::calibrated();
        p.mu = 0.04;
        assert!(p.check().is_err());
        p.sigma = 0.2;
        assert!(p.check().is_ok());
    }
}
