//! Reference regimes: constant mortality (`c0`) and Gompertz aging without
//! healthcare (`u0`).

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::efficacy::EfficacyModel;
use crate::error::{Error, Result};
use crate::params::{validate, ModelParams, Regime};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::upper_gamma_scaled;

/// Optimal consumption-wealth ratio at a constant hazard `m`:
/// `(δ + (1 − ζ^(1−γ)) m)/γ + (1 − 1/γ) r_eq`.
pub fn c0(m: f64, params: &ModelParams) -> Result<f64> {
    params.check()?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::domain(format!("hazard m={m} must be finite and nonnegative")));
    }
    let v = params.c_bar()? + params.c0_slope() * m;
    if !(v > 0.0) {
        return Err(Error::Condition {
            condition: "δ + (1-ζ^(1-γ))m - (1-γ)r ≤ 0".into(),
            lhs: v * params.gamma,
            rhs: 0.0,
        });
    }
    Ok(v)
}

/// Slope of a consumption-rate curve, which is infinite at `m = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    Unbounded,
}

/// Precomputed constants of the no-healthcare aging regime, optionally with
/// the mortality growth replaced (β_g gives the lower bracket `u0^g`).
#[derive(Debug, Clone, Copy)]
pub struct AgingBaseline {
    beta: f64,
    c_bar: f64,
    slope: f64,
    /// `p = c̄/β`.
    p: f64,
    /// `z/m = (1 − ζ^(1−γ))/(βγ)`.
    z_per_m: f64,
}

impl AgingBaseline {
    pub fn new(params: &ModelParams, beta_override: Option<f64>) -> Result<Self> {
        let beta = beta_override.unwrap_or(params.beta);
        let mut eff_params = *params;
        eff_params.beta = beta;
        validate(&eff_params, &EfficacyModel::Zero, Regime::AgingNoHealth).into_result()?;
        let c_bar = params.c_bar()?;
        Ok(AgingBaseline {
            beta,
            c_bar,
            slope: params.c0_slope(),
            p: c_bar / beta,
            z_per_m: params.death_cost() / (beta * params.gamma),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c0(&self, m: f64) -> f64 {
        self.c_bar + self.slope * m
    }

    /// `u0` by adaptive quadrature of its Laplace-type integral on `(0, 1)`.
    pub fn quadrature(&self, m: f64, quad: &QuadratureSpec) -> Result<f64> {
        check_hazard(m)?;
        if m == 0.0 {
            return Ok(self.c_bar);
        }
        let a = self.z_per_m * m;
        let pm1 = self.p - 1.0;
        // y = t/(1−t): e^{−a y}(1+y)^{−(1+p)} dy = e^{−a t/(1−t)} (1−t)^{p−1} dt.
        let est = integrate(
            |t: f64| {
                let om = 1.0 - t;
                (-a * t / om + pm1 * om.ln()).exp()
            },
            0.0,
            1.0,
            quad,
        )?;
        Ok(self.beta / est.value)
    }

    /// `u0 = β e^{−z} z^{−p} / Γ̄(−p, z)` with `z = m(1 − ζ^(1−γ))/(βγ)`.
    pub fn gamma_form(&self, m: f64) -> Result<f64> {
        check_hazard(m)?;
        if m == 0.0 {
            return Ok(self.c_bar);
        }
        let z = self.z_per_m * m;
        Ok(self.beta / upper_gamma_scaled(-self.p, z)?)
    }

    /// `u0'(m) = (u0² − c0 u0)/(β m)` evaluated at a known value `u`.
    pub fn slope_at(&self, m: f64, u: f64) -> Slope {
        if m == 0.0 {
            return Slope::Unbounded;
        }
        Slope::Finite(u * (u - self.c0(m)) / (self.beta * m))
    }
}

fn check_hazard(m: f64) -> Result<()> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::domain(format!("hazard m={m} must be finite and nonnegative")));
    }
    Ok(())
}

/// Optimal consumption-wealth ratio under Gompertz aging without healthcare,
/// by quadrature. `beta_override` replaces β (pass β_g for `u0^g`).
pub fn u0(m: f64, params: &ModelParams, beta_override: Option<f64>, quad: &QuadratureSpec) -> Result<f64> {
    AgingBaseline::new(params, beta_override)?.quadrature(m, quad)
}

/// Incomplete-gamma representation of [`u0`].
pub fn u0_gamma_form(m: f64, params: &ModelParams, beta_override: Option<f64>) -> Result<f64> {
    AgingBaseline::new(params, beta_override)?.gamma_form(m)
}

/// `u0'(m)` from the no-healthcare ODE; [`Slope::Unbounded`] at `m = 0`.
pub fn u0_derivative(m: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<Slope> {
    let base = AgingBaseline::new(params, None)?;
    if m == 0.0 {
        return Ok(Slope::Unbounded);
    }
    let u = base.quadrature(m, quad)?;
    Ok(base.slope_at(m, u))
}
