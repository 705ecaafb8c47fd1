//! Optimal consumption, healthcare and investment for a household whose
//! mortality hazard ages according to Gompertz' law.
//!
//! The crate is `no_std` (it needs `alloc`) and holds all of the numerics:
//!
//! - [`params`] and [`efficacy`]: model inputs and well-posedness checks.
//! - [`baseline`]: the forever-young rate `c0(m)` and the no-healthcare
//!   rate `u0(m)` in quadrature and incomplete-gamma form.
//! - [`hjb`]: the full nonlinear consumption-rate ODE, solved by backward
//!   shooting inside certified sub/supersolution brackets.
//! - [`policy`]: controls, endogenous mortality by age, the risky-asset
//!   equivalence and the value function.
//! - [`calibration`]: Gompertz regression and the efficacy fit.
//!
//! IO, the Monte Carlo simulator and the command line live in the
//! `gompertz-opt` crate.
//!
//! Float math comes from `num_traits::Float` (libm). Builds that link std
//! resolve the inherent methods instead, so each import carries
//! `allow(unused_imports)`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod calibration;
pub mod efficacy;
pub mod error;
pub mod grid;
pub mod hjb;
pub mod interp;
pub mod nelder_mead;
pub mod ode;
pub mod params;
pub mod policy;
pub mod quadrature;
pub mod special;

pub use baseline::{c0, u0, u0_derivative, u0_gamma_form, Slope};
pub use calibration::{fit_efficacy, fit_gompertz, CohortTable, FitResult, FittedParam, SearchSpec};
pub use efficacy::{efficacy_conjugate, Conjugate, EfficacyModel};
pub use error::{Error, Result};
pub use grid::{GridSpec, Spacing};
pub use hjb::{
    beta_g, ode_residual, solve_du, solve_u_star, solve_u_star_with, PolicyCurve, RootBranch, SolverOptions,
};
pub use params::{validate, ModelParams, Regime, ValidationReport};
pub use policy::{
    age_profile, controls, endogenous_mortality, mortality_at_ages, portfolio_and_equivalent_rate,
    value_function, AgeProfile, Controls,
};
pub use quadrature::QuadratureSpec;
