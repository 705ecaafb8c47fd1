//! Two-stage calibration with restarts run on the thread pool.

use gompertz_core::calibration::{finish_fit, restart_starts, run_restart, EfficacyObjective};
use gompertz_core::nelder_mead::NelderMeadResult;
use gompertz_core::{fit_gompertz, CohortTable, FitResult, ModelParams, Result, SearchSpec};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// `beta` and `m0` from the early cohort.
    pub gompertz: FitResult,
    /// `a` and `q` from the late cohort with `beta`, `m0` held fixed.
    pub efficacy: FitResult,
    /// Model hazards at the late cohort's ages.
    pub fitted_late: Vec<f64>,
}

/// Efficacy fit whose restarts run concurrently; the result equals
/// [`gompertz_core::fit_efficacy`] for the same inputs.
pub fn fit_efficacy_parallel(
    table: &CohortTable,
    fixed: (f64, f64),
    params: &ModelParams,
    search: &SearchSpec,
) -> Result<FitResult> {
    let objective = EfficacyObjective::new(table, fixed, params, search)?;
    let results: Vec<NelderMeadResult> = restart_starts(search)
        .into_par_iter()
        .map(|s| run_restart(&objective, s))
        .collect();
    finish_fit(&objective, &results)
}

/// Fits `beta`, `m0` on `early` (no healthcare) and then `a`, `q` on `late`.
pub fn calibrate(early: &CohortTable, late: &CohortTable, params: &ModelParams, search: &SearchSpec) -> Result<Calibration> {
    let gompertz = fit_gompertz(early, search.anchor_age)?;
    let fixed = (gompertz.value("beta").unwrap_or(f64::NAN), gompertz.value("m0").unwrap_or(f64::NAN));
    let efficacy = fit_efficacy_parallel(late, fixed, params, search)?;
    let objective = EfficacyObjective::new(late, fixed, params, search)?;
    let fitted_late = objective.model_hazards(
        efficacy.value("a").unwrap_or(f64::NAN),
        efficacy.value("q").unwrap_or(f64::NAN),
    )?;
    Ok(Calibration {
        gompertz,
        efficacy,
        fitted_late,
    })
}
