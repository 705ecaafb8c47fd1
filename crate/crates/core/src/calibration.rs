//! Fitting Gompertz parameters and healthcare efficacy to cohort hazards.
//!
//! Restarts of the efficacy search are independent, so callers with threads
//! can run [`run_restart`] concurrently and pass the results to
//! [`finish_fit`]; [`fit_efficacy`] runs them in order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::efficacy::EfficacyModel;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hjb::{solve_u_star_with, SolverOptions};
use crate::nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};
use crate::params::{validate, ModelParams, Regime};
use crate::policy::mortality_at_ages;

/// Fewest rows accepted by either fit.
pub const MIN_FIT_ROWS: usize = 8;

/// Observed hazards of one birth cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortTable {
    pub cohort_year: i32,
    ages: Vec<f64>,
    hazards: Vec<f64>,
}

impl CohortTable {
    /// Ages must be finite and strictly increasing, hazards finite and positive.
    pub fn new(cohort_year: i32, rows: &[(f64, f64)]) -> Result<Self> {
        for (i, &(age, hazard)) in rows.iter().enumerate() {
            if !age.is_finite() {
                return Err(Error::domain(format!("row {i}: age {age} is not finite")));
            }
            if !(hazard > 0.0 && hazard.is_finite()) {
                return Err(Error::domain(format!("row {i}: hazard {hazard} must be positive and finite")));
            }
            if i > 0 && !(age > rows[i - 1].0) {
                return Err(Error::domain(format!("row {i}: age {age} does not increase")));
            }
        }
        Ok(CohortTable {
            cohort_year,
            ages: rows.iter().map(|r| r.0).collect(),
            hazards: rows.iter().map(|r| r.1).collect(),
        })
    }

    pub fn ages(&self) -> &[f64] {
        &self.ages
    }

    pub fn hazards(&self) -> &[f64] {
        &self.hazards
    }

    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ages.iter().copied().zip(self.hazards.iter().copied())
    }

    fn require_fit_rows(&self) -> Result<()> {
        if self.len() < MIN_FIT_ROWS {
            return Err(Error::InsufficientData {
                rows: self.len(),
                needed: MIN_FIT_ROWS,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedParam {
    pub name: &'static str,
    pub value: f64,
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<FittedParam>,
    /// Sum of squared log-hazard errors.
    pub loss: f64,
    pub n_evals: usize,
    pub converged: bool,
    /// The optimum touches the search box.
    pub boundary: bool,
    /// Named scalar diagnostics, in a fixed order.
    pub diagnostics: Vec<(&'static str, f64)>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn std_err(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.std_err)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.0 == name).map(|d| d.1)
    }
}

/// Ordinary least squares of `ln hazard` on `age − anchor_age`.
///
/// Returns `beta` and `m0` (the hazard at `anchor_age`); the standard error
/// of `m0` comes from the delta method on the intercept.
pub fn fit_gompertz(table: &CohortTable, anchor_age: f64) -> Result<FitResult> {
    table.require_fit_rows()?;
    if !anchor_age.is_finite() {
        return Err(Error::invalid("anchor_age", "must be finite"));
    }
    let n = table.len() as f64;
    let x: Vec<f64> = table.ages.iter().map(|a| a - anchor_age).collect();
    let y: Vec<f64> = table.hazards.iter().map(|h| h.ln()).collect();
    let x_bar = x.iter().sum::<f64>() / n;
    let y_bar = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - x_bar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all ages are equal"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - x_bar) * (yi - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let sse: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    let sst: f64 = y.iter().map(|yi| (yi - y_bar).powi(2)).sum();
    let sigma2 = sse / (n - 2.0);
    let se_slope = (sigma2 / sxx).sqrt();
    let se_intercept = (sigma2 * (1.0 / n + x_bar * x_bar / sxx)).sqrt();
    let m0 = intercept.exp();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    Ok(FitResult {
        params: vec![
            FittedParam {
                name: "beta",
                value: slope,
                std_err: Some(se_slope),
            },
            FittedParam {
                name: "m0",
                value: m0,
                std_err: Some(m0 * se_intercept),
            },
        ],
        loss: sse,
        n_evals: 0,
        converged: true,
        boundary: false,
        diagnostics: vec![
            ("anchor_age", anchor_age),
            ("ln_m0", intercept),
            ("ln_m0_std_err", se_intercept),
            ("residual_sd", sigma2.sqrt()),
            ("r_squared", r_squared),
            ("rows", n),
        ],
    })
}

/// Search box and budget of the efficacy fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub a_bounds: (f64, f64),
    pub q_bounds: (f64, f64),
    /// Restarts besides the first, which starts at `start` or the box center.
    pub restarts: usize,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    /// Simplex diameter at convergence, in `(ln a, logit q)` coordinates.
    pub x_tol: f64,
    pub seed: u64,
    pub start: Option<(f64, f64)>,
    pub anchor_age: f64,
    /// Nodes of the log grid each trial solves on.
    pub grid_points: usize,
    pub solver_tol: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            a_bounds: (0.01, 0.5),
            q_bounds: (0.1, 0.9),
            restarts: 3,
            max_evals: 300,
            x_tol: 1e-6,
            seed: 0,
            start: None,
            anchor_age: 0.0,
            grid_points: 96,
            solver_tol: 1e-8,
        }
    }
}

impl SearchSpec {
    pub fn check(&self) -> Result<()> {
        let (a0, a1) = self.a_bounds;
        if !(a0 > 0.0 && a1 > a0 && a1.is_finite()) {
            return Err(Error::invalid("a_bounds", "need 0 < lower < upper < ∞"));
        }
        let (q0, q1) = self.q_bounds;
        if !(q0 > 0.0 && q1 > q0 && q1 < 1.0) {
            return Err(Error::invalid("q_bounds", "need 0 < lower < upper < 1"));
        }
        if self.max_evals < 3 {
            return Err(Error::invalid("max_evals", "must be at least 3"));
        }
        if !(self.x_tol > 0.0) {
            return Err(Error::invalid("x_tol", "must be positive"));
        }
        if !self.anchor_age.is_finite() {
            return Err(Error::invalid("anchor_age", "must be finite"));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::invalid("solver_tol", "must be positive"));
        }
        Ok(())
    }

    fn theta_box(&self) -> [(f64, f64); 2] {
        [
            (self.a_bounds.0.ln(), self.a_bounds.1.ln()),
            (logit(self.q_bounds.0), logit(self.q_bounds.1)),
        ]
    }
}

fn logit(q: f64) -> f64 {
    (q / (1.0 - q)).ln()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Maps search coordinates `(ln a, logit q)` to `(a, q)`.
pub fn from_theta(theta: &[f64]) -> (f64, f64) {
    (theta[0].exp(), logistic(theta[1]))
}

pub fn to_theta(a: f64, q: f64) -> [f64; 2] {
    [a.ln(), logit(q)]
}

/// Log-hazard loss of the model with efficacy `(a, q)` against a cohort.
#[derive(Debug, Clone)]
pub struct EfficacyObjective<'t> {
    table: &'t CohortTable,
    params: ModelParams,
    search: SearchSpec,
    grid: GridSpec,
    log_data: Vec<f64>,
}

impl<'t> EfficacyObjective<'t> {
    /// `fixed = (beta, m0)` with `m0` the hazard at `search.anchor_age`.
    pub fn new(table: &'t CohortTable, fixed: (f64, f64), params: &ModelParams, search: &SearchSpec) -> Result<Self> {
        table.require_fit_rows()?;
        search.check()?;
        let (beta, m0) = fixed;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if !(m0 > 0.0 && m0.is_finite()) {
            return Err(Error::invalid("m0", "must be positive"));
        }
        let params = ModelParams { beta, m0, ..*params };
        params.check()?;
        // Growth lies in (0, β], which bounds the hazard on either side of the anchor.
        let first = table.ages[0];
        let last = table.ages[table.len() - 1];
        let back = (search.anchor_age - first).max(0.0);
        let ahead = (last - search.anchor_age).max(0.0);
        let grid = GridSpec::log(0.5 * m0 * (-beta * back).exp(), 2.0 * m0 * (beta * ahead).exp(), search.grid_points);
        grid.check()?;
        Ok(EfficacyObjective {
            table,
            params,
            search: *search,
            grid,
            log_data: table.hazards.iter().map(|h| h.ln()).collect(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `β − g(I((1−γ)/γ))`; positive when the trial is well posed.
    pub fn margin(&self, a: f64, q: f64) -> f64 {
        match EfficacyModel::isoelastic(a, q) {
            Ok(eff) => self.params.beta - eff.g_at_inverse(self.params.k()),
            Err(_) => f64::NAN,
        }
    }

    /// Modeled hazards at the table's ages.
    pub fn model_hazards(&self, a: f64, q: f64) -> Result<Vec<f64>> {
        let eff = EfficacyModel::isoelastic(a, q)?;
        validate(&self.params, &eff, Regime::AgingHealth).into_result()?;
        let opts = SolverOptions {
            brackets: false,
            ..SolverOptions::new(self.search.solver_tol)
        };
        let curve = solve_u_star_with(&self.params, &eff, &self.grid, &opts)?;
        mortality_at_ages(
            &self.params,
            &eff,
            &curve,
            (self.search.anchor_age, self.params.m0),
            &self.table.ages,
        )
    }

    /// Loss at `(a, q)`; `+∞` when the trial is infeasible or fails to solve.
    pub fn loss(&self, a: f64, q: f64) -> f64 {
        match self.model_hazards(a, q) {
            Ok(model) => model
                .iter()
                .zip(&self.log_data)
                .map(|(m, d)| (m.ln() - d).powi(2))
                .sum(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Loss in search coordinates; `+∞` outside the box.
    pub fn loss_theta(&self, theta: &[f64]) -> f64 {
        let inside = self
            .search
            .theta_box()
            .iter()
            .zip(theta)
            .all(|(&(lo, hi), &t)| t >= lo && t <= hi);
        if !inside {
            return f64::INFINITY;
        }
        let (a, q) = from_theta(theta);
        self.loss(a, q)
    }
}

/// Starting points in search coordinates: the first at `start` or the box
/// center, the rest uniform in the box from a ChaCha8 stream keyed by `seed`.
pub fn restart_starts(search: &SearchSpec) -> Vec<[f64; 2]> {
    let bx = search.theta_box();
    let first = match search.start {
        Some((a, q)) => to_theta(a, q),
        None => [0.5 * (bx[0].0 + bx[0].1), 0.5 * (bx[1].0 + bx[1].1)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut starts = vec![first];
    for _ in 0..search.restarts {
        let t0 = bx[0].0 + unit() * (bx[0].1 - bx[0].0);
        let t1 = bx[1].0 + unit() * (bx[1].1 - bx[1].0);
        starts.push([t0, t1]);
    }
    starts
}

fn nm_options(search: &SearchSpec, step: f64) -> NelderMeadOptions {
    NelderMeadOptions {
        max_evals: search.max_evals,
        x_tol: search.x_tol,
        initial_step: step,
    }
}

/// Moves an ill-posed start toward the box corner with the largest margin,
/// a quarter of the way past the first well-posed point on that segment.
/// Well-posed starts, and boxes with no well-posed corner, are returned as is.
fn feasible_start(objective: &EfficacyObjective<'_>, start: [f64; 2]) -> [f64; 2] {
    let margin = |t: &[f64; 2]| {
        let (a, q) = from_theta(t);
        objective.margin(a, q)
    };
    if margin(&start) > 0.0 {
        return start;
    }
    let bx = objective.search.theta_box();
    let mut corner = None;
    let mut best = 0.0;
    for c in [[bx[0].0, bx[1].0], [bx[0].0, bx[1].1], [bx[0].1, bx[1].0], [bx[0].1, bx[1].1]] {
        let m = margin(&c);
        if m > best {
            best = m;
            corner = Some(c);
        }
    }
    let Some(corner) = corner else {
        return start;
    };
    let at = |s: f64| [start[0] + s * (corner[0] - start[0]), start[1] + s * (corner[1] - start[1])];
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(&at(mid)) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let inner = at(hi + 0.25 * (1.0 - hi));
    if margin(&inner) > 0.0 {
        inner
    } else {
        at(hi)
    }
}

/// One simplex search from `start`, or from the nearest well-posed point
/// toward the best corner when `start` is ill posed.
pub fn run_restart(objective: &EfficacyObjective<'_>, start: [f64; 2]) -> NelderMeadResult {
    let bx = objective.search.theta_box();
    let step = 0.25 * (bx[0].1 - bx[0].0).min(bx[1].1 - bx[1].0);
    let start = feasible_start(objective, start);
    minimize(|t| objective.loss_theta(t), &start, &nm_options(&objective.search, step))
}

/// Picks the best restart (earliest on ties), polishes it with a fresh small
/// simplex, and attaches standard errors from a finite-difference Hessian.
pub fn finish_fit(objective: &EfficacyObjective<'_>, restarts: &[NelderMeadResult]) -> Result<FitResult> {
    let mut best: Option<&NelderMeadResult> = None;
    for r in restarts {
        if best.map_or(true, |b| r.f < b.f) {
            best = Some(r);
        }
    }
    let mut n_evals: usize = restarts.iter().map(|r| r.n_evals).sum();
    let best = match best {
        Some(b) if b.f.is_finite() => b,
        _ => return Err(infeasible(objective)),
    };
    let polish = minimize(
        |t| objective.loss_theta(t),
        &best.x,
        &nm_options(&objective.search, 1e-2),
    );
    n_evals += polish.n_evals;
    let chosen = if polish.f <= best.f { &polish } else { best };
    let converged = polish.converged;

    let (a, q) = from_theta(&chosen.x);
    let bx = objective.search.theta_box();
    let boundary = chosen
        .x
        .iter()
        .zip(&bx)
        .any(|(&t, &(lo, hi))| (t - lo).min(hi - t) < 1e-3 * (hi - lo));

    let n = objective.table.len() as f64;
    let (se_a, se_q, evals) = std_errors(objective, &chosen.x, chosen.f, n);
    n_evals += evals;

    Ok(FitResult {
        params: vec![
            FittedParam {
                name: "a",
                value: a,
                std_err: se_a,
            },
            FittedParam {
                name: "q",
                value: q,
                std_err: se_q,
            },
        ],
        loss: chosen.f,
        n_evals,
        converged,
        boundary,
        diagnostics: vec![
            ("beta", objective.params.beta),
            ("m0", objective.params.m0),
            ("anchor_age", objective.search.anchor_age),
            ("feasibility_margin", objective.margin(a, q)),
            ("rows", n),
            ("restarts", restarts.len() as f64),
        ],
    })
}

/// Gauss–Newton covariance `2σ² H⁻¹` in search coordinates, mapped to
/// `(a, q)`. `None` when the Hessian is not positive definite.
fn std_errors(objective: &EfficacyObjective<'_>, x: &[f64], f0: f64, n: f64) -> (Option<f64>, Option<f64>, usize) {
    let h = 1e-3;
    let mut evals = 0usize;
    let mut eval = |t: [f64; 2]| {
        evals += 1;
        objective.loss_theta(&t)
    };
    let (x0, x1) = (x[0], x[1]);
    let fpp = |f: &mut dyn FnMut([f64; 2]) -> f64, d: [f64; 2]| f([x0 + d[0], x1 + d[1]]);
    let f_p0 = fpp(&mut eval, [h, 0.0]);
    let f_m0 = fpp(&mut eval, [-h, 0.0]);
    let f_0p = fpp(&mut eval, [0.0, h]);
    let f_0m = fpp(&mut eval, [0.0, -h]);
    let f_pp = fpp(&mut eval, [h, h]);
    let f_pm = fpp(&mut eval, [h, -h]);
    let f_mp = fpp(&mut eval, [-h, h]);
    let f_mm = fpp(&mut eval, [-h, -h]);
    let h00 = (f_p0 - 2.0 * f0 + f_m0) / (h * h);
    let h11 = (f_0p - 2.0 * f0 + f_0m) / (h * h);
    let h01 = (f_pp - f_pm - f_mp + f_mm) / (4.0 * h * h);
    let det = h00 * h11 - h01 * h01;
    if !(h00 > 0.0 && det > 0.0 && det.is_finite() && n > 2.0) {
        return (None, None, evals);
    }
    let sigma2 = f0 / (n - 2.0);
    let var0 = 2.0 * sigma2 * h11 / det;
    let var1 = 2.0 * sigma2 * h00 / det;
    let (a, q) = from_theta(x);
    (Some(a * var0.sqrt()), Some(q * (1.0 - q) * var1.sqrt()), evals)
}

fn infeasible(objective: &EfficacyObjective<'_>) -> Error {
    let (a0, a1) = objective.search.a_bounds;
    let (q0, q1) = objective.search.q_bounds;
    let mut msg = String::from("β − g(I((1-γ)/γ)) at the box corners:");
    for (a, q) in [(a0, q0), (a0, q1), (a1, q0), (a1, q1)] {
        msg.push_str(&format!(" (a={a}, q={q}) {:e};", objective.margin(a, q)));
    }
    Error::Infeasible(msg)
}

/// Fits isoelastic efficacy `(a, q)` to `table` with `β` and `m0` held fixed.
pub fn fit_efficacy(table: &CohortTable, fixed: (f64, f64), params: &ModelParams, search: &SearchSpec) -> Result<FitResult> {
    let objective = EfficacyObjective::new(table, fixed, params, search)?;
    let results: Vec<NelderMeadResult> = restart_starts(search)
        .into_iter()
        .map(|s| run_restart(&objective, s))
        .collect();
    finish_fit(&objective, &results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb::solve_u_star;

    fn exact_gompertz(m0: f64, beta: f64, ages: core::ops::RangeInclusive<u32>) -> CohortTable {
        let rows: Vec<(f64, f64)> = ages.map(|t| (t as f64, m0 * (beta * t as f64).exp())).collect();
        CohortTable::new(1900, &rows).unwrap()
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(CohortTable::new(0, &[(1.0, 0.1), (1.0, 0.2)]).is_err());
        assert!(CohortTable::new(0, &[(1.0, 0.0)]).is_err());
        assert!(CohortTable::new(0, &[(f64::NAN, 0.1)]).is_err());
    }

    #[test]
    fn short_table_is_insufficient() {
        let t = CohortTable::new(1900, &[(40.0, 0.002), (41.0, 0.0022)]).unwrap();
        assert!(matches!(
            fit_gompertz(&t, 0.0),
            Err(Error::InsufficientData { rows: 2, needed: 8 })
        ));
    }

    #[test]
    fn exact_data_recovers_parameters() {
        let fit = fit_gompertz(&exact_gompertz(1.9e-4, 0.077, 33..=75), 0.0).unwrap();
        assert!((fit.value("beta").unwrap() - 0.077).abs() < 1e-10);
        assert!((fit.value("m0").unwrap() / 1.9e-4 - 1.0).abs() < 1e-10);
        assert!(fit.loss < 1e-20);
    }

    #[test]
    fn anchor_shifts_intercept() {
        let t = exact_gompertz(1.9e-4, 0.077, 33..=75);
        let fit = fit_gompertz(&t, 40.0).unwrap();
        let expect = 1.9e-4 * (0.077f64 * 40.0).exp();
        assert!((fit.value("m0").unwrap() / expect - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_data_within_three_standard_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut unit = || ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        let rows: Vec<(f64, f64)> = (33..=75)
            .map(|t| {
                // Box–Muller.
                let z = (-2.0 * unit().ln()).sqrt() * (2.0 * core::f64::consts::PI * unit()).cos();
                (t as f64, 1.9e-4 * (0.077 * t as f64).exp() * (0.05 * z).exp())
            })
            .collect();
        let fit = fit_gompertz(&CohortTable::new(1900, &rows).unwrap(), 0.0).unwrap();
        let (b, se) = (fit.value("beta").unwrap(), fit.std_err("beta").unwrap());
        assert_eq!(rows.len(), 43);
        assert!((b - 0.077).abs() < 3.0 * se, "{b} ± {se}");
    }

    fn model_cohort(a: f64, q: f64) -> CohortTable {
        let p = ModelParams::calibrated();
        let eff = EfficacyModel::isoelastic(a, q).unwrap();
        let grid = GridSpec::log(5e-5, 2.0, 128);
        let curve = solve_u_star(&p, &eff, &grid, 1e-9).unwrap();
        let ages: Vec<f64> = (0..=100).step_by(2).map(f64::from).collect();
        let m = mortality_at_ages(&p, &eff, &curve, (0.0, p.m0), &ages).unwrap();
        let rows: Vec<(f64, f64)> = ages.into_iter().zip(m).collect();
        CohortTable::new(1940, &rows).unwrap()
    }

    #[test]
    fn objective_is_small_at_truth() {
        let table = model_cohort(0.1, 0.46);
        let p = ModelParams::calibrated();
        let obj = EfficacyObjective::new(&table, (p.beta, p.m0), &p, &SearchSpec::default()).unwrap();
        assert!(obj.loss(0.1, 0.46) < 1e-10);
        assert!(obj.loss(0.12, 0.46) > 1e-4);
        assert_eq!(obj.loss_theta(&to_theta(0.9, 0.46)), f64::INFINITY);
    }

    #[test]
    fn noiseless_round_trip() {
        let table = model_cohort(0.1, 0.46);
        let p = ModelParams::calibrated();
        let search = SearchSpec {
            restarts: 1,
            ..Default::default()
        };
        let fit = fit_efficacy(&table, (p.beta, p.m0), &p, &search).unwrap();
        assert!((fit.value("a").unwrap() / 0.1 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.value("q").unwrap() / 0.46 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.diagnostic("feasibility_margin").unwrap() > 0.0);
        assert!(!fit.boundary);
    }

    #[test]
    fn ill_posed_start_is_moved_inside() {
        let table = model_cohort(0.1, 0.46);
        let p = ModelParams::calibrated();
        let search = SearchSpec {
            q_bounds: (0.1, 0.35),
            restarts: 0,
            ..Default::default()
        };
        let obj = EfficacyObjective::new(&table, (p.beta, p.m0), &p, &search).unwrap();
        let centre = restart_starts(&search)[0];
        assert!(obj.loss_theta(&centre).is_infinite());
        let start = feasible_start(&obj, centre);
        assert!(obj.loss_theta(&start).is_finite());
        let fit = fit_efficacy(&table, (p.beta, p.m0), &p, &search).unwrap();
        assert!(fit.loss.is_finite());
    }

    #[test]
    fn infeasible_box_is_reported() {
        let table = model_cohort(0.1, 0.46);
        let p = ModelParams::calibrated();
        let search = SearchSpec {
            a_bounds: (2.0, 4.0),
            restarts: 0,
            max_evals: 12,
            ..Default::default()
        };
        match fit_efficacy(&table, (p.beta, p.m0), &p, &search) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("a=2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let s = SearchSpec {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(restart_starts(&s), restart_starts(&s));
        assert_eq!(restart_starts(&s).len(), 4);
        let bx = s.theta_box();
        for st in restart_starts(&s) {
            assert!(st[0] >= bx[0].0 && st[0] <= bx[0].1 && st[1] >= bx[1].0 && st[1] <= bx[1].1);
        }
    }
}
