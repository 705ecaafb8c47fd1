//! The full-model consumption-rate ODE
//!
//! ```text
//! u² − c0(m) u + s·(S(k u / s) − β) = 0,   s = m u'(m),   k = (1 − γ)/γ,
//! ```
//!
//! solved by backward shooting in `ln m`. Backward integration contracts
//! neighbouring solutions onto the increasing one, so two trajectories
//! seeded at the certified bounds `u0^g ≤ u* ≤ min(u0, c0 + β_g)` far to
//! the right of the grid collapse onto each other before reaching it.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::baseline::AgingBaseline;
use crate::efficacy::EfficacyModel;
use crate::error::{BracketStep, Error, Result};
use crate::grid::GridSpec;
use crate::interp::MonotoneHermite;
use crate::ode::{integrate, StepControl};
use crate::params::{validate, ModelParams, Regime};
use crate::quadrature::QuadratureSpec;

/// Below this conjugate value the solver returns `u0^g` directly.
pub const DEGENERATE_CONJUGATE: f64 = 1e-12;
/// Allowed violation of the sandwich bounds, relative to `max(u, 1)`.
pub const SANDWICH_SLACK: f64 = 1e-9;
const MAX_NEWTON: usize = 200;

/// Which root of the slope equation is followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootBranch {
    /// The smaller root, which deforms continuously into the no-healthcare
    /// slope `(u² − c0 u)/β` as efficacy vanishes.
    #[default]
    NoHealthcareContinuation,
}

/// `β_g = β − S((1 − γ)/γ)`: the mortality growth left once healthcare is optimized at the margin.
pub fn beta_g(params: &ModelParams, efficacy: &EfficacyModel) -> Result<f64> {
    validate(params, efficacy, Regime::AgingHealth).into_result()?;
    Ok(params.beta - efficacy.conjugate(params.k())?.value)
}

enum Kind {
    Zero,
    /// `s·S(ku/s) = coef · (k u)^(−q e) · s^e` with `e = 1/(1 − q)`.
    Isoelastic { coef: f64, e: f64, qe: f64 },
    General,
}

/// Constants of the slope equation for one parameter set.
pub(crate) struct Hamiltonian<'a> {
    beta: f64,
    c_bar: f64,
    slope: f64,
    k: f64,
    efficacy: &'a EfficacyModel,
    kind: Kind,
}

impl<'a> Hamiltonian<'a> {
    pub(crate) fn new(params: &ModelParams, efficacy: &'a EfficacyModel) -> Result<Self> {
        params.check()?;
        let k = params.k();
        if !(k > 0.0) {
            return Err(Error::domain("healthcare price (1-γ)/γ must be positive"));
        }
        if !(params.beta > 0.0) {
            return Err(Error::domain("beta must be positive"));
        }
        let kind = match efficacy {
            EfficacyModel::Zero => Kind::Zero,
            EfficacyModel::Isoelastic { a, q } => {
                let e = 1.0 / (1.0 - q);
                Kind::Isoelastic {
                    coef: (1.0 - q) / q * a.powf(e),
                    e,
                    qe: q * e,
                }
            }
            EfficacyModel::Custom(_) => Kind::General,
        };
        Ok(Hamiltonian {
            beta: params.beta,
            c_bar: params.c_bar()?,
            slope: params.c0_slope(),
            k,
            efficacy,
            kind,
        })
    }

    pub(crate) fn c0(&self, m: f64) -> f64 {
        self.c_bar + self.slope * m
    }

    /// `F(s) = s·S(k u/s)` and `F'(s) = g(I(k u/s))` for `s > 0`.
    fn flux(&self, u: f64, s: f64) -> (f64, f64) {
        match self.kind {
            Kind::Zero => (0.0, 0.0),
            Kind::Isoelastic { coef, e, qe } => {
                let f = coef * (e * s.ln() - qe * (self.k * u).ln()).exp();
                (f, e * f / s)
            }
            Kind::General => {
                let ku = self.k * u;
                let h = self.efficacy.inverse_marginal(ku / s);
                let g = self.efficacy.g(h);
                (s * g - ku * h, g)
            }
        }
    }

    /// Smallest root `s = m u'` of `u(u − c0) − β s + F(s) = 0`.
    ///
    /// The left side is convex in `s` and positive on `[0, u(u − c0)/β]`,
    /// so Newton from that point increases monotonically to the root.
    pub(crate) fn log_slope(&self, m: f64, u: f64) -> Result<f64> {
        let a0 = u * (u - self.c0(m));
        if !a0.is_finite() || a0 < 0.0 {
            return Err(Error::domain(format!("u={u:e} lies below c0({m:e})")));
        }
        if a0 == 0.0 {
            return Ok(0.0);
        }
        let mut s = a0 / self.beta;
        if let Kind::Zero = self.kind {
            return Ok(s);
        }
        for _ in 0..MAX_NEWTON {
            let (f, df) = self.flux(u, s);
            let phi = a0 - self.beta * s + f;
            if phi <= 0.0 {
                return Ok(s);
            }
            let dphi = df - self.beta;
            if dphi >= 0.0 {
                return Err(Error::BracketBreach { m, u });
            }
            let ds = -phi / dphi;
            s += ds;
            if ds <= 4.0 * f64::EPSILON * s {
                return Ok(s);
            }
        }
        Err(Error::BracketBreach { m, u })
    }

    /// `ds/d(ln m)` along a solution through `(m, u)` with `s = m u'`,
    /// by implicit differentiation of the slope equation.
    pub(crate) fn log_slope_derivative(&self, m: f64, u: f64, s: f64) -> f64 {
        let h = if s > 0.0 && !matches!(self.kind, Kind::Zero) {
            self.efficacy.inverse_marginal(self.k * u / s)
        } else {
            0.0
        };
        let g = self.efficacy.g(h);
        let phi_x = -u * self.slope * m;
        let phi_u = 2.0 * u - self.c0(m) - self.k * h;
        -(phi_x + phi_u * s) / (g - self.beta)
    }

    /// `u² − c0 u + s(S(k u/s) − β)`, through the conjugate rather than `flux`.
    fn residual(&self, m: f64, u: f64, du: f64) -> Result<f64> {
        let s = m * du;
        let conj = self.efficacy.conjugate(self.k * u / s)?.value;
        Ok(u * u - self.c0(m) * u + s * (conj - self.beta))
    }
}

/// Residual of the consumption-rate ODE at `(m, u, u')`.
pub fn ode_residual(m: f64, u: f64, du: f64, params: &ModelParams, efficacy: &EfficacyModel) -> Result<f64> {
    if !(m > 0.0 && u > 0.0) {
        return Err(Error::domain("residual needs m > 0 and u > 0"));
    }
    if !(du > 0.0) {
        return Err(Error::domain(format!("slope du={du:e} must be positive")));
    }
    Hamiltonian::new(params, efficacy)?.residual(m, u, du)
}

/// Slope `u'(m)` that makes the ODE hold at `(m, u)` on the chosen branch.
pub fn solve_du(m: f64, u: f64, params: &ModelParams, efficacy: &EfficacyModel, branch: RootBranch) -> Result<f64> {
    let RootBranch::NoHealthcareContinuation = branch;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain("solve_du needs 0 < m < ∞"));
    }
    Ok(Hamiltonian::new(params, efficacy)?.log_slope(m, u)? / m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `|residual| / u²` at every node; integration runs at `tol/1000`.
    pub tol: f64,
    /// Evaluate and check the sandwich bounds at every node.
    pub brackets: bool,
    pub quad: QuadratureSpec,
    /// Maximum number of times the seeding point is pushed right.
    pub max_extensions: usize,
}

impl SolverOptions {
    pub fn new(tol: f64) -> Self {
        SolverOptions {
            tol,
            brackets: true,
            quad: QuadratureSpec::default(),
            max_extensions: 40,
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions::new(1e-8)
    }
}

/// Tabulated optimal consumption-wealth ratio `u*(m)` and derived controls.
#[derive(Debug, Clone)]
pub struct PolicyCurve {
    params: ModelParams,
    nodes: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    h: Vec<f64>,
    residual: Vec<f64>,
    bracket_lo: Vec<f64>,
    bracket_hi: Vec<f64>,
    beta_g: f64,
    trace: Vec<BracketStep>,
    log_nodes: Vec<f64>,
    spline: MonotoneHermite,
    slope_spline: MonotoneHermite,
}

impl PolicyCurve {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn du(&self) -> &[f64] {
        &self.du
    }
    /// Optimal healthcare rate at each node.
    pub fn h(&self) -> &[f64] {
        &self.h
    }
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }
    /// Empty when the solver ran without brackets.
    pub fn bracket_lo(&self) -> &[f64] {
        &self.bracket_lo
    }
    pub fn bracket_hi(&self) -> &[f64] {
        &self.bracket_hi
    }
    pub fn beta_g(&self) -> f64 {
        self.beta_g
    }
    /// Anchor-node bracket after each seeding extension.
    pub fn trace(&self) -> &[BracketStep] {
        &self.trace
    }

    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// `(u, u')` at `m`: monotone cubic Hermite in `ln m` for both `u` and
    /// `m u'`, with exact node derivatives of each.
    pub fn interpolate(&self, m: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(m >= lo && m <= hi) {
            return Err(Error::OutOfRange { m, min: lo, max: hi });
        }
        let x = m.ln().clamp(self.log_nodes[0], self.log_nodes[self.log_nodes.len() - 1]);
        let i = self.spline.interval(x)?;
        if m == self.nodes[i] {
            return Ok((self.u[i], self.du[i]));
        }
        if m == self.nodes[i + 1] {
            return Ok((self.u[i + 1], self.du[i + 1]));
        }
        let (u, _) = self.spline.eval(x)?;
        let (s, _) = self.slope_spline.eval(x)?;
        Ok((u, s / m))
    }

    /// `u*(m)`, with `u*(0) = c̄`.
    pub fn u_at(&self, m: f64) -> Result<f64> {
        if m == 0.0 {
            return self.params.c_bar();
        }
        Ok(self.interpolate(m)?.0)
    }

    /// Largest `|residual| / u²` over the nodes.
    pub fn max_relative_residual(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.u)
            .map(|(r, u)| (r / (u * u)).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves for `u*` on `grid` with residual tolerance `tol` relative to `u²`.
pub fn solve_u_star(params: &ModelParams, efficacy: &EfficacyModel, grid: &GridSpec, tol: f64) -> Result<PolicyCurve> {
    solve_u_star_with(params, efficacy, grid, &SolverOptions::new(tol))
}

pub fn solve_u_star_with(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<PolicyCurve> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::invalid("tol", "must lie in (0, 1)"));
    }
    let bg = beta_g(params, efficacy)?;
    let nodes = grid.nodes()?;
    let ham = Hamiltonian::new(params, efficacy)?;
    let lower = AgingBaseline::new(params, Some(bg))?;
    let upper = AgingBaseline::new(params, None)?;
    let conj = efficacy.conjugate(params.k())?.value;

    let (u, trace) = if conj > 0.0 && conj < DEGENERATE_CONJUGATE {
        let u = nodes
            .iter()
            .map(|&m| lower.quadrature(m, &opts.quad))
            .collect::<Result<Vec<_>>>()?;
        (u, Vec::new())
    } else {
        shoot(&ham, &lower, &upper, bg, &nodes, opts)?
    };

    let n = nodes.len();
    let mut du = Vec::with_capacity(n);
    let mut log_slope = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let k = params.k();
    for (&m, &ui) in nodes.iter().zip(&u) {
        let s = ham.log_slope(m, ui)?;
        let d = s / m;
        let hi = if s > 0.0 { efficacy.inverse_marginal(k * ui / s) } else { 0.0 };
        let r = if d > 0.0 { ham.residual(m, ui, d)? } else { f64::NAN };
        log_slope.push(s);
        du.push(d);
        h.push(hi);
        residual.push(r);
    }
    for (i, (&r, &ui)) in residual.iter().zip(&u).enumerate() {
        if !((r / (ui * ui)).abs() <= opts.tol) {
            return Err(Error::Convergence {
                tol: opts.tol,
                reason: format!("residual {r:e} at m={:e}", nodes[i]),
                trace,
            });
        }
    }

    let (mut bracket_lo, mut bracket_hi) = (Vec::new(), Vec::new());
    if opts.brackets {
        for (&m, &ui) in nodes.iter().zip(&u) {
            let lo = lower.quadrature(m, &opts.quad)?;
            let hi = upper.quadrature(m, &opts.quad)?.min(upper.c0(m) + bg);
            let slack = SANDWICH_SLACK * ui.max(1.0);
            if lo - ui > slack || ui - hi > slack {
                return Err(Error::Convergence {
                    tol: opts.tol,
                    reason: format!("u={ui:e} at m={m:e} leaves the bracket [{lo:e}, {hi:e}]"),
                    trace,
                });
            }
            bracket_lo.push(lo);
            bracket_hi.push(hi);
        }
    }

    let log_nodes: Vec<f64> = nodes.iter().map(|m| m.ln()).collect();
    let dlog_slope: Vec<f64> = nodes
        .iter()
        .zip(&u)
        .zip(&log_slope)
        .map(|((&m, &ui), &si)| ham.log_slope_derivative(m, ui, si))
        .collect();
    let spline = MonotoneHermite::new(log_nodes.clone(), u.clone(), log_slope.clone())?;
    let slope_spline = MonotoneHermite::new(log_nodes.clone(), log_slope, dlog_slope)?;
    Ok(PolicyCurve {
        params: *params,
        nodes,
        u,
        du,
        h,
        residual,
        bracket_lo,
        bracket_hi,
        beta_g: bg,
        trace,
        log_nodes,
        spline,
        slope_spline,
    })
}

/// Backward shooting from `m_start = 2^j m_max`, doubling until the
/// trajectories seeded at the two bounds agree at `m_max`.
fn shoot(
    ham: &Hamiltonian<'_>,
    lower: &AgingBaseline,
    upper: &AgingBaseline,
    bg: f64,
    nodes: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<BracketStep>)> {
    let ctl = StepControl::new(opts.tol * 1e-3);
    let rhs = |x: f64, u: f64| ham.log_slope(x.exp(), u);
    let m_anchor = nodes[nodes.len() - 1];
    let x_anchor = m_anchor.ln();
    let mut trace = Vec::new();
    let mut m_start = 2.0 * m_anchor;
    for _ in 0..opts.max_extensions {
        let lo_seed = lower.quadrature(m_start, &opts.quad)?;
        let hi_seed = upper.quadrature(m_start, &opts.quad)?.min(upper.c0(m_start) + bg);
        let x0 = m_start.ln();
        let lo = integrate(rhs, x0, lo_seed, &[x_anchor], &ctl)?[0];
        let hi = integrate(rhs, x0, hi_seed, &[x_anchor], &ctl)?[0];
        trace.push(BracketStep { m_start, lo, hi });
        if (hi - lo).abs() <= 0.1 * opts.tol * hi.abs() {
            let outputs: Vec<f64> = nodes.iter().rev().map(|m| m.ln()).collect();
            let mut u = integrate(rhs, x0, 0.5 * (lo_seed + hi_seed), &outputs, &ctl)?;
            u.reverse();
            return Ok((u, trace));
        }
        m_start *= 2.0;
    }
    Err(Error::Convergence {
        tol: opts.tol,
        reason: format!("anchor bracket still open after {} extensions", opts.max_extensions),
        trace,
    })
}
