//! Monte Carlo simulation of household welfare under a consumption and
//! healthcare policy.
//!
//! Each path draws death thresholds `E ~ Exp(1)` and records a death when the
//! hazard integrated since the previous one reaches `E`. Within a step the
//! controls are fixed at the hazard predicted for the step midpoint, the
//! hazard grows exponentially, and hazard, wealth and discounted utility are
//! integrated exactly, so deaths are placed at the exact crossing.
//!
//! Welfare is realized discounted utility up to the horizon plus the tail
//! `e^{−δT} V(X_T, M_T)` valued with the reference rate (`u*` for analytic
//! policies, `c0` otherwise). `truncation_bound` is the mean magnitude of
//! that tail.
//!
//! Path `p` uses ChaCha8 stream `2p` for death clocks and `2p + 1` for the
//! Brownian driver, so results do not depend on scheduling.

use std::sync::Arc;

use gompertz_core::{c0, validate, EfficacyModel, Error, ModelParams, PolicyCurve, Regime, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

/// Coarsest accepted time step, in years.
pub const MAX_DT: f64 = 1.0 / 52.0;
/// A path stops once its tail is below this fraction of accumulated welfare.
pub const EARLY_STOP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// Target for `truncation_bound`; reported against, not enforced.
    pub truncation_tol: f64,
    /// Hold the optimal risky share `μ/(γσ²)`; required when `μ ≠ 0`.
    pub risky: bool,
    /// Keep every death time, not only the first.
    pub record_deaths: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 10_000,
            horizon: 300.0,
            dt: MAX_DT,
            seed: 0,
            truncation_tol: 1e-3,
            risky: false,
            record_deaths: false,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be positive and finite"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid("dt", "must lie in (0, 1/52]"));
        }
        if !(self.truncation_tol > 0.0) {
            return Err(invalid("truncation_tol", "must be positive"));
        }
        Ok(())
    }
}

fn invalid(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Consumption and healthcare rates as a function of `(t, m, deaths so far)`.
pub type PolicyFn = Arc<dyn Fn(f64, f64, u32) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub enum Policy<'a> {
    /// `ĉ(M)` and `ĥ(M)` read off a solved curve.
    Analytic(&'a PolicyCurve),
    /// The analytic controls multiplied by fixed factors.
    ScaledAnalytic {
        curve: &'a PolicyCurve,
        c_scale: f64,
        h_scale: f64,
    },
    ConstantRates {
        c: f64,
        h: f64,
    },
    Custom(PolicyFn),
}

impl core::fmt::Debug for Policy<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Policy::Analytic(_) => f.write_str("Analytic"),
            Policy::ScaledAnalytic { c_scale, h_scale, .. } => f
                .debug_struct("ScaledAnalytic")
                .field("c_scale", c_scale)
                .field("h_scale", h_scale)
                .finish(),
            Policy::ConstantRates { c, h } => f.debug_struct("ConstantRates").field("c", c).field("h", h).finish(),
            Policy::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl<'a> Policy<'a> {
    fn curve(&self) -> Option<&'a PolicyCurve> {
        match self {
            Policy::Analytic(c) => Some(c),
            Policy::ScaledAnalytic { curve, .. } => Some(curve),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Realized welfare of each path, tail included.
    pub welfare: Vec<f64>,
    /// First death time of each path; `∞` when none occurred before the path ended.
    pub first_death: Vec<f64>,
    pub n_deaths: Vec<u32>,
    /// All death times per path when `record_deaths` is set.
    pub death_times: Option<Vec<Vec<f64>>>,
    pub mean: f64,
    pub std_err: f64,
    pub truncation_bound: f64,
    /// Paths cut short because the hazard left the policy curve's range.
    pub truncated_paths: usize,
    /// `truncation_bound < truncation_tol`.
    pub horizon_adequate: bool,
}

/// Controls and rates that are constant over one step.
#[derive(Debug, Clone, Copy)]
struct Segment {
    m: f64,
    kappa: f64,
    /// `c^{1−γ}/(1−γ)`.
    flow: f64,
    /// Exponent of `e^{−δt} W^{1−γ}` without the Brownian part.
    drift: f64,
    /// Itô-corrected exponent of its expectation.
    lambda: f64,
    /// `(1−γ)σπ`.
    vol: f64,
}

impl Segment {
    fn new(m: f64, c: f64, h: f64, kappa: f64, k: &Constants) -> Segment {
        let a = k.r + k.excess - c - h - 0.5 * k.var;
        let one_g = 1.0 - k.gamma;
        let drift = -k.delta + one_g * a;
        Segment {
            m,
            kappa,
            flow: c.powf(one_g) / one_g,
            drift,
            lambda: drift + 0.5 * one_g * one_g * k.var,
            vol: one_g * k.var.sqrt(),
        }
    }

    fn at(&self, offset: f64) -> Segment {
        Segment {
            m: self.m * (self.kappa * offset).exp(),
            ..*self
        }
    }

    fn hazard(&self, len: f64) -> f64 {
        self.m * len * phi(self.kappa * len)
    }

    fn utility(&self, len: f64) -> f64 {
        self.flow * len * phi(self.lambda * len)
    }

    /// Length after which the integrated hazard reaches `need`.
    fn crossing(&self, need: f64) -> f64 {
        let x = need / self.m;
        if self.kappa.abs() * x < 1e-12 {
            x
        } else {
            (self.kappa * x).ln_1p() / self.kappa
        }
    }
}

/// `(e^x − 1)/x`.
fn phi(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

#[derive(Debug, Clone, Copy)]
struct Constants {
    r: f64,
    delta: f64,
    gamma: f64,
    beta: f64,
    /// `μπ` when risky.
    excess: f64,
    /// `σ²π²` when risky.
    var: f64,
    /// `ζ^{1−γ}`.
    death_factor: f64,
}

/// Step with cached full-length factors.
#[derive(Debug, Clone, Copy)]
struct Step {
    seg: Segment,
    len: f64,
    hazard: f64,
    utility: f64,
    growth: f64,
    m_end: f64,
}

impl Step {
    fn new(seg: Segment, len: f64) -> Step {
        Step {
            seg,
            len,
            hazard: seg.hazard(len),
            utility: seg.utility(len),
            growth: (seg.drift * len).exp(),
            m_end: seg.m * (seg.kappa * len).exp(),
        }
    }
}

struct Model<'a> {
    params: ModelParams,
    efficacy: &'a EfficacyModel,
    k: Constants,
    policy: Policy<'a>,
    curve: Option<&'a PolicyCurve>,
    dt: f64,
    horizon: f64,
    n_steps: usize,
    steps_per_year: usize,
    /// Precomputed steps for policies that depend on the hazard only.
    schedule: Option<Vec<Step>>,
    /// The schedule ends early because the hazard left the curve's range.
    schedule_truncated: bool,
}

impl<'a> Model<'a> {
    fn new(params: &ModelParams, efficacy: &'a EfficacyModel, policy: Policy<'a>, config: &SimConfig) -> Result<Self> {
        config.check()?;
        let regime = if params.beta == 0.0 {
            Regime::ConstMortality(params.m0)
        } else if efficacy.is_zero() || matches!(policy, Policy::ConstantRates { h, .. } if h == 0.0) {
            Regime::AgingNoHealth
        } else {
            Regime::AgingHealth
        };
        validate(params, efficacy, regime).into_result()?;
        if params.mu != 0.0 && !config.risky {
            return Err(invalid("risky", "must be enabled when mu != 0"));
        }
        let (excess, var) = if config.risky && params.mu != 0.0 {
            let pi = params.mu / (params.gamma * params.sigma * params.sigma);
            (params.mu * pi, (params.sigma * pi).powi(2))
        } else {
            (0.0, 0.0)
        };
        match &policy {
            Policy::ConstantRates { c, h } => check_rates(0.0, *c, *h)?,
            Policy::ScaledAnalytic { c_scale, h_scale, .. } => {
                if !(*c_scale >= 0.0 && *h_scale >= 0.0 && c_scale.is_finite() && h_scale.is_finite()) {
                    return Err(invalid("scale", "must be finite and nonnegative"));
                }
            }
            _ => {}
        }
        let k = Constants {
            r: params.r,
            delta: params.delta,
            gamma: params.gamma,
            beta: params.beta,
            excess,
            var,
            death_factor: params.zeta.powf(1.0 - params.gamma),
        };
        let n_steps = ((config.horizon / config.dt) - 1e-9).ceil().max(1.0) as usize;
        let steps_per_year = (1.0 / config.dt).round().max(1.0) as usize;
        let mut model = Model {
            params: *params,
            efficacy,
            k,
            curve: policy.curve(),
            policy,
            dt: config.dt,
            horizon: config.horizon,
            n_steps,
            steps_per_year,
            schedule: None,
            schedule_truncated: false,
        };
        if !matches!(model.policy, Policy::Custom(_)) {
            model.build_schedule()?;
        }
        Ok(model)
    }

    fn step_len(&self, i: usize) -> f64 {
        if i + 1 == self.n_steps {
            self.horizon - self.dt * i as f64
        } else {
            self.dt
        }
    }

    /// Controls at hazard `m` and time `t` after `n` deaths.
    fn controls(&self, t: f64, m: f64, n: u32) -> Result<(f64, f64)> {
        let (c, h) = match &self.policy {
            Policy::Analytic(curve) => {
                let c = gompertz_core::controls(m, curve, self.efficacy)?;
                (c.c, c.h)
            }
            Policy::ScaledAnalytic {
                curve,
                c_scale,
                h_scale,
            } => {
                let c = gompertz_core::controls(m, curve, self.efficacy)?;
                (c.c * c_scale, c.h * h_scale)
            }
            Policy::ConstantRates { c, h } => (*c, *h),
            Policy::Custom(f) => f(t, m, n),
        };
        check_rates(t, c, h)?;
        Ok((c, h))
    }

    /// Step starting at `(t, m)`: controls at the predicted midpoint hazard.
    fn segment(&self, t: f64, m: f64, n: u32, len: f64) -> Result<Segment> {
        let (_, h0) = self.controls(t, m, n)?;
        let m_mid = m * ((self.k.beta - self.efficacy.g(h0)) * 0.5 * len).exp();
        let (c, h) = self.controls(t + 0.5 * len, m_mid, n)?;
        let kappa = self.k.beta - self.efficacy.g(h);
        Ok(Segment::new(m, c, h, kappa, &self.k))
    }

    fn build_schedule(&mut self) -> Result<()> {
        let mut steps = Vec::with_capacity(self.n_steps);
        let mut m = self.params.m0;
        for i in 0..self.n_steps {
            let t = self.dt * i as f64;
            let len = self.step_len(i);
            let seg = match self.segment(t, m, 0, len) {
                Ok(s) => s,
                Err(Error::OutOfRange { .. }) if self.curve.is_some() => {
                    self.schedule_truncated = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let step = Step::new(seg, len);
            m = step.m_end;
            steps.push(step);
        }
        self.schedule = Some(steps);
        Ok(())
    }

    /// `u` used to value the tail at hazard `m`.
    fn reference_rate(&self, m: f64) -> Result<f64> {
        if let Some(curve) = self.curve {
            let (lo, hi) = curve.range();
            if m >= lo && m <= hi {
                return curve.u_at(m);
            }
        }
        c0(m, &self.params)
    }
}

fn check_rates(t: f64, c: f64, h: f64) -> Result<()> {
    if !(c >= 0.0 && h >= 0.0 && c.is_finite() && h.is_finite()) {
        return Err(Error::Domain(format!(
            "policy returned invalid rates c={c}, h={h} at t={t}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct PathResult {
    welfare: f64,
    tail: f64,
    first_death: f64,
    n_deaths: u32,
    deaths: Vec<f64>,
    truncated: bool,
}

struct PathState {
    /// `e^{−δt} W^{1−γ}`.
    z: f64,
    acc: f64,
    /// Hazard integrated since the last death.
    spent: f64,
    threshold: f64,
    n: u32,
    first: f64,
    deaths: Vec<f64>,
}

impl Model<'_> {
    fn run_path(&self, seed: u64, path: u64, record: bool) -> Result<PathResult> {
        let mut clock = ChaCha8Rng::seed_from_u64(seed);
        clock.set_stream(2 * path);
        let mut brown = ChaCha8Rng::seed_from_u64(seed);
        brown.set_stream(2 * path + 1);
        let risky = self.k.var > 0.0;
        let mut st = PathState {
            z: 1.0,
            acc: 0.0,
            spent: 0.0,
            threshold: clock.sample(Exp1),
            n: 0,
            first: f64::INFINITY,
            deaths: Vec::new(),
        };
        let mut m = self.params.m0;
        let mut t = 0.0;
        let mut truncated = false;

        for i in 0..self.n_steps {
            let step = match &self.schedule {
                Some(s) => match s.get(i) {
                    Some(step) => *step,
                    None => {
                        truncated = true;
                        break;
                    }
                },
                None => {
                    let len = self.step_len(i);
                    Step::new(self.segment(t, m, st.n, len)?, len)
                }
            };
            self.advance(&step, t, &mut st, &mut clock, &mut brown, risky, record);
            t += step.len;
            m = step.m_end;
            if !m.is_finite() || m > f64::MAX / 4.0 {
                truncated = true;
                break;
            }
            if (i + 1) % self.steps_per_year == 0 {
                let tail = self.tail(st.z, m)?;
                if tail.abs() < EARLY_STOP * st.acc.abs() {
                    break;
                }
            }
        }
        let tail = self.tail(st.z, m)?;
        Ok(PathResult {
            welfare: st.acc + tail,
            tail,
            first_death: st.first,
            n_deaths: st.n,
            deaths: st.deaths,
            truncated,
        })
    }

    fn tail(&self, z: f64, m: f64) -> Result<f64> {
        let g = self.k.gamma;
        Ok(z / (1.0 - g) * self.reference_rate(m)?.powf(-g))
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        step: &Step,
        t: f64,
        st: &mut PathState,
        clock: &mut ChaCha8Rng,
        brown: &mut ChaCha8Rng,
        risky: bool,
        record: bool,
    ) {
        let need = st.threshold - st.spent;
        if step.hazard < need {
            st.acc += st.z * step.utility;
            st.z *= step.growth;
            if risky {
                let w: f64 = brown.sample(StandardNormal);
                st.z *= (step.seg.vol * step.len.sqrt() * w).exp();
            }
            st.spent += step.hazard;
            return;
        }
        let mut offset = 0.0;
        let mut seg = step.seg;
        loop {
            let rest = step.len - offset;
            let need = st.threshold - st.spent;
            let hazard = seg.hazard(rest);
            let len = if hazard < need { rest } else { seg.crossing(need).min(rest) };
            st.acc += st.z * seg.utility(len);
            st.z *= (seg.drift * len).exp();
            if risky {
                let w: f64 = brown.sample(StandardNormal);
                st.z *= (seg.vol * len.sqrt() * w).exp();
            }
            if hazard < need {
                st.spent += hazard;
                return;
            }
            let at = t + offset + len;
            st.n += 1;
            if st.n == 1 {
                st.first = at;
            }
            if record {
                st.deaths.push(at);
            }
            st.z *= self.k.death_factor;
            st.spent = 0.0;
            st.threshold = clock.sample(Exp1);
            offset += len;
            seg = step.seg.at(offset);
        }
    }
}

/// Simulates `config.n_paths` households starting from unit wealth at hazard `params.m0`.
pub fn simulate(params: &ModelParams, efficacy: &EfficacyModel, policy: Policy<'_>, config: &SimConfig) -> Result<SimOutcome> {
    let model = Model::new(params, efficacy, policy, config)?;
    let paths: Vec<PathResult> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| model.run_path(config.seed, p, config.record_deaths))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(paths, config))
}

fn summarize(paths: Vec<PathResult>, config: &SimConfig) -> SimOutcome {
    let welfare: Vec<f64> = paths.iter().map(|p| p.welfare).collect();
    let n = welfare.len() as f64;
    let mean = pairwise_sum(&welfare) / n;
    let dev: Vec<f64> = welfare.iter().map(|w| (w - mean).powi(2)).collect();
    let std_err = if welfare.len() > 1 {
        (pairwise_sum(&dev) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    let tails: Vec<f64> = paths.iter().map(|p| p.tail.abs()).collect();
    let truncation_bound = pairwise_sum(&tails) / n;
    SimOutcome {
        first_death: paths.iter().map(|p| p.first_death).collect(),
        n_deaths: paths.iter().map(|p| p.n_deaths).collect(),
        truncated_paths: paths.iter().filter(|p| p.truncated).count(),
        death_times: config.record_deaths.then(|| paths.into_iter().map(|p| p.deaths).collect()),
        welfare,
        mean,
        std_err,
        truncation_bound,
        horizon_adequate: truncation_bound < config.truncation_tol,
    }
}

/// Sum in a fixed binary tree, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    ScaleC(f64),
    ScaleH(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOutcome {
    pub base: f64,
    pub base_se: f64,
    pub perturbed: f64,
    pub perturbed_se: f64,
    /// `√(se_base² + se_perturbed²)`.
    pub pooled_se: f64,
    /// Standard error of the path-wise difference.
    pub paired_se: f64,
    pub significant_worse: bool,
}

/// Compares the analytic policy with a perturbed one on common random numbers.
/// Factors must lie in `[0, 2]`.
pub fn optimality_probe(
    params: &ModelParams,
    efficacy: &EfficacyModel,
    curve: &PolicyCurve,
    perturbation: Perturbation,
    config: &SimConfig,
) -> Result<ProbeOutcome> {
    let (c_scale, h_scale) = match perturbation {
        Perturbation::ScaleC(l) => (l, 1.0),
        Perturbation::ScaleH(l) => (1.0, l),
    };
    for s in [c_scale, h_scale] {
        if !(0.0..=2.0).contains(&s) {
            return Err(invalid("perturbation", "factor must lie in [0, 2]"));
        }
    }
    let base = simulate(params, efficacy, Policy::Analytic(curve), config)?;
    let pert = simulate(
        params,
        efficacy,
        Policy::ScaledAnalytic {
            curve,
            c_scale,
            h_scale,
        },
        config,
    )?;
    let diff: Vec<f64> = base.welfare.iter().zip(&pert.welfare).map(|(b, p)| b - p).collect();
    let n = diff.len() as f64;
    let d_mean = pairwise_sum(&diff) / n;
    let d_dev: Vec<f64> = diff.iter().map(|d| (d - d_mean).powi(2)).collect();
    let paired_se = if diff.len() > 1 {
        (pairwise_sum(&d_dev) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    let pooled_se = base.std_err.hypot(pert.std_err);
    Ok(ProbeOutcome {
        base: base.mean,
        base_se: base.std_err,
        perturbed: pert.mean,
        perturbed_se: pert.std_err,
        pooled_se,
        paired_se,
        significant_worse: base.mean - pert.mean > 2.0 * pooled_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants() -> Constants {
        Constants {
            r: 0.01,
            delta: 0.01,
            gamma: 0.67,
            beta: 0.077,
            excess: 0.0,
            var: 0.0,
            death_factor: 0.5f64.powf(0.33),
        }
    }

    #[test]
    fn phi_matches_series_near_zero() {
        for x in [1e-10f64, -1e-9, 1e-6, -0.3, 2.0] {
            let direct = if x.abs() > 1e-5 { x.exp_m1() / x } else { 1.0 + x / 2.0 + x * x / 6.0 };
            assert!((phi(x) - direct).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn crossing_inverts_hazard() {
        for kappa in [0.077, 0.0, -0.02, 1e-14] {
            let seg = Segment::new(0.3, 0.02, 0.001, kappa, &constants());
            for need in [1e-9, 0.01, 0.25] {
                let len = seg.crossing(need);
                assert!((seg.hazard(len) / need - 1.0).abs() < 1e-12, "{kappa} {need}");
            }
        }
    }

    #[test]
    fn offset_segment_continues_hazard() {
        let seg = Segment::new(0.3, 0.02, 0.001, 0.05, &constants());
        let whole = seg.hazard(0.02);
        let split = seg.hazard(0.007) + seg.at(0.007).hazard(0.013);
        assert!((whole - split).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-12);
        assert_eq!(pairwise_sum(&xs).to_bits(), pairwise_sum(&xs.clone()).to_bits());
    }

    #[test]
    fn config_rejects_coarse_steps() {
        let c = SimConfig {
            dt: 0.1,
            ..Default::default()
        };
        assert!(matches!(c.check(), Err(Error::InvalidParameter { name: "dt", .. })));
        assert!(SimConfig::default().check().is_ok());
    }
}
