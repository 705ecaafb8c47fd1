//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key has a default, so an
//! empty file resolves to the calibrated model. Unknown keys and repeated
//! keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use gompertz_core::{EfficacyModel, GridSpec, ModelParams, SearchSpec, Spacing};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};
use crate::sim::{SimConfig, MAX_DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficacyKind {
    Zero,
    Isoelastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimPolicy {
    /// Optimal controls from the solved curve.
    Analytic,
    /// Fixed `sim.c` and `sim.h`.
    Constant,
    /// `c0(m0)` with no healthcare.
    C0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub efficacy: EfficacyKind,
    pub a: f64,
    pub q: f64,
    pub grid: GridSpec,
    pub tol: f64,
    pub anchor_age: f64,
    /// Hazard at `anchor_age`; `None` means `m0`.
    pub anchor_hazard: Option<f64>,
    pub age_min: f64,
    pub age_max: f64,
    pub sim: SimConfig,
    pub sim_policy: SimPolicy,
    pub sim_c: f64,
    pub sim_h: f64,
    /// Upper end of the curve solved for simulation.
    pub sim_m_max: f64,
    pub search: SearchSpec,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: ModelParams::calibrated(),
            efficacy: EfficacyKind::Isoelastic,
            a: 0.1,
            q: 0.46,
            grid: GridSpec::log(1e-5, 20.0, 256),
            tol: 1e-8,
            anchor_age: 0.0,
            anchor_hazard: None,
            age_min: 0.0,
            age_max: 100.0,
            sim: SimConfig {
                dt: MAX_DT,
                ..SimConfig::default()
            },
            sim_policy: SimPolicy::Analytic,
            sim_c: 0.0,
            sim_h: 0.0,
            sim_m_max: 1000.0,
            search: SearchSpec::default(),
        }
    }
}

fn num(v: &str) -> Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got {v:?}"))
}

fn count(v: &str) -> Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got {v:?}"))
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

impl Config {
    /// Parses a file's text; `path` only labels errors.
    pub fn parse(text: &str, path: &Path) -> AppResult<Config> {
        let mut cfg = Config::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| AppError::Config {
                path: path.to_path_buf(),
                line,
                msg,
            };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {body:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(err(format!("{key} already set on line {prev}")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> AppResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Config::parse(&text, path)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.params;
        match key {
            "r" => p.r = num(v)?,
            "delta" => p.delta = num(v)?,
            "beta" => p.beta = num(v)?,
            "gamma" => p.gamma = num(v)?,
            "zeta" => p.zeta = num(v)?,
            "mu" => p.mu = num(v)?,
            "sigma" => p.sigma = num(v)?,
            "m0" => p.m0 = num(v)?,
            "efficacy" => {
                self.efficacy = match v {
                    "zero" => EfficacyKind::Zero,
                    "isoelastic" => EfficacyKind::Isoelastic,
                    _ => return Err(format!("efficacy must be zero or isoelastic, got {v:?}")),
                }
            }
            "a" => self.a = num(v)?,
            "q" => self.q = num(v)?,
            "grid.min" => self.grid.m_min = num(v)?,
            "grid.max" => self.grid.m_max = num(v)?,
            "grid.n" => self.grid.n_points = count(v)?,
            "grid.spacing" => {
                self.grid.spacing = match v {
                    "log" => Spacing::Log,
                    "linear" => Spacing::Linear,
                    _ => return Err(format!("grid.spacing must be log or linear, got {v:?}")),
                }
            }
            "solver.tol" => self.tol = num(v)?,
            "anchor.age" => self.anchor_age = num(v)?,
            "anchor.hazard" => self.anchor_hazard = Some(num(v)?),
            "profile.age_min" => self.age_min = num(v)?,
            "profile.age_max" => self.age_max = num(v)?,
            "sim.paths" => self.sim.n_paths = count(v)?,
            "sim.horizon" => self.sim.horizon = num(v)?,
            "sim.dt" => self.sim.dt = num(v)?,
            "sim.seed" => self.sim.seed = v.parse().map_err(|_| format!("expected a 64-bit seed, got {v:?}"))?,
            "sim.truncation_tol" => self.sim.truncation_tol = num(v)?,
            "sim.risky" => self.sim.risky = flag(v)?,
            "sim.policy" => {
                self.sim_policy = match v {
                    "analytic" => SimPolicy::Analytic,
                    "constant" => SimPolicy::Constant,
                    "c0" => SimPolicy::C0,
                    _ => return Err(format!("sim.policy must be analytic, constant or c0, got {v:?}")),
                }
            }
            "sim.c" => self.sim_c = num(v)?,
            "sim.h" => self.sim_h = num(v)?,
            "sim.m_max" => self.sim_m_max = num(v)?,
            "search.a_min" => self.search.a_bounds.0 = num(v)?,
            "search.a_max" => self.search.a_bounds.1 = num(v)?,
            "search.q_min" => self.search.q_bounds.0 = num(v)?,
            "search.q_max" => self.search.q_bounds.1 = num(v)?,
            "search.restarts" => self.search.restarts = count(v)?,
            "search.max_evals" => self.search.max_evals = count(v)?,
            "search.x_tol" => self.search.x_tol = num(v)?,
            "search.seed" => self.search.seed = v.parse().map_err(|_| format!("expected a 64-bit seed, got {v:?}"))?,
            "search.grid_n" => self.search.grid_points = count(v)?,
            "search.tol" => self.search.solver_tol = num(v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn efficacy_model(&self) -> gompertz_core::Result<EfficacyModel> {
        match self.efficacy {
            EfficacyKind::Zero => Ok(EfficacyModel::Zero),
            EfficacyKind::Isoelastic => EfficacyModel::isoelastic(self.a, self.q),
        }
    }

    /// `(age, hazard)` the mortality profile is pinned to.
    pub fn anchor(&self) -> (f64, f64) {
        (self.anchor_age, self.anchor_hazard.unwrap_or(self.params.m0))
    }

    /// Every resolved key with its value, sorted by key.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let p = &self.params;
        let mut m = BTreeMap::new();
        let f = |x: f64| format!("{x:?}");
        m.insert("r", f(p.r));
        m.insert("delta", f(p.delta));
        m.insert("beta", f(p.beta));
        m.insert("gamma", f(p.gamma));
        m.insert("zeta", f(p.zeta));
        m.insert("mu", f(p.mu));
        m.insert("sigma", f(p.sigma));
        m.insert("m0", f(p.m0));
        m.insert("efficacy", format!("{:?}", self.efficacy));
        m.insert("a", f(self.a));
        m.insert("q", f(self.q));
        m.insert("grid.min", f(self.grid.m_min));
        m.insert("grid.max", f(self.grid.m_max));
        m.insert("grid.n", self.grid.n_points.to_string());
        m.insert("grid.spacing", format!("{:?}", self.grid.spacing));
        m.insert("solver.tol", f(self.tol));
        m.insert("anchor.age", f(self.anchor_age));
        m.insert("anchor.hazard", f(self.anchor().1));
        m.insert("profile.age_min", f(self.age_min));
        m.insert("profile.age_max", f(self.age_max));
        m.insert("sim.paths", self.sim.n_paths.to_string());
        m.insert("sim.horizon", f(self.sim.horizon));
        m.insert("sim.dt", f(self.sim.dt));
        m.insert("sim.seed", self.sim.seed.to_string());
        m.insert("sim.truncation_tol", f(self.sim.truncation_tol));
        m.insert("sim.risky", self.sim.risky.to_string());
        m.insert("sim.policy", format!("{:?}", self.sim_policy));
        m.insert("sim.c", f(self.sim_c));
        m.insert("sim.h", f(self.sim_h));
        m.insert("sim.m_max", f(self.sim_m_max));
        m.insert("search.a_min", f(self.search.a_bounds.0));
        m.insert("search.a_max", f(self.search.a_bounds.1));
        m.insert("search.q_min", f(self.search.q_bounds.0));
        m.insert("search.q_max", f(self.search.q_bounds.1));
        m.insert("search.restarts", self.search.restarts.to_string());
        m.insert("search.max_evals", self.search.max_evals.to_string());
        m.insert("search.x_tol", f(self.search.x_tol));
        m.insert("search.seed", self.search.seed.to_string());
        m.insert("search.grid_n", self.search.grid_points.to_string());
        m.insert("search.tol", f(self.search.solver_tol));
        m
    }

    /// SHA-256 of the canonical `key=value` lines, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
