//! Subcommands, flag handling and the exit-code contract.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | bad flags, configuration, input file or IO |
//! | 2 | a parameter or well-posedness condition failed |
//! | 3 | a solver, integrator or search did not converge |

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gompertz_core::baseline::AgingBaseline;
use gompertz_core::{
    c0, endogenous_mortality, solve_u_star_with, value_function, GridSpec, PolicyCurve,
    QuadratureSpec, SolverOptions,
};

use crate::calib::calibrate;
use crate::config::{Config, SimPolicy};
use crate::error::{AppError, AppResult, EXIT_CONFIG};
use crate::io::{
    read_cohort_csv, write_curve_csv, write_fit, write_fitted_csv, write_profile_csv, write_sim_paths, write_sim_summary,
    write_table,
};
use crate::manifest::RunManifest;
use crate::sim::{simulate, Policy};
use crate::threads::{install, requested_threads};

#[derive(Debug, Parser)]
#[command(name = "gompertz-opt", version, about = "Optimal consumption and healthcare under Gompertz mortality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal consumption rate on a hazard grid.
    Solve(Common),
    /// Mortality, consumption and healthcare by age.
    Profile(Common),
    /// Monte Carlo welfare of a policy next to the analytic value.
    Simulate(SimulateArgs),
    /// Fit beta and m0 on an early cohort, then a and q on a late one.
    Calibrate(CalibrateArgs),
    /// CSV inputs for the policy, profile and mortality figures.
    PlotData(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// key = value configuration file; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long = "grid.min")]
    pub grid_min: Option<String>,
    #[arg(long = "grid.max")]
    pub grid_max: Option<String>,
    #[arg(long = "grid.n")]
    pub grid_n: Option<String>,
    #[arg(long = "grid.spacing")]
    pub grid_spacing: Option<String>,
    #[arg(long = "anchor-age")]
    pub anchor_age: Option<String>,
    #[arg(long = "anchor-hazard")]
    pub anchor_hazard: Option<String>,
    /// Override any configuration key, e.g. `--set a=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub paths: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    /// Also write welfare, death count and first death time per path.
    #[arg(long)]
    pub dump_paths: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Early cohort (`age,rate`), fitted without healthcare.
    #[arg(long)]
    pub early: PathBuf,
    /// Late cohort (`age,rate`), fitted with healthcare.
    #[arg(long)]
    pub late: PathBuf,
    #[arg(long, default_value_t = 1900)]
    pub early_year: i32,
    #[arg(long, default_value_t = 1940)]
    pub late_year: i32,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub restarts: Option<String>,
    #[arg(long = "max-evals")]
    pub max_evals: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v.clone()));
            }
        };
        push("grid.min", &self.grid_min);
        push("grid.max", &self.grid_max);
        push("grid.n", &self.grid_n);
        push("grid.spacing", &self.grid_spacing);
        push("anchor.age", &self.anchor_age);
        push("anchor.hazard", &self.anchor_hazard);
        o
    }

    fn resolve(&self, extra: &[(&str, &Option<String>)]) -> AppResult<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let mut all = self.overrides();
        for (k, v) in extra {
            if let Some(v) = v {
                all.push((k.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| AppError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            all.push((k.trim().to_string(), v.trim().to_string()));
        }
        for (k, v) in all {
            cfg.set(&k, &v).map_err(|e| AppError::Usage(format!("--{k}: {e}")))?;
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, out) = match &cli.command {
        Command::Solve(c) => ("solve", c.out.clone()),
        Command::Profile(c) => ("profile", c.out.clone()),
        Command::Simulate(a) => ("simulate", a.common.out.clone()),
        Command::Calibrate(a) => ("calibrate", a.common.out.clone()),
        Command::PlotData(c) => ("plot-data", c.out.clone()),
    };
    let start = Instant::now();
    let mut config: Option<Config> = None;
    let result = std::fs::create_dir_all(&out)
        .map_err(|e| AppError::io(&out, e))
        .and_then(|_| requested_threads())
        .and_then(|_| dispatch(&cli.command, &out, &mut config));
    let (outputs, code) = match result {
        Ok(outputs) => (outputs, 0),
        Err(e) => {
            eprintln!("error: {e}");
            (Vec::new(), e.exit_code())
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config_hash: config.as_ref().map(Config::hash).unwrap_or_default(),
        outputs,
        wall_time: start.elapsed().as_secs_f64(),
        exit_code: code,
        config: config
            .as_ref()
            .map(|c| c.canonical().into_iter().map(|(k, v)| (k.to_string(), v)).collect())
            .unwrap_or_default(),
    };
    if out.is_dir() {
        if let Err(e) = manifest.write(&out) {
            eprintln!("error: {e}");
            return if code == 0 { e.exit_code() } else { code };
        }
    }
    code
}

fn dispatch(command: &Command, out: &Path, slot: &mut Option<Config>) -> AppResult<Vec<PathBuf>> {
    match command {
        Command::Solve(c) => {
            let cfg = slot.insert(c.resolve(&[])?);
            cmd_solve(cfg, out)
        }
        Command::Profile(c) => {
            let cfg = slot.insert(c.resolve(&[])?);
            cmd_profile(cfg, out)
        }
        Command::PlotData(c) => {
            let cfg = slot.insert(c.resolve(&[])?);
            cmd_plot_data(cfg, out)
        }
        Command::Simulate(a) => {
            let cfg = slot.insert(a.common.resolve(&[
                ("sim.seed", &a.seed),
                ("sim.paths", &a.paths),
                ("sim.horizon", &a.horizon),
            ])?);
            cmd_simulate(cfg, out, a.dump_paths)
        }
        Command::Calibrate(a) => {
            let cfg = slot.insert(a.common.resolve(&[
                ("search.seed", &a.seed),
                ("search.restarts", &a.restarts),
                ("search.max_evals", &a.max_evals),
            ])?);
            cmd_calibrate(cfg, out, a)
        }
    }
}

fn solve(cfg: &Config, grid: &GridSpec) -> AppResult<PolicyCurve> {
    let eff = cfg.efficacy_model()?;
    Ok(solve_u_star_with(&cfg.params, &eff, grid, &SolverOptions::new(cfg.tol))?)
}

pub fn cmd_solve(cfg: &Config, out: &Path) -> AppResult<Vec<PathBuf>> {
    let curve = solve(cfg, &cfg.grid)?;
    let path = out.join("curve.csv");
    write_curve_csv(&path, &curve)?;
    println!(
        "solved {} nodes on [{:e}, {:e}], max |residual|/u² = {:e}",
        curve.nodes().len(),
        cfg.grid.m_min,
        cfg.grid.m_max,
        curve.max_relative_residual()
    );
    Ok(vec![path])
}

pub fn cmd_profile(cfg: &Config, out: &Path) -> AppResult<Vec<PathBuf>> {
    let eff = cfg.efficacy_model()?;
    let curve = solve(cfg, &cfg.grid)?;
    let profile = endogenous_mortality(&cfg.params, &eff, &curve, (cfg.age_min, cfg.age_max), cfg.anchor())?;
    let path = out.join("profile.csv");
    write_profile_csv(&path, &profile)?;
    println!("profile over ages {}..{} written", cfg.age_min, cfg.age_max);
    Ok(vec![path])
}

pub fn cmd_plot_data(cfg: &Config, out: &Path) -> AppResult<Vec<PathBuf>> {
    let eff = cfg.efficacy_model()?;
    let curve = solve(cfg, &cfg.grid)?;
    let p = &cfg.params;
    let quad = QuadratureSpec::default();
    let upper = AgingBaseline::new(p, None)?;
    let lower = AgingBaseline::new(p, Some(curve.beta_g()))?;
    let mut rows = Vec::with_capacity(curve.nodes().len());
    for (i, &m) in curve.nodes().iter().enumerate() {
        let u0 = upper.quadrature(m, &quad)?;
        rows.push(vec![
            m,
            c0(m, p)?,
            u0,
            lower.quadrature(m, &quad)?,
            u0.min(upper.c0(m) + curve.beta_g()),
            curve.u()[i],
            curve.h()[i],
        ]);
    }
    let policy = out.join("fig_policy.csv");
    write_table(&policy, &["m", "c0", "u0", "lower", "upper", "u_star", "h"], &rows)?;

    let profile = endogenous_mortality(p, &eff, &curve, (cfg.age_min, cfg.age_max), cfg.anchor())?;
    let profile_path = out.join("fig_profile.csv");
    write_profile_csv(&profile_path, &profile)?;

    let (t0, m_anchor) = cfg.anchor();
    let rows: Vec<Vec<f64>> = profile
        .ages
        .iter()
        .zip(&profile.mortality)
        .map(|(&age, &m)| vec![age, m_anchor * (p.beta * (age - t0)).exp(), m])
        .collect();
    let mortality = out.join("fig_mortality.csv");
    write_table(&mortality, &["age", "gompertz", "endogenous"], &rows)?;
    println!("figure data written to {}", out.display());
    Ok(vec![policy, profile_path, mortality])
}

pub fn cmd_simulate(cfg: &Config, out: &Path, dump_paths: bool) -> AppResult<Vec<PathBuf>> {
    let eff = cfg.efficacy_model()?;
    let p = &cfg.params;
    let mut sim_cfg = cfg.sim;
    sim_cfg.record_deaths = false;
    let (outcome, analytic) = match cfg.sim_policy {
        SimPolicy::Analytic => {
            let grid = GridSpec {
                m_min: cfg.grid.m_min.min(0.5 * p.m0),
                m_max: cfg.sim_m_max.max(cfg.grid.m_max),
                ..cfg.grid
            };
            let curve = solve(cfg, &grid)?;
            let v = value_function(1.0, p.m0, &curve)?;
            let o = install(|| simulate(p, &eff, Policy::Analytic(&curve), &sim_cfg))??;
            (o, Some(v))
        }
        SimPolicy::Constant => {
            let policy = Policy::ConstantRates {
                c: cfg.sim_c,
                h: cfg.sim_h,
            };
            (install(|| simulate(p, &eff, policy, &sim_cfg))??, None)
        }
        SimPolicy::C0 => {
            let c = c0(p.m0, p)?;
            let policy = Policy::ConstantRates { c, h: 0.0 };
            let o = install(|| simulate(p, &eff, policy, &sim_cfg))??;
            let g = p.gamma;
            let v = (p.beta == 0.0).then(|| c.powf(-g) / (1.0 - g));
            (o, v)
        }
    };
    let summary = out.join("sim_summary.csv");
    write_sim_summary(&summary, &outcome, analytic)?;
    let mut outputs = vec![summary];
    if dump_paths {
        let paths = out.join("sim_paths.csv");
        write_sim_paths(&paths, &outcome)?;
        outputs.push(paths);
    }
    match analytic {
        Some(v) => println!(
            "mean welfare {:.10} ± {:.3e} (std err), analytic {:.10}, truncation bound {:.3e}",
            outcome.mean, outcome.std_err, v, outcome.truncation_bound
        ),
        None => println!(
            "mean welfare {:.10} ± {:.3e} (std err), analytic n/a, truncation bound {:.3e}",
            outcome.mean, outcome.std_err, outcome.truncation_bound
        ),
    }
    Ok(outputs)
}

pub fn cmd_calibrate(cfg: &Config, out: &Path, args: &CalibrateArgs) -> AppResult<Vec<PathBuf>> {
    let early = read_cohort_csv(&args.early, args.early_year)?;
    let late = read_cohort_csv(&args.late, args.late_year)?;
    for (c, p) in [(&early, &args.early), (&late, &args.late)] {
        if c.dropped > 0 {
            eprintln!("warning: {} rows with zero or missing rate dropped from {}", c.dropped, p.display());
        }
    }
    let mut search = cfg.search;
    search.anchor_age = cfg.anchor_age;
    let cal = install(|| calibrate(&early.table, &late.table, &cfg.params, &search))??;

    let g_path = out.join("fit_gompertz.txt");
    write_fit(&g_path, &cal.gompertz)?;
    let e_path = out.join("fit_efficacy.txt");
    write_fit(&e_path, &cal.efficacy)?;

    let beta = cal.gompertz.value("beta").unwrap_or(f64::NAN);
    let m0 = cal.gompertz.value("m0").unwrap_or(f64::NAN);
    let gompertz_fit: Vec<f64> = early
        .table
        .ages()
        .iter()
        .map(|a| m0 * (beta * (a - search.anchor_age)).exp())
        .collect();
    let early_csv = out.join("fitted_early.csv");
    write_fitted_csv(&early_csv, &early.table, &gompertz_fit)?;
    let late_csv = out.join("fitted_late.csv");
    write_fitted_csv(&late_csv, &late.table, &cal.fitted_late)?;

    println!(
        "beta={beta} m0={m0} a={} q={} converged={}",
        cal.efficacy.value("a").unwrap_or(f64::NAN),
        cal.efficacy.value("q").unwrap_or(f64::NAN),
        cal.efficacy.converged
    );
    Ok(vec![g_path, e_path, early_csv, late_csv])
}
