//! Files, threads and the command line around `gompertz-core`.
//!
//! - [`sim`]: Monte Carlo welfare of a policy and optimality probes.
//! - [`calib`]: the two-stage cohort calibration with parallel restarts.
//! - [`config`], [`io`], [`manifest`]: run configuration, CSV and
//!   `key=value` files, provenance records.
//! - [`cli`]: the `gompertz-opt` subcommands and exit codes.
//! - [`fixtures`]: the synthetic cohorts shipped under `tests/data`.

pub mod calib;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod manifest;
pub mod sim;
pub mod threads;

pub use error::{AppError, AppResult, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_VALIDATION};
