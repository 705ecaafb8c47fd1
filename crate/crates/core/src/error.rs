use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

/// One iteration of the backward-shooting bracket refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketStep {
    /// Hazard where the lower and upper seeds were placed.
    pub m_start: f64,
    /// Lower trajectory value at the anchor node.
    pub lo: f64,
    /// Upper trajectory value at the anchor node.
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A well-posedness condition failed; `condition` names the violated inequality.
    #[error("well-posedness condition violated: {condition} (lhs {lhs:e}, rhs {rhs:e})")]
    Condition {
        condition: String,
        lhs: f64,
        rhs: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("incomplete gamma evaluation failed at s={s}, z={z}: {reason}; use the quadrature form")]
    IncompleteGamma { s: f64, z: f64, reason: &'static str },

    /// The trial value lies outside the solution manifold of the ODE.
    #[error("bracket breach at m={m:e}, u={u:e}: no nonnegative slope solves the ODE")]
    BracketBreach { m: f64, u: f64 },

    #[error("integrator failed at x={at:e}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("solver did not reach tolerance {tol:e}: {reason}")]
    Convergence {
        tol: f64,
        reason: String,
        trace: Vec<BracketStep>,
    },

    #[error("hazard {m:e} outside curve range [{min:e}, {max:e}]")]
    OutOfRange { m: f64, min: f64, max: f64 },

    #[error("insufficient data: {rows} valid rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },

    #[error("degenerate design: {0}")]
    Degenerate(&'static str),

    #[error("no feasible trial in the search box: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
