//! Error type shared by all solver stages.

use std::fmt;

/// Errors produced while building node sets, stencils, quadratures, or
/// while assembling and integrating the semi-discrete system.
#[derive(Debug, Clone)]
pub enum Error {
    /// Grid spacing does not divide a domain side length.
    InvalidSpacing(String),
    /// A geometric region degenerated to zero measure.
    EmptyRegion(String),
    /// Fewer nodes than basis dimension inside the weight support.
    StencilDeficient {
        /// Stencil center.
        at: [f64; 2],
        /// Basis dimension Q.
        needed: usize,
        /// Nodes actually found.
        found: usize,
    },
    /// Moment matrix is numerically rank deficient.
    IllConditioned {
        /// Stencil center.
        at: [f64; 2],
        /// 1-norm condition estimate (infinite when not positive definite).
        cond: f64,
    },
    /// Iteration or constraint matrix could not be factorized.
    SingularSystem(String),
    /// Operation requested outside its domain of validity.
    NotApplicable(String),
    /// Invalid run or solver configuration.
    InvalidConfig(String),
    /// Adaptive time integrator could not complete.
    IntegratorFailure {
        /// Time at which the step failed.
        t: f64,
        /// Last attempted step size.
        dt: f64,
        /// Diagnostic message.
        message: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpacing(msg) => write!(f, "invalid spacing: {msg}"),
            Error::EmptyRegion(msg) => write!(f, "empty region: {msg}"),
            Error::StencilDeficient { at, needed, found } => write!(
                f,
                "stencil deficient at ({}, {}): need {needed} nodes, found {found}",
                at[0], at[1]
            ),
            Error::IllConditioned { at, cond } => write!(
                f,
                "moment matrix ill-conditioned at ({}, {}): cond estimate {cond:.3e}",
                at[0], at[1]
            ),
            Error::SingularSystem(msg) => write!(f, "singular system: {msg}"),
            Error::NotApplicable(msg) => write!(f, "not applicable: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::IntegratorFailure { t, dt, message } => write!(
                f,
                "integrator failure at t = {t:.6e} (dt = {dt:.3e}): {message}"
            ),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
