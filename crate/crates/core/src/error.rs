//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("singular matrix (|det| = {det:e} below 1e-12)")]
    SingularMatrix { det: f64 },

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("map was rejected by validation: {reason}")]
    MapRejected { reason: String },

    #[error("cylinder count exceeded cap {cap} at level {n} (partial count {partial})")]
    CylinderCap { cap: usize, n: usize, partial: usize },

    #[error("parameter domain violated: {0}")]
    ParameterDomain(String),

    #[error("branch matrices do not pairwise commute (max defect {defect:e})")]
    NonCommuting { defect: f64 },

    #[error("expansion hypothesis fails: {0}")]
    ExpansionHypothesis(String),

    #[error("eigensolver did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("point {0:?} lies outside every branch domain closure")]
    OutsideDomain(Vec<f64>),

    #[error("orbit escaped the ambient region at {0:?}")]
    OrbitEscape(Vec<f64>),

    #[error("orbit restarts exhausted after {0} boundary hits")]
    RetryExhausted(usize),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("eigenvalue-1 eigenspace numerically deficient (residual {residual:e})")]
    DeficientEigenspace { residual: f64 },

    #[error("negative mass {mass:e} in density exceeds clip budget (assembly bug?)")]
    NegativeDensity { mass: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
