use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A function was evaluated outside its domain (e.g. utility at x <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand produced a non-finite value at a quadrature node.
    #[error("non-finite integrand value {value} at node {node}")]
    Evaluation { node: f64, value: f64 },

    /// The supplied interval does not bracket a root.
    #[error("no sign change on [{lo}, {hi}]: g(lo)={glo}, g(hi)={ghi}")]
    Bracketing { lo: f64, hi: f64, glo: f64, ghi: f64 },

    /// An iterative method exhausted its iteration budget.
    #[error("iteration cap exceeded: {0}")]
    Convergence(String),

    /// Marginal utility requested exactly at a kink.
    #[error("marginal utility undefined at kink x={at}: left slope {left}, right slope {right}")]
    NonDifferentiable { at: f64, left: f64, right: f64 },

    /// An operation requiring concavity was called on a non-concave utility.
    #[error("utility is not concave: {0}; concavify first")]
    NotConcave(String),

    /// The optimization problem is ill-posed (divergent integral or
    /// non-positive effective risk aversion).
    #[error("ill-posed problem: {0}")]
    Wellposedness(String),

    /// A value lies outside the range of the function being inverted.
    #[error("value {value} outside range ({lo}, {hi})")]
    Range { value: f64, lo: f64, hi: f64 },

    /// An evaluation point is outside the replication grid's coverage.
    #[error("evaluation point {x} outside covered range [{lo}, {hi}]")]
    Coverage { x: f64, lo: f64, hi: f64 },

    /// Invariant violation that indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
