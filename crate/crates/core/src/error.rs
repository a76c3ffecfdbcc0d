use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// A component was used before it was initialised (e.g. a beam kernel without its table).
    #[error("state error: {0}")]
    State(String),

    /// Quadrature or other numerical procedure failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Tree growth exceeded the node cap; usually a horizon beyond the blow-up time.
    #[error("blow-up suspected: tree reached {nodes} particles (cap {cap})")]
    BlowUp { nodes: usize, cap: usize },

    #[error("non-finite factor at particle {particle}: {what}")]
    NumericFault { particle: usize, what: &'static str },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("moment check infeasible: r_p = {r} is not below the radius of convergence {radius}")]
    Infeasible { r: f64, radius: f64 },

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("every Monte-Carlo path failed ({blowups} blow-ups)")]
    AllPathsFailed { blowups: usize },
}
