use thiserror::Error;

/// Errors raised by the laboratory's numeric and exact routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Argument inside the domain but outside the supported evaluation range.
    #[error("range error: {0}")]
    Range(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:e} with {nodes} nodes (target {target:e})")]
    Quadrature {
        achieved: f64,
        target: f64,
        nodes: usize,
    },

    /// The requested quantity is undefined for the given data.
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
