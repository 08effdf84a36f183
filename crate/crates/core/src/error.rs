use thiserror::Error;

/// Errors raised by the library. Divergent averages are not errors; they are
/// reported through the `diverged` flag of the result types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SguError {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("singular matrix: condition number {condition:.3e} exceeds {limit:.0e}")]
    Singular { condition: f64, limit: f64 },

    #[error("gap closes at lambda = {lambda}, k = {k}")]
    GapClosure { lambda: f64, k: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: error {error:.3e} after {nodes} nodes")]
    QuadratureFailed {
        a: f64,
        b: f64,
        error: f64,
        nodes: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, SguError>;

pub(crate) fn ensure(cond: bool, what: &'static str, value: f64) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SguError::Domain { what, value })
    }
}
