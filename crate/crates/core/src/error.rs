use thiserror::Error;

/// Errors raised by the grid, kernel, solver and evolution routines.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel evaluated at coincident points")]
    Singular,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("cap active at convergence: max {max:.6e} reaches cap {cap:.6e}")]
    CapActive { max: f64, cap: f64 },
    #[error("time step {dt:.3e} exceeds the CFL limit {limit:.3e}")]
    TimeStep { dt: f64, limit: f64 },
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::Numerical(_)
                | Error::NoConvergence { .. }
                | Error::CapActive { .. }
                | Error::TimeStep { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
