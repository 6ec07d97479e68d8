use alloc::string::String;
use core::fmt;

/// Failures raised by the numerical core.
///
/// `Domain` and `Instability` are caused by bad inputs; the remaining variants
/// are numerical failures. Front ends map the two groups to different exit codes
/// through [`Error::is_numeric`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    Domain { what: &'static str, detail: String },
    /// The gravitational softening exceeds the trap stiffness (ω² ≤ 0).
    Instability { mass_index: usize, omega_sq: f64 },
    /// Adaptive quadrature did not reach the requested tolerance.
    Quadrature {
        estimate: f64,
        error: f64,
        requested: f64,
        subdivisions: usize,
    },
    /// An iteration did not converge.
    NoConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },
    /// The requested integration step violates the stability bound.
    StepSize { dt: f64, limit: f64 },
    /// Fock truncation is no longer faithful: the top level is populated.
    Truncation { level: usize, population: f64 },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::NoConvergence { .. } | Error::Truncation { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, detail } => write!(f, "invalid {what}: {detail}"),
            Error::Instability { mass_index, omega_sq } => write!(
                f,
                "trap of mass {mass_index} is unstable: shifted frequency squared is {omega_sq:e} s^-2"
            ),
            Error::Quadrature {
                estimate,
                error,
                requested,
                subdivisions,
            } => write!(
                f,
                "quadrature did not converge after {subdivisions} subdivisions: \
                 estimate {estimate:e}, error {error:e}, requested {requested:e}"
            ),
            Error::NoConvergence {
                what,
                residual,
                iterations,
            } => write!(
                f,
                "{what} did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::StepSize { dt, limit } => {
                write!(f, "time step {dt:e} exceeds stability limit {limit:e}")
            }
            Error::Truncation { level, population } => write!(
                f,
                "Fock truncation violated: population {population:e} in level {level}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn require_positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(
            what,
            alloc::format!("must be positive and finite, got {value:e}"),
        ))
    }
}

pub(crate) fn require_non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(
            what,
            alloc::format!("must be non-negative and finite, got {value:e}"),
        ))
    }
}
