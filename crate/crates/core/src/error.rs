//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

use crate::fixtures::ValidationReport;

/// Failure modes of the geometric kernels and the fixture catalogue.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Inputs are (numerically) linearly dependent or an immersion is
    /// rank-deficient at the evaluation point.
    DegenerateInput,
    /// A finite-difference stencil point left the declared chart domain.
    ChartBoundary,
    /// A matrix expected to be symmetric positive definite is not.
    NotSpd,
    /// The operation needs a 4-dimensional ambient manifold (surface of
    /// codimension 2); `dim` is the dimension that was supplied.
    WrongCodimension { dim: usize },
    /// The requested fixture is not in the catalogue.
    UnknownFixture(String),
    /// A fixture failed its self-validation gate; the report carries the
    /// offending residuals.
    ValidationFailed(ValidationReport),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateInput => write!(f, "degenerate input: vectors are linearly dependent"),
            Error::ChartBoundary => write!(f, "evaluation point left the chart domain"),
            Error::NotSpd => write!(f, "matrix is not symmetric positive definite"),
            Error::WrongCodimension { dim } => {
                write!(f, "operation requires ambient dimension 4, got {dim}")
            }
            Error::UnknownFixture(name) => write!(f, "unknown fixture `{name}`"),
            Error::ValidationFailed(report) => {
                write!(
                    f,
                    "fixture validation failed: duality {:.3e}, constant-curvature {:.3e}, \
                     curvature-duality {:.3e} (tolerance {:.3e})",
                    report.duality, report.constant_curvature, report.curvature_duality, report.tolerance
                )
            }
        }
    }
}

impl core::error::Error for Error {}
