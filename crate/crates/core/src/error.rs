use thiserror::Error;

/// Errors raised by the geometry, expansion and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested logarithm crosses the cut locus (antipodal points on the sphere).
    #[error("points are within {gap:e} of the cut locus (distance {distance})")]
    CutLocus { distance: f64, gap: f64 },

    #[error("degenerate plane: vectors are (nearly) collinear")]
    DegeneratePlane,

    #[error("argument {value} is outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("{0} diverges at this argument")]
    Divergence(&'static str),

    #[error("expected Hessian is singular or ill-conditioned (condition number {condition:e})")]
    DegenerateHessian { condition: f64 },

    #[error("residuals fall below the noise floor {floor:e}: {detail}")]
    ScaleRange { floor: f64, detail: String },

    #[error("estimator failed to converge in {failed} of {total} trials")]
    NonConvergence { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
