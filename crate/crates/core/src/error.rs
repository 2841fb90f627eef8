use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (residual {residual:.3e}, allowed {allowed:.3e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operator basis is ill-conditioned (Gram condition number {condition:.3e})")]
    IllConditionedBasis { condition: f64 },

    #[error("operator not expandable in the basis (projection residual {residual:.3e})")]
    ProjectionResidual { residual: f64 },

    #[error("coefficient block ({u:?}, {v:?}) couples distinct channel pairs (norm {norm:.3e})")]
    NotRateForm {
        u: (usize, usize),
        v: (usize, usize),
        norm: f64,
    },

    #[error("correlation samples not decayed at the end of the grid (ratio {ratio:.3e} to peak); Markov approximation violated")]
    MarkovViolation { ratio: f64 },

    #[error("zero eigenvalue sector is defective (Jordan block); stationary projector refused")]
    DefectiveZeroSector,

    #[error("eigendecomposition failed to converge")]
    NoConvergence,

    #[error("singular linear system at u = {re}{im:+}i")]
    Singular { re: f64, im: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("time {0} is not on the result grid")]
    OffGrid(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
