use thiserror::Error;

use crate::hspace::CVec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("Gram matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram matrix is singular")]
    SingularGram,

    #[error("order relation has a cycle through `{0}` and `{1}`")]
    Cycle(String, String),

    #[error("unknown index label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate index label `{0}`")]
    DuplicateLabel(String),

    #[error("indices `{0}` and `{1}` have no common upper bound")]
    NotDirected(String, String),

    #[error("index `{from}` is not below `{to}`")]
    NotComparable { from: String, to: String },

    #[error("linking map `{from}` -> `{to}`: {reason}")]
    BadLink { from: String, to: String, reason: String },

    #[error("norm is not Hilbertian: parallelogram defect {violation:.6e}")]
    ParallelogramViolation { violation: f64, d: CVec, e: CVec },

    #[error("projection onto `{0}` is not invertible")]
    NotInvertible(String),

    #[error("index sets differ: {0}")]
    IndexMismatch(String),

    #[error("declared order `{lower}` <= `{upper}` violated (smallest eigenvalue {min_eigenvalue:.3e})")]
    OrderViolation {
        lower: String,
        upper: String,
        min_eigenvalue: f64,
    },

    #[error("dimension of `{lower}` ({lower_dim}) exceeds dimension of `{upper}` ({upper_dim})")]
    DimOrderViolation {
        lower: String,
        lower_dim: usize,
        upper: String,
        upper_dim: usize,
    },

    #[error("closed-form linking map disagrees with S_B^-1 S_A by {0:.3e}")]
    ClosedFormMismatch(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}
