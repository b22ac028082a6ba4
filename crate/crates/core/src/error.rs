use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("field is not Hermitian-symmetric (max defect {defect:e})")]
    Symmetry { defect: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("singular symbol: {0}")]
    Singularity(String),

    #[error("wrong arity: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("tuple is not on the hyperplane (sum = {sum})")]
    NotOnHyperplane { sum: i64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dense lattice sum needs {terms} terms, above the limit {limit}; pass an explicit override")]
    TooLarge { terms: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("aliasing: padded grid has {available} samples, {required} are needed")]
    Aliasing { required: usize, available: usize },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("imaginary residue {residue:e} exceeds tolerance relative to magnitude {magnitude:e}")]
    ImaginaryResidue { residue: f64, magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
