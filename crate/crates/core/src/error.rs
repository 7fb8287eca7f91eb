use thiserror::Error;

pub type Result<T> = std::result::Result<T, QbatError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QbatError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not hermitian (max |A - A^dagger| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not unitary (max |U^dagger U - 1| = {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("site index {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("duplicate site index {0}")]
    DuplicateSite(usize),

    #[error("{n} qubits exceeds the supported maximum of {max}")]
    TooManyQubits { n: usize, max: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("expectation of hermitian operator has imaginary part {imag:.3e}")]
    ImaginaryExpectation { imag: f64 },

    #[error("eigenbranch tracking failed at s = {s:.6}: best overlap weight {weight:.3e}")]
    TrackingFailure { s: f64, weight: f64 },
}

impl QbatError {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        QbatError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
