use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrrepsError {
    #[error("matrix is not a proper rotation: {0}")]
    NotARotation(String),
    #[error("input vector has norm {0}, expected a unit vector")]
    NotUnit(f64),
    #[error("degree {0} exceeds the tabulated maximum {max}", max = crate::cg::ELL_MAX)]
    DegreeTooLarge(u32),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("value length {got} does not match signature dimension {expected}")]
    LengthMismatch { got: usize, expected: usize },
}
