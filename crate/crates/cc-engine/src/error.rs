use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: orbital index {index} out of range 1..={n_orb}")]
    IndexOutOfRange { line: usize, index: i64, n_orb: usize },
    #[error("NELEC = {0} is odd; only closed-shell systems are supported")]
    OddElectronCount(i64),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("orbital-energy gap {0:.3e} below 1e-10; canonical non-degenerate reference required")]
    DegenerateGap(f64),
    #[error("residual became non-finite at iteration {0}")]
    Divergence(usize),
    #[error("determinant space of size {dim} exceeds the dense bound {bound}")]
    DimensionBound { dim: usize, bound: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed amplitude file: {0}")]
    AmpFormat(String),
}
