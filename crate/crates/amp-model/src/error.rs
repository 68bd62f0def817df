use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("element '{0}' missing from the basis layout")]
    UnknownElement(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("irreps error: {0}")]
    Irreps(#[from] irreps::IrrepsError),
    #[error(transparent)]
    Engine(#[from] cc_engine::CcError),
}
