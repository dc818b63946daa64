use thiserror::Error;
use wavefocus_boundary::BoundaryError;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("coordinate out of domain: {0}")]
    Domain(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error("degenerate slab: {0}")]
    DegenerateSlab(String),
    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),
    #[error("kernel cache entry {path} is corrupt: {reason}")]
    CorruptCache { path: String, reason: String },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
