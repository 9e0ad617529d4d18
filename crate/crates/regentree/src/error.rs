use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or measure parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A partition failed structural validation.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    /// A tree failed structural validation.
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    /// An exhaustive enumeration was requested beyond the guarded size.
    #[error("resource guard: {0} (pass force=true to override)")]
    ResourceGuard(String),
    /// The requested operation is not available for this variant.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A cylinder/total mass is infinite and cannot be returned as a number.
    #[error("infinite mass: {0}")]
    InfiniteMass(String),
    /// Conditioning on a zero-mass cylinder.
    #[error("null cylinder: {0}")]
    NullCylinder(String),
    /// Text input (rational string, Newick, JSON spec) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
