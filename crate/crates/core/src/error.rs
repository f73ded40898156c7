//! Error type shared across the crate.

use std::fmt;

/// All failure modes surfaced by the library.
#[derive(Debug)]
pub enum Error {
    /// Requested sampling dimension has no direction numbers available.
    UnsupportedDimension { dim: usize, max: usize },
    /// A box bound has `lower >= upper` in some coordinate.
    InvalidBounds { coordinate: usize },
    /// Input contained a NaN or infinite value.
    NonFiniteInput { context: &'static str },
    /// Vector or matrix sizes do not line up.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    /// The random-function generator rejected too many candidates in a row.
    GeneratorExhausted { attempts: usize },
    /// Expression text could not be parsed; `position` is a byte offset.
    ParseError { position: usize, message: String },
    /// Function id outside 1..=24.
    UnknownFunction { fid: usize },
    /// A value was outside its documented range.
    InvalidArgument { context: &'static str, message: String },
    /// Feature computation needs more samples than were provided.
    InsufficientSamples { needed: usize, got: usize },
    /// Two feature vectors share a name.
    NameCollision { name: String },
    /// Requested neighbor count outside `1..=entries`.
    InvalidK { k: usize, entries: usize },
    /// Classification data with fewer than two classes.
    DegenerateData { message: String },
    /// Training was handed an empty dataset.
    EmptyDataset,
    /// A loss or gradient became non-finite.
    Divergence { context: &'static str },
    /// A backward pass was given a cache from a different forward pass.
    CacheMismatch,
    /// An iterative solver failed to converge.
    Convergence { iterations: usize },
    /// File does not start with a known magic tag.
    FormatError { message: String },
    /// Known magic but a version this reader does not support.
    UnsupportedVersion { found: String },
    /// File is structurally inconsistent (truncated, count mismatch).
    Corruption { message: String },
    /// Model and archive fingerprints do not match.
    Incompatibility { message: String },
    /// Missing or inconsistent run configuration.
    Configuration { message: String },
    /// Index into a latent vector or similar out of range.
    IndexOutOfRange { index: usize, len: usize },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedDimension { dim, max } => {
                write!(f, "dimension {dim} unsupported (direction numbers cover 1..={max})")
            }
            Error::InvalidBounds { coordinate } => {
                write!(f, "invalid bounds: lower >= upper at coordinate {coordinate}")
            }
            Error::NonFiniteInput { context } => write!(f, "non-finite input in {context}"),
            Error::DimensionMismatch { context, expected, actual } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, got {actual}")
            }
            Error::GeneratorExhausted { attempts } => {
                write!(f, "function generator exhausted after {attempts} rejected candidates")
            }
            Error::ParseError { position, message } => {
                write!(f, "parse error at offset {position}: {message}")
            }
            Error::UnknownFunction { fid } => write!(f, "unknown function id {fid} (valid: 1..=24)"),
            Error::InvalidArgument { context, message } => {
                write!(f, "invalid argument in {context}: {message}")
            }
            Error::InsufficientSamples { needed, got } => {
                write!(f, "insufficient samples: need at least {needed}, got {got}")
            }
            Error::NameCollision { name } => write!(f, "duplicate feature name: {name}"),
            Error::InvalidK { k, entries } => {
                write!(f, "invalid k = {k} for archive with {entries} entries")
            }
            Error::DegenerateData { message } => write!(f, "degenerate data: {message}"),
            Error::EmptyDataset => write!(f, "empty dataset"),
            Error::Divergence { context } => write!(f, "numeric divergence in {context}"),
            Error::CacheMismatch => write!(f, "forward cache does not match the layer stack"),
            Error::Convergence { iterations } => {
                write!(f, "eigensolver failed to converge within {iterations} iterations")
            }
            Error::FormatError { message } => write!(f, "format error: {message}"),
            Error::UnsupportedVersion { found } => write!(f, "unsupported format version: {found}"),
            Error::Corruption { message } => write!(f, "corrupted file: {message}"),
            Error::Incompatibility { message } => write!(f, "incompatible inputs: {message}"),
            Error::Configuration { message } => write!(f, "configuration error: {message}"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
