use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("decoding error: {0}")]
    Decoding(String),
    #[error("architecture parse error at token {position} ({token:?}): {reason}")]
    Parse {
        position: usize,
        token: String,
        reason: String,
    },
    #[error("malformed one-hot target: {0}")]
    Target(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("dataset generation failed: {0}")]
    Generation(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unsupported spike mode: {0}")]
    UnsupportedMode(String),
    #[error("network too large for oracle: {params} parameters exceeds guard of {limit}")]
    SizeGuard { params: usize, limit: usize },
    #[error("schedule error: epoch {epoch} outside 0..{total}")]
    Schedule { epoch: usize, total: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(
    op: &'static str,
    expected: impl core::fmt::Debug,
    actual: impl core::fmt::Debug,
) -> Error {
    Error::Shape {
        op,
        expected: alloc::format!("{expected:?}"),
        actual: alloc::format!("{actual:?}"),
    }
}
