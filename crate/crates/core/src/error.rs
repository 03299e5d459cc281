//! Error type shared across the crate.

use crate::tensor::DeviceKind;

/// Errors returned by tensor, allocator, placement, gather, and simulator
/// operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The operation is only defined for unified tensors.
    #[error("{op} requires a unified tensor, got {device}")]
    InvalidTensorKind {
        /// Operation that was attempted.
        op: &'static str,
        /// Device kind of the offending tensor.
        device: DeviceKind,
    },

    /// A malformed argument that does not fit a more specific variant.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Operand shapes are incompatible.
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        /// Expected shape.
        expected: Vec<usize>,
        /// Actual shape.
        got: Vec<usize>,
    },

    /// A gather/index row id is outside the source.
    #[error("index {index} at position {position} out of range (source has {limit} rows)")]
    IndexOutOfRange {
        /// Position inside the index list.
        position: usize,
        /// The offending row id.
        index: u64,
        /// Number of rows in the source.
        limit: u64,
    },

    /// The backing allocator cannot satisfy the request.
    #[error("out of memory: requested {requested} bytes, limit {limit} bytes")]
    OutOfMemory {
        /// Bytes requested (after rounding).
        requested: u64,
        /// Configured capacity limit.
        limit: u64,
    },

    /// A block handle that is not currently live (double free or foreign id).
    #[error("invalid block handle {id}")]
    InvalidHandle {
        /// The offending block id.
        id: u64,
    },

    /// No unified operand: the caller should use native dispatch instead.
    #[error("placement rules not applicable: no unified operand")]
    NotApplicable,

    /// Interconnect configuration failed validation or parsing.
    #[error("config error: {0}")]
    Config(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
