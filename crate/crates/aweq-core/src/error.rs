use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, AweqError>;

/// Errors emitted by the quantization library.
#[derive(Debug, Clone, PartialEq)]
pub enum AweqError {
    /// Matrix data length does not match `rows * cols`.
    DataLength { expected: usize, got: usize },
    /// A constructor received a NaN or infinite entry.
    NonFinite { index: usize },
    /// Two matrices cannot be combined because their shapes disagree.
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// An operation that reduces over elements received an empty matrix.
    EmptyInput,
    /// A per-channel vector has the wrong number of channels.
    ChannelMismatch { expected: usize, got: usize },
    /// Two vectors that must pair up have different lengths.
    LengthMismatch { expected: usize, got: usize },
    /// Quantization range with `min > max`, or non-finite bounds.
    InvalidRange { min: f64, max: f64 },
    /// Bit-width outside the supported `[2, 8]` window.
    InvalidBits { bits: u8 },
    /// A per-channel range was negative.
    NegativeRange { index: usize },
    /// An equalization scale was zero, negative, or non-finite.
    NonPositiveScale { index: usize },
    /// Scales cannot be folded through this activation.
    UnsupportedFold { activation: &'static str },
    /// The exhaustive search oracle only handles small channel counts.
    UnsupportedSize { limit: usize, got: usize },
    /// An argument is outside its documented domain.
    InvalidInput(&'static str),
    /// A configuration field is out of its documented domain.
    InvalidConfig(&'static str),
    /// Synthetic data generation got inconsistent counts.
    InvalidCounts(&'static str),
}

impl fmt::Display for AweqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DataLength { expected, got } => {
                write!(f, "data length {got} does not match shape ({expected} expected)")
            }
            Self::NonFinite { index } => {
                write!(f, "non-finite value at flat index {index}")
            }
            Self::DimMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Self::EmptyInput => write!(f, "empty input"),
            Self::ChannelMismatch { expected, got } => {
                write!(f, "channel count mismatch: expected {expected}, got {got}")
            }
            Self::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Self::InvalidRange { min, max } => {
                write!(f, "invalid quantization range [{min}, {max}]")
            }
            Self::InvalidBits { bits } => {
                write!(f, "bit-width {bits} outside supported range [2, 8]")
            }
            Self::NegativeRange { index } => {
                write!(f, "negative channel range at index {index}")
            }
            Self::NonPositiveScale { index } => {
                write!(f, "non-positive equalization scale at index {index}")
            }
            Self::UnsupportedFold { activation } => {
                write!(f, "cannot fold scales through activation '{activation}'")
            }
            Self::UnsupportedSize { limit, got } => {
                write!(f, "unsupported size {got} (limit {limit})")
            }
            Self::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Self::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Self::InvalidCounts(msg) => write!(f, "invalid counts: {msg}"),
        }
    }
}

impl core::error::Error for AweqError {}
