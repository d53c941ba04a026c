use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("probability vector invalid: {0}")]
    InvalidPmf(String),
    #[error("distortion matrix invalid: {0}")]
    InvalidDistortion(String),
    #[error("enumeration cap exceeded: need {needed_bits:.1} bits, cap {cap_bits} bits")]
    CapExceeded { needed_bits: f64, cap_bits: u32 },
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("block structure violation: {0}")]
    BlockStructure(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
