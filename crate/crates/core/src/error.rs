use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}-bit symbols (expected 1, 2, 4 or 8)")]
    InvalidMeasure(u32),

    #[error("sample entropy is undefined for an empty symbol sequence")]
    UndefinedEntropy,

    #[error("symbol {symbol} is outside an alphabet of size {alphabet}")]
    InvalidSymbol { symbol: u32, alphabet: usize },

    #[error("window of {0} bytes is below the 16-byte minimum")]
    WindowTooSmall(usize),

    #[error("window of {0} bytes exceeds the 65536-byte maximum")]
    WindowTooLarge(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance too large to enumerate: {0}")]
    EnumerationLimit(String),

    #[error("at least {min} samples are required, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("unreliable range: {misses} of {total} streams have no high run at the anchor")]
    UnreliableRange { misses: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("invalid fingerprint: {0}")]
    Validation(String),

    #[error("fingerprint file line {line}: {message}")]
    FingerprintFile { line: usize, message: String },

    #[error("unsupported capture format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt capture at byte {offset}: {message}")]
    CorruptCapture { offset: usize, message: String },

    #[error("manifest {}:{line}: {message}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("calibration table line {line}: {message}")]
    CalibrationTable { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
