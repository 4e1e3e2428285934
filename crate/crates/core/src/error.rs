use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by frame construction, waveform processing and the
/// simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or structural argument violated its documented range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// LFSR feedback taps did not produce a maximal-length sequence.
    #[error("LFSR taps {taps:#x} are not primitive for degree {degree}: state repeats after {period} steps")]
    NonPrimitiveTaps { degree: u32, taps: u64, period: usize },

    /// A bit vector does not match the symbol budget of its frame region.
    #[error("{region} bit count mismatch: expected {expected}, got {actual}")]
    BitCountMismatch {
        region: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A symbol index fell outside the frame layout.
    #[error("symbol index {index} out of range: frame has {total} symbols")]
    SymbolOutOfRange { index: usize, total: usize },

    /// A fractional sample position cannot be interpolated from the bank.
    #[error("sample position {position:.4} outside interpolable span [{lo:.4}, {hi:.4}] (symbol periods)")]
    SampleOutOfRange { position: f64, lo: f64, hi: f64 },

    /// Differential observables need a predecessor symbol.
    #[error("differential observable requires symbol index >= 1, got {index}")]
    MissingPredecessor { index: usize },

    /// Received signal and pulse disagree on the sample grid.
    #[error("sample rate mismatch: signal has {signal} samples/symbol, pulse has {pulse}")]
    SampleRateMismatch { signal: usize, pulse: usize },

    /// File output failed.
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Report deserialization failed.
    #[error("parsing report: {0}")]
    ReportFormat(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
