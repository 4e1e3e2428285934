//! Symbol-timing recovery for narrowband differential-PSK frames.
//!
//! The crate simulates the full receive chain needed to study an adaptive
//! maximum-likelihood timing loop on IEEE 802.15.6-style narrowband frames:
//! frame and preamble construction, differential PSK mapping, square-root
//! raised-cosine shaping with an exact fractional channel delay, matched
//! filtering with fractional interpolation, soft differential demapping,
//! the timing loop itself, and a seeded Monte-Carlo harness that reports
//! bias curves and MSE against the Cramer-Rao reference bound.
//!
//! Trials run in parallel through the default `parallel` feature; disabling
//! it leaves a bitwise-identical single-threaded implementation.

pub mod demapper;
pub mod error;
pub mod frame;
pub mod harness;
pub mod mapping;
pub mod report;
pub mod synchronizer;
pub mod waveform;

pub use error::{Error, Result};
pub use frame::{
    build_frame_bits, generate_m_sequence, FrameBits, FrameLayout, MSequenceSpec, Modulation,
    PreambleSpec, Region, RegionKind,
};
pub use mapping::{
    dbpsk_increment, dqpsk_increment, hard_demap_dbpsk, hard_demap_dqpsk, map_stream,
    SymbolStream, DQPSK_ALPHABET,
};
pub use waveform::{
    add_noise, matched_filter, noise_sigma2, pulse_second_moment, shape, MatchedFilterBank,
    PulseShape, ReceivedSignal,
};
pub use demapper::{
    increment_prior_probability, saturating_tanh, soft_increment_dbpsk, soft_increment_dqpsk,
    PriorLlrs, SoftIncrement, TanhShape, DEFAULT_SATURATION_THRESHOLD,
};
pub use synchronizer::{
    run_loop, s_curve, step, timing_error, LoopConfig, SyncMode, TimingTrajectory,
};
pub use harness::{
    bootstrap_mse_ci, crb_reference, mean_squared, monte_carlo, monte_carlo_sequential, run_cell,
    run_cell_sequential, run_trial, s_curve_sweep, trial_seeds, Cell, CellResult, PulseParams,
    SCurvePoint, Scenario,
};
pub use report::{
    parse_curves_csv, parse_summary_csv, BiasPoint, CellReport, CrbPoint, CurveRow, ReportFormat,
    ReportMeta, RunReport, SummaryRow,
};
