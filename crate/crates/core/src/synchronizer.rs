//! Adaptive symbol-timing recovery loop.
//!
//! Each processed symbol yields a differential observable and its timing
//! derivative from the matched-filter bank. A reference increment (known,
//! hard-decided, or posterior-mean soft) turns the derivative into a scalar
//! timing error, which drives a clamped first-order update of the estimate.
//! The preamble always runs data-aided; the payload mode is configurable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::demapper::{soft_increment_dbpsk, soft_increment_dqpsk, PriorLlrs, TanhShape};
use crate::error::{Error, Result};
use crate::frame::{FrameLayout, Modulation, RegionKind};
use crate::mapping::{hard_demap_dbpsk, hard_demap_dqpsk, SymbolStream};
use crate::waveform::MatchedFilterBank;

/// Reference-increment selection policy for the timing-error detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    /// Data-aided: the true increment is known.
    Da,
    /// Non-data-aided: hard decision on the observable.
    Nda,
    /// Soft: posterior-mean increment from the demapper.
    Soft,
}

impl SyncMode {
    pub fn label(&self) -> &'static str {
        match self {
            SyncMode::Da => "da",
            SyncMode::Nda => "nda",
            SyncMode::Soft => "soft",
        }
    }
}

impl fmt::Display for SyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SyncMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "da" => Ok(SyncMode::Da),
            "nda" => Ok(SyncMode::Nda),
            "soft" => Ok(SyncMode::Soft),
            _ => Err(Error::invalid("mode", "expected one of: da, nda, soft")),
        }
    }
}

/// First-order loop parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Step size in symbol periods per unit error.
    pub step_size: f64,
    /// Starting estimate in symbol periods.
    pub initial_estimate: f64,
    /// Mode used outside the preamble (the preamble is always data-aided).
    pub payload_mode: SyncMode,
    /// Nonlinearity profile for the soft demapper.
    pub tanh: TanhShape,
    /// Estimates are clamped to +/- this limit (symbol periods).
    pub clamp_limit: f64,
    /// Priors handed to the soft demapper.
    pub priors: PriorLlrs,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            step_size: 0.02,
            initial_estimate: 0.0,
            payload_mode: SyncMode::Soft,
            tanh: TanhShape::Exact,
            clamp_limit: 0.5,
            priors: PriorLlrs::uniform(),
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::invalid("step_size", "must lie in (0, 1]"));
        }
        if !(self.clamp_limit > 0.0 && self.clamp_limit <= 0.5) {
            return Err(Error::invalid("clamp_limit", "must lie in (0, 0.5]"));
        }
        if !(-self.clamp_limit..=self.clamp_limit).contains(&self.initial_estimate) {
            return Err(Error::invalid(
                "initial_estimate",
                "must lie within the clamp limits",
            ));
        }
        self.tanh.validate()?;
        self.priors.validate()
    }
}

/// Per-symbol record of a loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingTrajectory {
    initial_estimate: f64,
    estimates: Vec<f64>,
    errors: Vec<f64>,
    modes: Vec<SyncMode>,
    clamped: Vec<bool>,
}

impl TimingTrajectory {
    /// Number of processed symbols (loop updates).
    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn initial_estimate(&self) -> f64 {
        self.initial_estimate
    }

    /// Estimate after update k (index k-1), in symbol periods.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn modes(&self) -> &[SyncMode] {
        &self.modes
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn clamp_events(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }

    pub fn final_estimate(&self) -> f64 {
        *self.estimates.last().unwrap_or(&self.initial_estimate)
    }
}

/// MLD timing error e = Re{conj(d) * dz} for a reference increment `d` and
/// observable derivative `dz`.
pub fn timing_error(d: Complex64, dz: Complex64) -> f64 {
    (d.conj() * dz).re
}

/// One clamped first-order update; returns the new estimate and whether the
/// clamp was hit.
pub fn step(previous: f64, error: f64, config: &LoopConfig) -> (f64, bool) {
    let raw = previous + config.step_size * error;
    let clamped = raw.clamp(-config.clamp_limit, config.clamp_limit);
    (clamped, clamped != raw)
}

fn check_coverage(bank: &MatchedFilterBank, total: usize, clamp: f64) -> Result<()> {
    let (lo, hi) = bank.interpolable_range();
    if lo > -clamp || hi < total as f64 + clamp {
        return Err(Error::invalid(
            "bank",
            "matched-filter bank does not cover the frame layout",
        ));
    }
    Ok(())
}

fn reference_increment(
    mode: SyncMode,
    modulation: Modulation,
    truth: &SymbolStream,
    k: usize,
    z: Complex64,
    sigma2: f64,
    config: &LoopConfig,
) -> Result<Complex64> {
    Ok(match mode {
        SyncMode::Da => truth.increment(k),
        SyncMode::Nda => match modulation {
            Modulation::Dbpsk => hard_demap_dbpsk(z).1,
            Modulation::Dqpsk => hard_demap_dqpsk(z).1,
        },
        SyncMode::Soft => match modulation {
            Modulation::Dbpsk => {
                soft_increment_dbpsk(config.priors, z, sigma2, config.tanh)?.value
            }
            Modulation::Dqpsk => {
                soft_increment_dqpsk(config.priors, z, sigma2, config.tanh)?.value
            }
        },
    })
}

/// Runs the timing loop over a full frame.
///
/// Update k (1-based) consumes the differential observable linking symbols
/// k-1 and k, evaluated at the previous estimate. The mode is data-aided
/// while the later symbol lies in the preamble and `config.payload_mode`
/// afterwards. `truth` is only consulted for data-aided updates.
pub fn run_loop(
    bank: &MatchedFilterBank,
    layout: &FrameLayout,
    truth: &SymbolStream,
    sigma2: f64,
    config: &LoopConfig,
) -> Result<TimingTrajectory> {
    config.validate()?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", "must be finite and positive"));
    }
    let total = layout.total_symbols();
    if truth.total_symbols() != total {
        return Err(Error::invalid(
            "truth",
            "symbol stream length does not match the layout",
        ));
    }
    check_coverage(bank, total, config.clamp_limit)?;

    let mut estimate = config.initial_estimate;
    let mut estimates = Vec::with_capacity(total);
    let mut errors = Vec::with_capacity(total);
    let mut modes = Vec::with_capacity(total);
    let mut clamped = Vec::with_capacity(total);

    for k in 1..=total {
        let (z, dz) = bank.observable_pair(k, estimate)?;
        let (kind, modulation) = layout.region_of(k - 1)?;
        let mode = if kind == RegionKind::Preamble {
            SyncMode::Da
        } else {
            config.payload_mode
        };
        let d = reference_increment(mode, modulation, truth, k, z, sigma2, config)?;
        let e = timing_error(d, dz);
        let (next, hit) = step(estimate, e, config);
        estimates.push(next);
        errors.push(e);
        modes.push(mode);
        clamped.push(hit);
        estimate = next;
    }

    Ok(TimingTrajectory {
        initial_estimate: config.initial_estimate,
        estimates,
        errors,
        modes,
        clamped,
    })
}

/// Mean timing error over the frame at each fixed candidate offset.
///
/// Unlike `run_loop`, the requested mode applies to every symbol including
/// the preamble, making this a pure detector diagnostic. Grid points must
/// lie within half a symbol period of the true delay.
pub fn s_curve(
    bank: &MatchedFilterBank,
    layout: &FrameLayout,
    truth: &SymbolStream,
    sigma2: f64,
    mode: SyncMode,
    shape: TanhShape,
    u_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", "must be finite and positive"));
    }
    let total = layout.total_symbols();
    if truth.total_symbols() != total {
        return Err(Error::invalid(
            "truth",
            "symbol stream length does not match the layout",
        ));
    }
    let config = LoopConfig {
        payload_mode: mode,
        tanh: shape,
        ..LoopConfig::default()
    };
    let mut curve = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        if (u - bank.true_delay()).abs() > 0.5 + 1e-12 {
            return Err(Error::invalid(
                "u_grid",
                "grid points must lie within 0.5 symbol periods of the true delay",
            ));
        }
        let mut acc = 0.0;
        for k in 1..=total {
            let (z, dz) = bank.observable_pair(k, u)?;
            let (_, modulation) = layout.region_of(k - 1)?;
            let d = reference_increment(mode, modulation, truth, k, z, sigma2, &config)?;
            acc += timing_error(d, dz);
        }
        curve.push(acc / total as f64);
    }
    Ok(curve)
}
