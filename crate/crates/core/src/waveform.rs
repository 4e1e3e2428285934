//! Pulse shaping, channel noise and matched-filter observables.
//!
//! The transmit pulse is a unit-energy square-root raised cosine evaluated
//! analytically, so a fractional channel delay is applied exactly at the
//! transmitter. The receiver matched-filters the sample stream and exposes
//! fractionally interpolated symbol observables together with their timing
//! derivatives, which is all the tracking loop ever sees.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mapping::SymbolStream;

/// Square-root raised-cosine pulse sampled at `sps` points per symbol over
/// `span` symbol periods each side, normalized to unit tap energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseShape {
    rolloff: f64,
    span: usize,
    sps: usize,
    taps: Vec<f64>,
    scale: f64,
}

/// Unnormalized continuous square-root raised-cosine impulse response.
fn srrc_raw(rolloff: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0 - rolloff + 4.0 * rolloff / PI;
    }
    if rolloff == 0.0 {
        return (PI * t).sin() / (PI * t);
    }
    let q = 4.0 * rolloff * t;
    let denom = 1.0 - q * q;
    if denom.abs() < 1e-9 {
        // Singular point |t| = 1/(4a); use the analytic limit.
        let x = PI / (4.0 * rolloff);
        return rolloff / std::f64::consts::SQRT_2
            * ((1.0 + 2.0 / PI) * x.sin() + (1.0 - 2.0 / PI) * x.cos());
    }
    ((PI * t * (1.0 - rolloff)).sin() + q * (PI * t * (1.0 + rolloff)).cos()) / (PI * t * denom)
}

impl PulseShape {
    pub fn srrc(rolloff: f64, span: usize, sps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::invalid("rolloff", "must lie in [0, 1]"));
        }
        if span < 4 {
            return Err(Error::invalid("span", "must be at least 4 symbol periods"));
        }
        if sps < 4 || sps % 2 != 0 {
            return Err(Error::invalid("sps", "must be even and at least 4"));
        }
        let half = span * sps;
        let mut taps: Vec<f64> = (0..=2 * half)
            .map(|n| srrc_raw(rolloff, (n as f64 - half as f64) / sps as f64))
            .collect();
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        let scale = 1.0 / energy.sqrt();
        for h in &mut taps {
            *h *= scale;
        }
        Ok(PulseShape {
            rolloff,
            span,
            sps,
            taps,
            scale,
        })
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Analytic pulse value at time `t` (symbol periods), on the same scale
    /// as the taps and truncated to the tap support.
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.span as f64 {
            0.0
        } else {
            self.scale * srrc_raw(self.rolloff, t)
        }
    }
}

/// Normalized second moment of the pulse power spectrum,
/// `T^2 * integral(f^2 |H|^2) / integral(|H|^2)`, in closed form for the
/// raised-cosine family. Controls the curvature of the timing metric.
pub fn pulse_second_moment(rolloff: f64) -> f64 {
    1.0 / 12.0 + rolloff * rolloff * (0.25 - 2.0 / (PI * PI))
}

/// Per-component noise variance at the matched-filter output for a symbol
/// SNR in dB. Infinite SNR (noise off) maps to zero.
pub fn noise_sigma2(es_n0_db: f64) -> f64 {
    if es_n0_db == f64::INFINITY {
        0.0
    } else {
        0.5 * 10f64.powf(-es_n0_db / 10.0)
    }
}

/// Sampled baseband signal, possibly noisy, on a grid of `sps` samples per
/// symbol period starting at `start_time` (symbol periods).
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    samples: Vec<Complex64>,
    sps: usize,
    start_time: f64,
    true_delay: f64,
    es_n0_db: f64,
    noise_sigma2: f64,
}

impl ReceivedSignal {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    /// Time of sample 0, in symbol periods.
    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn true_delay(&self) -> f64 {
        self.true_delay
    }

    pub fn es_n0_db(&self) -> f64 {
        self.es_n0_db
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.noise_sigma2
    }
}

/// Shapes a symbol stream through the pulse with an exact fractional delay.
///
/// The pulse is evaluated analytically at the delayed sample instants, so no
/// interpolation error enters at the transmitter. The sample window covers
/// the frame plus `span + 1` symbol periods on each side.
pub fn shape(stream: &SymbolStream, pulse: &PulseShape, delay: f64) -> Result<ReceivedSignal> {
    if !(-0.5..=0.5).contains(&delay) {
        return Err(Error::invalid("delay", "must lie in [-0.5, 0.5]"));
    }
    let sps = pulse.sps();
    let margin = pulse.span() + 1;
    let start_time = -(margin as f64);
    let total = stream.total_symbols();
    let len = (total + 2 * margin) * sps + 1;

    // All symbol centers share one fractional offset on the sample grid, so
    // the delayed pulse is evaluated once into a table and then placed as an
    // ordinary FIR contribution per symbol.
    let center0 = (delay - start_time) * sps as f64;
    let base0 = center0.floor();
    let frac = center0 - base0;
    let base0 = base0 as i64;
    let half = (pulse.span() * sps) as i64;
    let offsets: Vec<f64> = (-half..=half + 1)
        .map(|j| pulse.eval((j as f64 - frac) / sps as f64))
        .collect();

    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    for (i, &a) in stream.symbols().iter().enumerate() {
        let base = base0 + (i * sps) as i64;
        for (slot, &h) in offsets.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let m = base + slot as i64 - half;
            if (0..len as i64).contains(&m) {
                samples[m as usize] += a * h;
            }
        }
    }

    Ok(ReceivedSignal {
        samples,
        sps,
        start_time,
        true_delay: delay,
        es_n0_db: f64::INFINITY,
        noise_sigma2: 0.0,
    })
}

/// Adds circular white Gaussian noise for the given symbol SNR.
///
/// The per-sample, per-component variance equals `noise_sigma2(es_n0_db)`;
/// because the matched filter has unit tap energy the same variance appears
/// per component at the filter output. Noise draws are ChaCha-seeded and
/// consumed in sample order, real component first.
pub fn add_noise(signal: &ReceivedSignal, es_n0_db: f64, seed: u64) -> ReceivedSignal {
    let sigma2 = noise_sigma2(es_n0_db);
    let mut out = signal.clone();
    out.es_n0_db = es_n0_db;
    out.noise_sigma2 = sigma2;
    if sigma2 == 0.0 {
        return out;
    }
    let sigma = sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in &mut out.samples {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += Complex64::new(re * sigma, im * sigma);
    }
    out
}

/// Matched-filter output bank with fractional access to symbol observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterBank {
    outputs: Vec<Complex64>,
    sps: usize,
    start_time: f64,
    /// Output indices where the filter fully overlapped the input.
    valid_lo: usize,
    valid_hi: usize,
    noise_sigma2: f64,
    true_delay: f64,
}

/// Correlates the received samples with the pulse (real, symmetric taps).
/// Group delay is folded into the output index map, so output `m` sits at
/// the same time as input sample `m`.
pub fn matched_filter(signal: &ReceivedSignal, pulse: &PulseShape) -> Result<MatchedFilterBank> {
    if signal.sps() != pulse.sps() {
        return Err(Error::SampleRateMismatch {
            signal: signal.sps(),
            pulse: pulse.sps(),
        });
    }
    let taps = pulse.taps();
    let half = pulse.span() * pulse.sps();
    let x = signal.samples();
    let len = x.len();
    let mut outputs = vec![Complex64::new(0.0, 0.0); len];
    for (m, out) in outputs.iter_mut().enumerate() {
        let n_lo = half.saturating_sub(m);
        let n_hi = (len + half - m).min(taps.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for n in n_lo..n_hi {
            acc += x[m + n - half] * taps[n];
        }
        *out = acc;
    }
    Ok(MatchedFilterBank {
        outputs,
        sps: signal.sps(),
        start_time: signal.start_time(),
        valid_lo: half,
        valid_hi: len - 1 - half,
        noise_sigma2: signal.noise_sigma2(),
        true_delay: signal.true_delay(),
    })
}

/// Cubic Lagrange basis over the four samples bracketing the target, with
/// the fractional part `f` in [0, 1) measured from the second sample.
fn lagrange_basis(f: f64) -> ([f64; 4], [f64; 4]) {
    let values = [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ];
    let slopes = [
        -(3.0 * f * f - 6.0 * f + 2.0) / 6.0,
        (3.0 * f * f - 4.0 * f - 1.0) / 2.0,
        -(3.0 * f * f - 2.0 * f - 2.0) / 2.0,
        (3.0 * f * f - 1.0) / 6.0,
    ];
    (values, slopes)
}

impl MatchedFilterBank {
    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.noise_sigma2
    }

    pub fn true_delay(&self) -> f64 {
        self.true_delay
    }

    pub fn outputs(&self) -> &[Complex64] {
        &self.outputs
    }

    /// Symbol positions (in symbol periods) addressable by interpolation.
    pub fn interpolable_range(&self) -> (f64, f64) {
        let lo = (self.valid_lo as f64 + 1.0) / self.sps as f64 + self.start_time;
        let hi = (self.valid_hi as f64 - 2.0) / self.sps as f64 + self.start_time;
        (lo, hi)
    }

    fn fractional_index(&self, symbol: usize, offset: f64) -> f64 {
        (symbol as f64 + offset - self.start_time) * self.sps as f64
    }

    fn out_of_range(&self, position: f64) -> Error {
        let (lo, hi) = self.interpolable_range();
        Error::SampleOutOfRange { position, lo, hi }
    }

    /// Interpolated output and its derivative with respect to the fractional
    /// sample index.
    fn interpolate(&self, p: f64, symbol_pos: f64) -> Result<(Complex64, Complex64)> {
        let base = p.floor();
        let f = p - base;
        let base = base as isize;
        if base < 1
            || (base as usize) < self.valid_lo + 1
            || (base as usize) + 2 > self.valid_hi
        {
            return Err(self.out_of_range(symbol_pos));
        }
        let i = base as usize;
        let (w, dw) = lagrange_basis(f);
        let window = &self.outputs[i - 1..i + 3];
        let mut value = Complex64::new(0.0, 0.0);
        let mut slope = Complex64::new(0.0, 0.0);
        for n in 0..4 {
            value += window[n] * w[n];
            slope += window[n] * dw[n];
        }
        Ok((value, slope))
    }

    /// Matched-filter output for symbol `k` at fractional timing `offset`
    /// (symbol periods).
    pub fn sample_at(&self, k: usize, offset: f64) -> Result<Complex64> {
        let pos = k as f64 + offset;
        let (value, _) = self.interpolate(self.fractional_index(k, offset), pos)?;
        Ok(value)
    }

    /// Derivative of `sample_at` with respect to the timing offset, in
    /// per-symbol-period units.
    pub fn sample_derivative_at(&self, k: usize, offset: f64) -> Result<Complex64> {
        let pos = k as f64 + offset;
        let (_, slope) = self.interpolate(self.fractional_index(k, offset), pos)?;
        Ok(slope * self.sps as f64)
    }

    /// Differential observable z_k = x_k(u) * conj(x_{k-1}(u)).
    pub fn differential_observable(&self, k: usize, offset: f64) -> Result<Complex64> {
        if k == 0 {
            return Err(Error::MissingPredecessor { index: k });
        }
        let cur = self.sample_at(k, offset)?;
        let prev = self.sample_at(k - 1, offset)?;
        Ok(cur * prev.conj())
    }

    /// d z_k / du via the product rule on the interpolated observables.
    pub fn observable_derivative(&self, k: usize, offset: f64) -> Result<Complex64> {
        Ok(self.observable_pair(k, offset)?.1)
    }

    /// (z_k, d z_k / du) in one pass; this is the loop's inner kernel.
    pub fn observable_pair(&self, k: usize, offset: f64) -> Result<(Complex64, Complex64)> {
        if k == 0 {
            return Err(Error::MissingPredecessor { index: k });
        }
        let scale = self.sps as f64;
        let pos_cur = k as f64 + offset;
        let (cur, dcur) = self.interpolate(self.fractional_index(k, offset), pos_cur)?;
        let pos_prev = pos_cur - 1.0;
        let (prev, dprev) = self.interpolate(self.fractional_index(k - 1, offset), pos_prev)?;
        let z = cur * prev.conj();
        let dz = dcur * scale * prev.conj() + cur * (dprev * scale).conj();
        Ok((z, dz))
    }
}
