//! Differential phase mapping and hard demapping.
//!
//! Every transmitted symbol lies on the eighth-circle grid exp(j*pi*n/4).
//! DBPSK rotates by +-pi/2 per bit, DQPSK by an odd multiple of pi/4 per bit
//! pair, and the reference symbol ahead of the frame is exp(j*pi/2). Phases
//! are tracked as integer steps so symbols stay exactly unit modulus.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::{FrameBits, FrameLayout, Modulation};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// exp(j*pi*n/4) for n = 0..8, evaluated once from exact component values.
const EIGHTH_CIRCLE: [Complex64; 8] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(0.0, 1.0),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-1.0, 0.0),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(0.0, -1.0),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Phase of the reference symbol, in pi/4 steps (pi/2).
pub const REFERENCE_PHASE_STEPS: i32 = 2;

/// DBPSK phase rotation in pi/4 steps: bit 0 -> +pi/2, bit 1 -> -pi/2.
pub fn dbpsk_phase_steps(bit: u8) -> i32 {
    if bit == 0 {
        2
    } else {
        -2
    }
}

/// DBPSK increment symbol for one bit: +j or -j.
pub fn dbpsk_increment(bit: u8) -> Complex64 {
    EIGHTH_CIRCLE[dbpsk_phase_steps(bit).rem_euclid(8) as usize]
}

/// DQPSK phase rotation in pi/4 steps for the bit pair (b0, b1):
/// 00 -> pi/4, 01 -> 3pi/4, 10 -> 7pi/4, 11 -> 5pi/4.
pub fn dqpsk_phase_steps(b0: u8, b1: u8) -> i32 {
    match (b0, b1) {
        (0, 0) => 1,
        (0, 1) => 3,
        (1, 1) => 5,
        _ => 7,
    }
}

/// DQPSK increment symbol for one bit pair.
pub fn dqpsk_increment(b0: u8, b1: u8) -> Complex64 {
    EIGHTH_CIRCLE[dqpsk_phase_steps(b0, b1) as usize]
}

/// DQPSK increment alphabet in increasing-phase order with its bit labels.
pub const DQPSK_ALPHABET: [([u8; 2], Complex64); 4] = [
    ([0, 0], EIGHTH_CIRCLE[1]),
    ([0, 1], EIGHTH_CIRCLE[3]),
    ([1, 1], EIGHTH_CIRCLE[5]),
    ([1, 0], EIGHTH_CIRCLE[7]),
];

/// Differentially mapped frame: reference symbol, mapped symbols and the
/// per-symbol increments that carry the information bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    symbols: Vec<Complex64>,
    increments: Vec<Complex64>,
    bits: FrameBits,
}

impl SymbolStream {
    /// Number of mapped symbols (the reference symbol is not counted).
    pub fn total_symbols(&self) -> usize {
        self.increments.len()
    }

    /// Symbol a_k for k in 0..=total; k = 0 is the reference exp(j*pi/2).
    pub fn symbol(&self, k: usize) -> Complex64 {
        self.symbols[k]
    }

    /// Increment d_k = a_k * conj(a_{k-1}) for k in 1..=total.
    pub fn increment(&self, k: usize) -> Complex64 {
        self.increments[k - 1]
    }

    /// All symbols including the leading reference.
    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn increments(&self) -> &[Complex64] {
        &self.increments
    }

    pub fn bits(&self) -> &FrameBits {
        &self.bits
    }
}

/// Maps frame bits onto the differential symbol stream.
///
/// Bits are consumed region by region in layout order. Bit counts must match
/// the layout exactly.
pub fn map_stream(bits: &FrameBits, layout: &FrameLayout) -> Result<SymbolStream> {
    let total = layout.total_symbols();
    let mut symbols = Vec::with_capacity(total + 1);
    let mut increments = Vec::with_capacity(total);
    let mut phase = REFERENCE_PHASE_STEPS;
    symbols.push(EIGHTH_CIRCLE[phase.rem_euclid(8) as usize]);

    for region in layout.regions() {
        let region_bits = bits.bits_for(region.kind);
        let expected = region.symbols * region.modulation.bits_per_symbol();
        if region_bits.len() != expected {
            return Err(Error::BitCountMismatch {
                region: region.kind.label(),
                expected,
                actual: region_bits.len(),
            });
        }
        match region.modulation {
            Modulation::Dbpsk => {
                for &b in region_bits {
                    let step = dbpsk_phase_steps(b);
                    phase = (phase + step).rem_euclid(8);
                    symbols.push(EIGHTH_CIRCLE[phase as usize]);
                    increments.push(EIGHTH_CIRCLE[step.rem_euclid(8) as usize]);
                }
            }
            Modulation::Dqpsk => {
                for pair in region_bits.chunks_exact(2) {
                    let step = dqpsk_phase_steps(pair[0], pair[1]);
                    phase = (phase + step).rem_euclid(8);
                    symbols.push(EIGHTH_CIRCLE[phase as usize]);
                    increments.push(EIGHTH_CIRCLE[step as usize]);
                }
            }
        }
    }

    Ok(SymbolStream {
        symbols,
        increments,
        bits: bits.clone(),
    })
}

/// Nearest DBPSK increment for a noisy differential observation.
///
/// Decides on the sign of Im(z); an exact tie resolves to +j (bit 0).
pub fn hard_demap_dbpsk(z: Complex64) -> (u8, Complex64) {
    if z.im >= 0.0 {
        (0, EIGHTH_CIRCLE[2])
    } else {
        (1, EIGHTH_CIRCLE[6])
    }
}

/// Nearest DQPSK increment for a noisy differential observation.
///
/// Maximizes Re(conj(v) * z) over the alphabet; exact ties resolve to the
/// smallest phase in [0, 2pi) among the maximizers.
pub fn hard_demap_dqpsk(z: Complex64) -> ([u8; 2], Complex64) {
    let mut best = DQPSK_ALPHABET[0];
    let mut best_score = (best.1.conj() * z).re;
    for cand in &DQPSK_ALPHABET[1..] {
        let score = (cand.1.conj() * z).re;
        if score > best_score {
            best = *cand;
            best_score = score;
        }
    }
    (best.0, best.1)
}
