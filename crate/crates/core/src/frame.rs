//! Narrowband frame structure: region layout, spreading preamble and bit
//! generation.
//!
//! The standard frame carries 90 preamble symbols (a 63-chip m-sequence
//! followed by a 27-bit deterministic extension), 31 DBPSK header symbols and
//! 80 DQPSK payload symbols. Shorter single-region layouts are used for
//! steady-state measurement runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differential modulation used by a frame region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// pi/2-shifted differential BPSK, one bit per symbol.
    Dbpsk,
    /// pi/4-shifted differential QPSK, two bits per symbol.
    Dqpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Dbpsk => 1,
            Modulation::Dqpsk => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Modulation::Dbpsk => "dbpsk",
            Modulation::Dqpsk => "dqpsk",
        }
    }
}

/// Functional role of a span of symbols inside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Preamble,
    PlcpHeader,
    Psdu,
}

impl RegionKind {
    /// Mandated frame order: preamble, then header, then payload.
    pub fn rank(self) -> u8 {
        match self {
            RegionKind::Preamble => 0,
            RegionKind::PlcpHeader => 1,
            RegionKind::Psdu => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegionKind::Preamble => "preamble",
            RegionKind::PlcpHeader => "plcp-header",
            RegionKind::Psdu => "psdu",
        }
    }
}

/// Contiguous run of symbols sharing a role and a modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub symbols: usize,
    pub modulation: Modulation,
}

pub const STANDARD_PREAMBLE_SYMBOLS: usize = 90;
pub const STANDARD_HEADER_SYMBOLS: usize = 31;
pub const STANDARD_PSDU_SYMBOLS: usize = 80;

/// Ordered region map of one frame.
///
/// Regions appear at most once each and always in preamble, header, payload
/// order. Indexing is zero-based over mapped symbols, so index 0 is the first
/// symbol after the differential reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    regions: Vec<Region>,
}

impl FrameLayout {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::invalid("layout", "at least one region required"));
        }
        for r in &regions {
            if r.symbols == 0 {
                return Err(Error::invalid(
                    "layout",
                    format!("region {} has zero symbols", r.kind.label()),
                ));
            }
        }
        for pair in regions.windows(2) {
            if pair[1].kind.rank() <= pair[0].kind.rank() {
                return Err(Error::invalid(
                    "layout",
                    "regions must be unique and ordered preamble, header, psdu",
                ));
            }
        }
        Ok(FrameLayout { regions })
    }

    /// 90-symbol preamble, 31-symbol DBPSK header, 80-symbol DQPSK payload.
    pub fn standard() -> Self {
        FrameLayout {
            regions: vec![
                Region {
                    kind: RegionKind::Preamble,
                    symbols: STANDARD_PREAMBLE_SYMBOLS,
                    modulation: Modulation::Dbpsk,
                },
                Region {
                    kind: RegionKind::PlcpHeader,
                    symbols: STANDARD_HEADER_SYMBOLS,
                    modulation: Modulation::Dbpsk,
                },
                Region {
                    kind: RegionKind::Psdu,
                    symbols: STANDARD_PSDU_SYMBOLS,
                    modulation: Modulation::Dqpsk,
                },
            ],
        }
    }

    /// Single payload region, used for steady-state measurement blocks.
    pub fn payload_block(modulation: Modulation, symbols: usize) -> Result<Self> {
        FrameLayout::new(vec![Region {
            kind: RegionKind::Psdu,
            symbols,
            modulation,
        }])
    }

    /// Standard preamble followed by a single payload region: acquisition on
    /// pilots, then steady-state measurement in the mode under test.
    pub fn preamble_payload(modulation: Modulation, symbols: usize) -> Result<Self> {
        FrameLayout::new(vec![
            Region {
                kind: RegionKind::Preamble,
                symbols: STANDARD_PREAMBLE_SYMBOLS,
                modulation: Modulation::Dbpsk,
            },
            Region {
                kind: RegionKind::Psdu,
                symbols,
                modulation,
            },
        ])
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn total_symbols(&self) -> usize {
        self.regions.iter().map(|r| r.symbols).sum()
    }

    /// Number of information bits carried by the region of the given kind.
    pub fn bit_count(&self, kind: RegionKind) -> usize {
        self.regions
            .iter()
            .find(|r| r.kind == kind)
            .map(|r| r.symbols * r.modulation.bits_per_symbol())
            .unwrap_or(0)
    }

    /// Role and modulation of the mapped symbol at `index` (zero-based).
    pub fn region_of(&self, index: usize) -> Result<(RegionKind, Modulation)> {
        let mut start = 0;
        for r in &self.regions {
            if index < start + r.symbols {
                return Ok((r.kind, r.modulation));
            }
            start += r.symbols;
        }
        Err(Error::SymbolOutOfRange {
            index,
            total: self.total_symbols(),
        })
    }

    /// Modulation of the last region; used to label measurement cells.
    pub fn payload_modulation(&self) -> Modulation {
        self.regions
            .last()
            .map(|r| r.modulation)
            .expect("layout has at least one region")
    }

    pub fn has_region(&self, kind: RegionKind) -> bool {
        self.regions.iter().any(|r| r.kind == kind)
    }
}

/// Maximal-length LFSR descriptor.
///
/// `taps` holds the low coefficients of the feedback polynomial: bit `i` set
/// means the polynomial has an `x^i` term. The `x^degree` term is implicit.
/// The default is `x^6 + x + 1` clocked from the all-ones state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSequenceSpec {
    pub degree: u32,
    pub taps: u64,
    pub seed: u64,
}

impl Default for MSequenceSpec {
    fn default() -> Self {
        MSequenceSpec {
            degree: 6,
            taps: 0b000011,
            seed: 0b111111,
        }
    }
}

/// One full period of a maximal-length sequence as 0/1 bits.
///
/// The register is clocked in Fibonacci form: the output is the low state
/// bit and the feedback parity enters at the top. Non-primitive taps are
/// detected by the state recurring before 2^degree - 1 steps.
pub fn generate_m_sequence(degree: u32, taps: u64, seed: u64) -> Result<Vec<u8>> {
    if !(2..=32).contains(&degree) {
        return Err(Error::invalid("degree", "must be in 2..=32"));
    }
    let mask = (1u64 << degree) - 1;
    let seed = seed & mask;
    if seed == 0 {
        return Err(Error::invalid("seed", "LFSR seed must be nonzero"));
    }
    let taps = taps & mask;
    if taps & 1 == 0 {
        return Err(Error::invalid(
            "taps",
            "feedback polynomial needs a constant term (bit 0)",
        ));
    }
    let period = (1usize << degree) - 1;
    let mut state = seed;
    let mut bits = Vec::with_capacity(period);
    for step in 0..period {
        bits.push((state & 1) as u8);
        let feedback = ((state & taps).count_ones() & 1) as u64;
        state = (state >> 1) | (feedback << (degree - 1));
        if state == seed && step + 1 < period {
            return Err(Error::NonPrimitiveTaps {
                degree,
                taps,
                period: step + 1,
            });
        }
    }
    if state != seed {
        return Err(Error::NonPrimitiveTaps {
            degree,
            taps,
            period,
        });
    }
    Ok(bits)
}

/// 25-bit published extension pattern appended to the 63-chip m-sequence.
pub const EXTENSION_CORE: &str = "0101010101101101101101101";
/// Padding appended to the published pattern to fill the 90-symbol preamble.
pub const EXTENSION_PAD: &str = "01";

fn bits_from_str(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

/// Preamble recipe: m-sequence followed by a fixed extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreambleSpec {
    pub mseq: MSequenceSpec,
    pub extension: Vec<u8>,
}

impl Default for PreambleSpec {
    fn default() -> Self {
        let mut extension = bits_from_str(EXTENSION_CORE);
        extension.extend(bits_from_str(EXTENSION_PAD));
        PreambleSpec {
            mseq: MSequenceSpec::default(),
            extension,
        }
    }
}

impl PreambleSpec {
    /// Full preamble bit pattern (m-sequence period followed by extension).
    pub fn bits(&self) -> Result<Vec<u8>> {
        let mut bits = generate_m_sequence(self.mseq.degree, self.mseq.taps, self.mseq.seed)?;
        bits.extend_from_slice(&self.extension);
        Ok(bits)
    }
}

/// Information bits for each region of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBits {
    pub preamble: Vec<u8>,
    pub header: Vec<u8>,
    pub psdu: Vec<u8>,
}

impl FrameBits {
    pub fn bits_for(&self, kind: RegionKind) -> &[u8] {
        match kind {
            RegionKind::Preamble => &self.preamble,
            RegionKind::PlcpHeader => &self.header,
            RegionKind::Psdu => &self.psdu,
        }
    }

    pub fn total(&self) -> usize {
        self.preamble.len() + self.header.len() + self.psdu.len()
    }
}

/// Builds the bit content of one frame.
///
/// The preamble region is deterministic (m-sequence plus extension) and must
/// match the region's symbol budget exactly. Header and payload bits are
/// drawn from a ChaCha stream seeded with `payload_seed`, header first.
pub fn build_frame_bits(
    layout: &FrameLayout,
    preamble: &PreambleSpec,
    payload_seed: u64,
) -> Result<FrameBits> {
    let mut rng = ChaCha8Rng::seed_from_u64(payload_seed);
    let mut bits = FrameBits {
        preamble: Vec::new(),
        header: Vec::new(),
        psdu: Vec::new(),
    };
    for region in layout.regions() {
        let need = region.symbols * region.modulation.bits_per_symbol();
        match region.kind {
            RegionKind::Preamble => {
                let p = preamble.bits()?;
                if p.len() != need {
                    return Err(Error::BitCountMismatch {
                        region: "preamble",
                        expected: need,
                        actual: p.len(),
                    });
                }
                bits.preamble = p;
            }
            RegionKind::PlcpHeader => {
                bits.header = (0..need).map(|_| rng.random_range(0..2u8)).collect();
            }
            RegionKind::Psdu => {
                bits.psdu = (0..need).map(|_| rng.random_range(0..2u8)).collect();
            }
        }
    }
    Ok(bits)
}
