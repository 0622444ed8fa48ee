//! Byte sources and bias-free bounded uniform sampling by rejection.
//!
//! Two rejection rules are implemented: the Chrome-style rule, which
//! precomputes the largest accepted word, and the KeePass-style rule, which
//! tests whether the drawn word's block is complete. Both produce exactly
//! uniform outputs. Their accepted-word sets coincide for every range that
//! does not divide the word domain `2^bits`; when the range does divide it,
//! the Chrome rule's off-by-one maximum also rejects the top (complete)
//! block while the KeePass rule accepts it. Both rules are reproduced
//! bit-exactly, and are word-width parameterized so these facts can be
//! checked exhaustively at small widths.

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Upper bound on consecutive rejections before giving up. With a uniform
/// source the acceptance probability per draw exceeds 1/2, so this is only
/// reachable with a pathological deterministic source.
pub const REJECTION_LIMIT: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChoiceError {
    #[error("cannot choose from an empty range")]
    EmptyRange,
    #[error("rejection sampler exceeded {REJECTION_LIMIT} consecutive rejections")]
    RejectionLimitExceeded,
}

/// Provider of raw random bytes. Deterministic implementations must be
/// replayable from their seed or script.
pub trait ByteSource {
    fn next_bytes(&mut self, buf: &mut [u8]);
}

/// Provider of uniform integers in `[0, n)` -- the single randomness
/// contract the generator consumes.
pub trait ChoiceSource {
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError>;
}

/// Operating-system CSPRNG.
#[derive(Debug, Default, Clone, Copy)]
pub struct OsByteSource;

impl ByteSource for OsByteSource {
    fn next_bytes(&mut self, buf: &mut [u8]) {
        OsRng.fill_bytes(buf);
    }
}

/// Deterministic keyed byte stream (ChaCha20) for reproducible runs.
#[derive(Debug, Clone)]
pub struct SeededByteSource {
    rng: ChaCha20Rng,
}

impl SeededByteSource {
    pub fn new(seed: u64) -> Self {
        SeededByteSource {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Same seed, independent stream. Lets parallel workers derive
    /// non-overlapping deterministic byte streams from one seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededByteSource { rng }
    }
}

impl ByteSource for SeededByteSource {
    fn next_bytes(&mut self, buf: &mut [u8]) {
        self.rng.fill_bytes(buf);
    }
}

/// Fixed byte script for tests. Panics when exhausted unless cycling.
#[derive(Debug, Clone)]
pub struct ScriptedByteSource {
    bytes: Vec<u8>,
    pos: usize,
    cycle: bool,
}

impl ScriptedByteSource {
    pub fn new(bytes: Vec<u8>) -> Self {
        ScriptedByteSource {
            bytes,
            pos: 0,
            cycle: false,
        }
    }

    pub fn cycling(bytes: Vec<u8>) -> Self {
        assert!(!bytes.is_empty());
        ScriptedByteSource {
            bytes,
            pos: 0,
            cycle: true,
        }
    }
}

impl ByteSource for ScriptedByteSource {
    fn next_bytes(&mut self, buf: &mut [u8]) {
        for b in buf {
            if self.pos == self.bytes.len() {
                assert!(self.cycle, "scripted byte source exhausted");
                self.pos = 0;
            }
            *b = self.bytes[self.pos];
            self.pos += 1;
        }
    }
}

/// Fixed choice script for tests; bypasses the samplers entirely.
#[derive(Debug, Clone)]
pub struct ScriptedChoiceSource {
    values: Vec<usize>,
    pos: usize,
}

impl ScriptedChoiceSource {
    pub fn new(values: Vec<usize>) -> Self {
        ScriptedChoiceSource { values, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos == self.values.len()
    }
}

impl ChoiceSource for ScriptedChoiceSource {
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
        if n == 0 {
            return Err(ChoiceError::EmptyRange);
        }
        assert!(self.pos < self.values.len(), "choice script exhausted");
        let v = self.values[self.pos];
        assert!(v < n, "scripted choice {v} out of range for choose({n})");
        self.pos += 1;
        Ok(v)
    }
}

/// Word width in bits, 1..=64. The reference algorithms fix 64; smaller
/// widths exist so the acceptance rules can be checked over the full word
/// domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordWidth {
    bits: u32,
}

impl WordWidth {
    pub const W64: WordWidth = WordWidth { bits: 64 };

    pub fn new(bits: u32) -> Self {
        assert!((1..=64).contains(&bits), "word width must be 1..=64 bits");
        WordWidth { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn byte_len(&self) -> usize {
        self.bits.div_ceil(8) as usize
    }

    /// Largest representable word, `2^bits - 1`.
    pub fn word_max(&self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    fn check_range(&self, range: u64) {
        assert!(range >= 1, "range must be at least 1");
        if self.bits < 64 {
            assert!(
                range <= self.word_max() + 1,
                "range {range} exceeds 2^{}",
                self.bits
            );
        }
    }
}

impl Default for WordWidth {
    fn default() -> Self {
        WordWidth::W64
    }
}

/// Reads `ceil(bits/8)` bytes, assembles them little-endian, and masks to
/// the word width.
pub fn word_from_bytes<S: ByteSource + ?Sized>(src: &mut S, w: WordWidth) -> u64 {
    let mut buf = [0u8; 8];
    let n = w.byte_len();
    src.next_bytes(&mut buf[..n]);
    u64::from_le_bytes(buf) & w.word_max()
}

/// Largest word the Chrome-style rule accepts:
/// `floor((2^bits - 1) / range) * range - 1` in wrapping `bits`-bit
/// arithmetic. When `range = 2^bits` the subtraction wraps to the full word
/// maximum, so nothing is rejected; when `range` divides `2^bits - 1`'s
/// successor the top word is still rejected (e.g. range 1), reproducing the
/// reference formula bit-exactly.
pub fn max_accepted(range: u64, w: WordWidth) -> u64 {
    w.check_range(range);
    let m = w.word_max();
    ((m / range) * range).wrapping_sub(1) & m
}

/// Chrome-style rejection sampling: draw words until one is at most
/// [`max_accepted`], then reduce modulo `range`.
pub fn sample_chrome<S: ByteSource + ?Sized>(
    src: &mut S,
    range: u64,
    w: WordWidth,
) -> Result<u64, ChoiceError> {
    if range == 0 {
        return Err(ChoiceError::EmptyRange);
    }
    let max = max_accepted(range, w);
    for _ in 0..REJECTION_LIMIT {
        let value = word_from_bytes(src, w);
        if value <= max {
            return Ok(value % range);
        }
    }
    Err(ChoiceError::RejectionLimitExceeded)
}

/// KeePass-style rejection sampling: accept a word iff its whole residue
/// block fits below the word maximum.
pub fn sample_keepass<S: ByteSource + ?Sized>(
    src: &mut S,
    range: u64,
    w: WordWidth,
) -> Result<u64, ChoiceError> {
    if range == 0 {
        return Err(ChoiceError::EmptyRange);
    }
    w.check_range(range);
    let m = w.word_max();
    for _ in 0..REJECTION_LIMIT {
        let gen_value = word_from_bytes(src, w);
        let value = gen_value % range;
        if gen_value - value <= m - (range - 1) {
            return Ok(value);
        }
    }
    Err(ChoiceError::RejectionLimitExceeded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngVariant {
    Chrome,
    Keepass,
}

/// A [`ChoiceSource`] backed by a byte source through one of the rejection
/// samplers.
#[derive(Debug)]
pub struct SamplerChoiceSource<S: ByteSource> {
    source: S,
    width: WordWidth,
    variant: RngVariant,
}

impl<S: ByteSource> SamplerChoiceSource<S> {
    pub fn into_inner(self) -> S {
        self.source
    }
}

pub fn make_choice_source<S: ByteSource>(
    source: S,
    width: WordWidth,
    variant: RngVariant,
) -> SamplerChoiceSource<S> {
    SamplerChoiceSource {
        source,
        width,
        variant,
    }
}

impl<S: ByteSource> ChoiceSource for SamplerChoiceSource<S> {
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
        let value = match self.variant {
            RngVariant::Chrome => sample_chrome(&mut self.source, n as u64, self.width)?,
            RngVariant::Keepass => sample_keepass(&mut self.source, n as u64, self.width)?,
        };
        Ok(value as usize)
    }
}
