//! Adaptive binary range coder with 11-bit probabilities.
//!
//! The coder follows the classic LZMA layout: a 32-bit range, a 64-bit low
//! word with carry propagation through a cached byte, and probabilities that
//! move by 1/32 of the distance to the observed symbol.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const PROB_BITS: u32 = 11;
pub const PROB_ONE: u16 = 1 << PROB_BITS;
pub const PROB_INIT: u16 = PROB_ONE / 2;
const MOVE_BITS: u32 = 5;
const TOP: u32 = 1 << 24;

#[inline]
fn adapt(p: &mut u16, bit: bool) {
    if bit {
        *p -= *p >> MOVE_BITS;
    } else {
        *p += (PROB_ONE - *p) >> MOVE_BITS;
    }
}

/// Cost in bits of coding `bit` with probability `p` (of a zero).
pub fn bit_cost(p: u16, bit: bool) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        (0..=PROB_ONE as usize)
            .map(|i| {
                if i == 0 {
                    f64::from(PROB_BITS + 1)
                } else {
                    -(i as f64 / f64::from(PROB_ONE)).log2()
                }
            })
            .collect()
    });
    let p0 = usize::from(p);
    if bit {
        t[PROB_ONE as usize - p0]
    } else {
        t[p0]
    }
}

/// Anything symbols can be written to: the real encoder or a cost estimator.
pub trait BitSink {
    fn bit(&mut self, p: &mut u16, bit: bool);
    fn bypass(&mut self, bit: bool);
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

impl BitSink for RangeEncoder {
    fn bit(&mut self, p: &mut u16, bit: bool) {
        let bound = (self.range >> PROB_BITS) * u32::from(*p);
        if bit {
            self.low += u64::from(bound);
            self.range -= bound;
        } else {
            self.range = bound;
        }
        adapt(p, bit);
        self.normalize();
    }

    fn bypass(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += u64::from(self.range);
        }
        self.normalize();
    }
}

/// Sums symbol costs without adapting the probabilities it is handed.
#[derive(Clone, Copy, Debug, Default)]
pub struct CostEstimator {
    pub bits: f64,
}

impl BitSink for CostEstimator {
    fn bit(&mut self, p: &mut u16, bit: bool) {
        self.bits += bit_cost(*p, bit);
    }

    fn bypass(&mut self, _bit: bool) {
        self.bits += 1.0;
    }
}

pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
    /// Offset of `data` within the enclosing file, for error reporting.
    base: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8], base: usize) -> Result<Self> {
        if data.len() < 5 {
            return Err(Error::Parse {
                offset: base,
                reason: "payload shorter than the coder preamble".into(),
            });
        }
        let mut d = Self {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
            base,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | u32::from(d.next_byte());
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.data.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte());
        }
    }

    pub fn bit(&mut self, p: &mut u16) -> bool {
        let bound = (self.range >> PROB_BITS) * u32::from(*p);
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        adapt(p, bit);
        self.normalize();
        bit
    }

    pub fn bypass(&mut self) -> bool {
        self.range >>= 1;
        let bit = self.code >= self.range;
        if bit {
            self.code -= self.range;
        }
        self.normalize();
        bit
    }

    /// Fails if the decoder consumed more than a few bytes past the payload.
    pub fn check_overrun(&self) -> Result<()> {
        if self.pos > self.data.len() + 4 {
            return Err(Error::Parse {
                offset: self.base + self.data.len(),
                reason: "payload ended inside a symbol".into(),
            });
        }
        Ok(())
    }

    pub fn offset(&self) -> usize {
        self.base + self.pos.min(self.data.len())
    }
}

/// Order-0 Exp-Golomb code in bypass bits.
pub fn write_eg0(sink: &mut impl BitSink, v: u32) {
    let x = u64::from(v) + 1;
    let n = 63 - x.leading_zeros();
    for _ in 0..n {
        sink.bypass(false);
    }
    for i in (0..=n).rev() {
        sink.bypass((x >> i) & 1 == 1);
    }
}

pub fn read_eg0(dec: &mut RangeDecoder) -> Result<u32> {
    let mut n = 0;
    while !dec.bypass() {
        n += 1;
        if n > 31 {
            return Err(Error::Parse {
                offset: dec.offset(),
                reason: "Exp-Golomb prefix too long".into(),
            });
        }
    }
    let mut x: u64 = 1;
    for _ in 0..n {
        x = (x << 1) | u64::from(dec.bypass());
    }
    u32::try_from(x - 1).map_err(|_| Error::Parse {
        offset: dec.offset(),
        reason: "Exp-Golomb value out of range".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_mixed_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let syms: Vec<(usize, bool, u32)> = (0..20000)
            .map(|_| (rng.gen_range(0..4), rng.gen_bool(0.2), rng.gen_range(0..300)))
            .collect();
        let mut enc = RangeEncoder::new();
        let mut probs = [PROB_INIT; 4];
        for &(c, b, v) in &syms {
            enc.bit(&mut probs[c], b);
            if c == 0 {
                write_eg0(&mut enc, v);
            }
            enc.bypass(b);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes, 0).unwrap();
        let mut probs = [PROB_INIT; 4];
        for &(c, b, v) in &syms {
            assert_eq!(dec.bit(&mut probs[c]), b);
            if c == 0 {
                assert_eq!(read_eg0(&mut dec).unwrap(), v);
            }
            assert_eq!(dec.bypass(), b);
        }
        dec.check_overrun().unwrap();
    }

    #[test]
    fn skewed_source_compresses() {
        let mut enc = RangeEncoder::new();
        let mut p = PROB_INIT;
        let mut ideal = 0.0;
        for i in 0..10000 {
            ideal += bit_cost(p, i % 50 == 0);
            enc.bit(&mut p, i % 50 == 0);
        }
        let bits = enc.finish().len() as f64 * 8.0;
        assert!(ideal < 10000.0 * 0.25);
        assert!(bits <= ideal + 48.0, "{bits} vs {ideal}");
    }

    #[test]
    fn estimator_matches_cost_table() {
        let mut est = CostEstimator::default();
        let mut p = PROB_INIT;
        est.bit(&mut p, true);
        est.bypass(false);
        assert_eq!(p, PROB_INIT);
        assert!((est.bits - 2.0).abs() < 1e-12);
    }
}
