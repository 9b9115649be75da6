//! Context layout and the symbol-level syntax of the superblock payload.

use super::dct::zigzag;
use super::entropy::{read_eg0, write_eg0, BitSink, RangeDecoder, PROB_INIT};
use crate::error::{Error, Result};

const BUCKETS: usize = 16;

/// Adaptive probabilities; reset at the start of every frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contexts {
    /// Indexed by node side: 64, 32, 16.
    pub split: [u16; 3],
    /// Indexed by node side: 64, 32.
    pub texture: [u16; 2],
    pub is_inter: u16,
    pub ref_idx: u16,
    pub intra_planar: u16,
    pub mv_zero: [u16; 2],
    /// Luma, chroma.
    pub cbf: [u16; 2],
    pub sig: [[u16; BUCKETS]; 2],
    pub last: [[u16; BUCKETS]; 2],
    pub gt1: [u16; 2],
    pub gt2: [u16; 2],
}

impl Default for Contexts {
    fn default() -> Self {
        Self {
            split: [PROB_INIT; 3],
            texture: [PROB_INIT; 2],
            is_inter: PROB_INIT,
            ref_idx: PROB_INIT,
            intra_planar: PROB_INIT,
            mv_zero: [PROB_INIT; 2],
            cbf: [PROB_INIT; 2],
            sig: [[PROB_INIT; BUCKETS]; 2],
            last: [[PROB_INIT; BUCKETS]; 2],
            gt1: [PROB_INIT; 2],
            gt2: [PROB_INIT; 2],
        }
    }
}

pub fn split_ctx(size: usize) -> usize {
    match size {
        64 => 0,
        32 => 1,
        _ => 2,
    }
}

pub fn texture_ctx(size: usize) -> usize {
    usize::from(size != 64)
}

fn parse_err(dec: &RangeDecoder, reason: &str) -> Error {
    Error::Parse {
        offset: dec.offset(),
        reason: reason.into(),
    }
}

/// Coefficient levels of one `n`x`n` tile given in raster order.
pub fn write_coeffs(s: &mut impl BitSink, ctx: &mut Contexts, levels: &[i32], n: usize, cls: usize) {
    let scan = zigzag(n);
    let last = scan.iter().rposition(|&i| levels[i] != 0);
    s.bit(&mut ctx.cbf[cls], last.is_some());
    let Some(last) = last else { return };
    for (pos, &idx) in scan.iter().enumerate().take(last + 1) {
        let v = levels[idx];
        let b = pos.min(BUCKETS - 1);
        s.bit(&mut ctx.sig[cls][b], v != 0);
        if v == 0 {
            continue;
        }
        if pos + 1 < n * n {
            s.bit(&mut ctx.last[cls][b], pos == last);
        }
        let a = v.unsigned_abs();
        s.bit(&mut ctx.gt1[cls], a > 1);
        if a > 1 {
            s.bit(&mut ctx.gt2[cls], a > 2);
            if a > 2 {
                write_eg0(s, a - 3);
            }
        }
        s.bypass(v < 0);
    }
}

/// Returns the levels in raster order and the number of coded symbols.
pub fn read_coeffs(dec: &mut RangeDecoder, ctx: &mut Contexts, n: usize, cls: usize) -> Result<(Vec<i32>, usize)> {
    let scan = zigzag(n);
    let mut levels = vec![0i32; n * n];
    let mut symbols = 1;
    if !dec.bit(&mut ctx.cbf[cls]) {
        return Ok((levels, symbols));
    }
    for (pos, &idx) in scan.iter().enumerate() {
        let b = pos.min(BUCKETS - 1);
        symbols += 1;
        if !dec.bit(&mut ctx.sig[cls][b]) {
            continue;
        }
        let is_last = if pos + 1 < n * n {
            symbols += 1;
            dec.bit(&mut ctx.last[cls][b])
        } else {
            true
        };
        let mut a: u32 = 1;
        symbols += 1;
        if dec.bit(&mut ctx.gt1[cls]) {
            a = 2;
            symbols += 1;
            if dec.bit(&mut ctx.gt2[cls]) {
                symbols += 1;
                a = read_eg0(dec)?
                    .checked_add(3)
                    .filter(|&v| v <= 1 << 20)
                    .ok_or_else(|| parse_err(dec, "coefficient level out of range"))?;
            }
        }
        symbols += 1;
        let neg = dec.bypass();
        levels[idx] = if neg { -(a as i32) } else { a as i32 };
        if is_last {
            return Ok((levels, symbols));
        }
    }
    Err(parse_err(dec, "coded block without a last coefficient"))
}

/// One motion vector difference component.
pub fn write_mvd(s: &mut impl BitSink, ctx: &mut Contexts, comp: usize, v: i32) {
    s.bit(&mut ctx.mv_zero[comp], v != 0);
    if v != 0 {
        s.bypass(v < 0);
        write_eg0(s, v.unsigned_abs() - 1);
    }
}

pub fn read_mvd(dec: &mut RangeDecoder, ctx: &mut Contexts, comp: usize) -> Result<i32> {
    if !dec.bit(&mut ctx.mv_zero[comp]) {
        return Ok(0);
    }
    let neg = dec.bypass();
    let m = read_eg0(dec)?;
    if m >= 1 << 16 {
        return Err(parse_err(dec, "motion vector out of range"));
    }
    let v = m as i32 + 1;
    Ok(if neg { -v } else { v })
}

/// Prediction mode of a conventional leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafMode {
    IntraDc,
    IntraPlanar,
    /// Reference slot and luma motion vector in half-pel units.
    Inter { slot: usize, mv: (i32, i32) },
}

/// Mode syntax; `mv_pred` holds the last vector coded per reference slot.
pub fn write_mode(
    s: &mut impl BitSink,
    ctx: &mut Contexts,
    mode: LeafMode,
    n_refs: usize,
    planar_ok: bool,
    mv_pred: &[(i32, i32); 2],
) {
    if n_refs > 0 {
        s.bit(&mut ctx.is_inter, matches!(mode, LeafMode::Inter { .. }));
    }
    match mode {
        LeafMode::Inter { slot, mv } => {
            if n_refs > 1 {
                s.bit(&mut ctx.ref_idx, slot == 1);
            }
            let p = mv_pred[slot];
            write_mvd(s, ctx, 0, mv.0 - p.0);
            write_mvd(s, ctx, 1, mv.1 - p.1);
        }
        LeafMode::IntraDc | LeafMode::IntraPlanar => {
            if planar_ok {
                s.bit(&mut ctx.intra_planar, mode == LeafMode::IntraPlanar);
            }
        }
    }
}

pub fn read_mode(
    dec: &mut RangeDecoder,
    ctx: &mut Contexts,
    n_refs: usize,
    planar_ok: bool,
    mv_pred: &[(i32, i32); 2],
) -> Result<LeafMode> {
    let inter = n_refs > 0 && dec.bit(&mut ctx.is_inter);
    if inter {
        let slot = usize::from(n_refs > 1 && dec.bit(&mut ctx.ref_idx));
        let p = mv_pred[slot];
        let dx = read_mvd(dec, ctx, 0)?;
        let dy = read_mvd(dec, ctx, 1)?;
        let mv = (p.0.saturating_add(dx), p.1.saturating_add(dy));
        if mv.0.abs() > 1 << 14 || mv.1.abs() > 1 << 14 {
            return Err(parse_err(dec, "motion vector out of range"));
        }
        Ok(LeafMode::Inter { slot, mv })
    } else if planar_ok && dec.bit(&mut ctx.intra_planar) {
        Ok(LeafMode::IntraPlanar)
    } else {
        Ok(LeafMode::IntraDc)
    }
}
