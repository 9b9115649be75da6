//! Predictors and residual reconstruction shared by encoder and decoder.

use super::dct;
use crate::frame::{Plane, Rect};

/// Intra DC from the row above and the column left of `r`, when available.
pub fn intra_dc(recon: &Plane, r: Rect) -> Vec<u8> {
    let (mut sum, mut n) = (0u32, 0u32);
    if r.y > 0 {
        sum += recon.row(r.y - 1)[r.x..r.x + r.w].iter().map(|&v| u32::from(v)).sum::<u32>();
        n += r.w as u32;
    }
    if r.x > 0 {
        sum += (r.y..r.y + r.h).map(|y| u32::from(recon.get(r.x - 1, y))).sum::<u32>();
        n += r.h as u32;
    }
    let dc = if n == 0 { 128 } else { ((sum + n / 2) / n) as u8 };
    vec![dc; r.w * r.h]
}

pub fn planar_available(r: Rect) -> bool {
    r.x > 0 && r.y > 0
}

/// Planar intra: the mean of a horizontal and a vertical linear blend.
pub fn intra_planar(recon: &Plane, r: Rect) -> Vec<u8> {
    let (w, h) = (r.w as i64, r.h as i64);
    let top: Vec<i64> = recon.row(r.y - 1)[r.x..r.x + r.w].iter().map(|&v| i64::from(v)).collect();
    let left: Vec<i64> = (r.y..r.y + r.h).map(|y| i64::from(recon.get(r.x - 1, y))).collect();
    let (tr, bl) = (top[r.w - 1], left[r.h - 1]);
    let mut out = Vec::with_capacity(r.w * r.h);
    for y in 0..h {
        for x in 0..w {
            let hor = (w - 1 - x) * left[y as usize] + (x + 1) * tr;
            let ver = (h - 1 - y) * top[x as usize] + (y + 1) * bl;
            out.push(((hor * h + ver * w + w * h) / (2 * w * h)) as u8);
        }
    }
    out
}

/// Motion-compensated block. `mv` is in units of 1/`den` sample (2 for luma
/// half-pel, 4 for chroma quarter-pel); samples clamp to the plane.
pub fn inter_pred(reference: &Plane, r: Rect, mv: (i32, i32), den: i32) -> Vec<u8> {
    let shift = den.trailing_zeros();
    let (ix, iy) = (i64::from(mv.0 >> shift), i64::from(mv.1 >> shift));
    let (fx, fy) = (i64::from(mv.0 & (den - 1)), i64::from(mv.1 & (den - 1)));
    let d = i64::from(den);
    let round = d * d / 2;
    let mut out = Vec::with_capacity(r.w * r.h);
    for y in r.y..r.y + r.h {
        let sy = y as i64 + iy;
        for x in r.x..r.x + r.w {
            let sx = x as i64 + ix;
            let v = if fx == 0 && fy == 0 {
                reference.get_clamped(sx, sy)
            } else {
                let a = i64::from(reference.get_clamped(sx, sy));
                let b = i64::from(reference.get_clamped(sx + 1, sy));
                let c = i64::from(reference.get_clamped(sx, sy + 1));
                let e = i64::from(reference.get_clamped(sx + 1, sy + 1));
                (((d - fx) * (d - fy) * a + fx * (d - fy) * b + (d - fx) * fy * c + fx * fy * e + round) / (d * d)) as u8
            };
            out.push(v);
        }
    }
    out
}

/// Transform tile side for a plane block of side `side`.
pub fn tile_size(side: usize) -> usize {
    if side >= 8 {
        8
    } else {
        4
    }
}

/// Adds the dequantized residual of one tile to its prediction.
pub fn reconstruct_tile(pred: &[u8], levels: &[i32], n: usize, step: f64) -> Vec<u8> {
    if levels.iter().all(|&l| l == 0) {
        return pred.to_vec();
    }
    let res = dct::inverse(&dct::dequantize(levels, step), n);
    pred.iter()
        .zip(res)
        .map(|(&p, r)| dct::round_half_away(f64::from(p) + r).clamp(0.0, 255.0) as u8)
        .collect()
}

/// Copies tile `(tx, ty)` of side `n` out of a `w`-wide block.
pub fn tile_of(block: &[u8], w: usize, tx: usize, ty: usize, n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n * n);
    for y in 0..n {
        let start = (ty * n + y) * w + tx * n;
        out.extend_from_slice(&block[start..start + n]);
    }
    out
}

pub fn put_tile(block: &mut [u8], w: usize, tx: usize, ty: usize, n: usize, tile: &[u8]) {
    for y in 0..n {
        let start = (ty * n + y) * w + tx * n;
        block[start..start + n].copy_from_slice(&tile[y * n..y * n + n]);
    }
}

pub fn write_block(plane: &mut Plane, r: Rect, block: &[u8]) {
    for y in 0..r.h {
        for x in 0..r.w {
            plane.set(r.x + x, r.y + y, block[y * r.w + x]);
        }
    }
}

pub fn read_block(plane: &Plane, r: Rect) -> Vec<u8> {
    let mut out = Vec::with_capacity(r.w * r.h);
    for y in r.y..r.y + r.h {
        out.extend_from_slice(&plane.row(y)[r.x..r.x + r.w]);
    }
    out
}
