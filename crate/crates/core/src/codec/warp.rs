//! Affine warping of reference reconstructions.
//!
//! Positions are computed in f64 from the model as transmitted (f32
//! parameters), snapped to 1/64 pixel and interpolated bilinearly with
//! edge clamping. Every destination pixel is computed independently, so
//! warping two adjacent rects gives the same pixels as warping their union.

use crate::frame::{Frame, Plane, Rect};
use crate::motion::AffineModel;

const FRAC_BITS: u32 = 6;
const ONE: i64 = 1 << FRAC_BITS;

/// Bilinear sample at a 1/64-pel position, clamped to the first `w`x`h` samples.
#[inline]
fn sample(p: &Plane, w: usize, h: usize, fx64: i64, fy64: i64) -> u8 {
    let (ix, iy) = (fx64 >> FRAC_BITS, fy64 >> FRAC_BITS);
    let (ax, ay) = (fx64 & (ONE - 1), fy64 & (ONE - 1));
    let at = |x: i64, y: i64| {
        let x = x.clamp(0, w as i64 - 1) as usize;
        let y = y.clamp(0, h as i64 - 1) as usize;
        i64::from(p.get(x, y))
    };
    let top = (ONE - ax) * at(ix, iy) + ax * at(ix + 1, iy);
    let bot = (ONE - ax) * at(ix, iy + 1) + ax * at(ix + 1, iy + 1);
    (((ONE - ay) * top + ay * bot + (1 << (2 * FRAC_BITS - 1))) >> (2 * FRAC_BITS)) as u8
}

#[inline]
fn to_fixed(v: f64) -> i64 {
    // saturating cast keeps corrupt models harmless
    (v * ONE as f64).round() as i64
}

/// Warps one plane over `rect` (in that plane's coordinates).
pub fn warp_plane(src: &Plane, valid_w: usize, valid_h: usize, model: &AffineModel, rect: Rect) -> Vec<u8> {
    let mut out = Vec::with_capacity(rect.w * rect.h);
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            let (mx, my) = model.apply(x as f64, y as f64);
            out.push(sample(src, valid_w, valid_h, to_fixed(mx), to_fixed(my)));
        }
    }
    out
}

/// Chroma model: same linear part, halved translation.
pub fn chroma_model(m: &AffineModel) -> AffineModel {
    AffineModel {
        tx: m.tx / 2.0,
        ty: m.ty / 2.0,
        ..*m
    }
}

/// Warped luma and chroma for a luma rect with even origin and size.
/// `width`/`height` are the real (uncropped) frame dimensions.
pub fn warp_block(reference: &Frame, width: usize, height: usize, model: &AffineModel, rect: Rect) -> [Vec<u8>; 3] {
    let m = model.quantized();
    let cm = chroma_model(&m);
    let (cw, ch) = (width.div_ceil(2), height.div_ceil(2));
    let crect = Rect::new(rect.x / 2, rect.y / 2, rect.w / 2, rect.h / 2);
    [
        warp_plane(reference.plane(0), width, height, &m, rect),
        warp_plane(reference.plane(1), cw, ch, &cm, crect),
        warp_plane(reference.plane(2), cw, ch, &cm, crect),
    ]
}

/// Texture-mode reconstruction: one warped prediction, or the rounded
/// average of two.
pub fn reconstruct_texture_block(
    refs: &[(&Frame, AffineModel)],
    width: usize,
    height: usize,
    rect: Rect,
) -> [Vec<u8>; 3] {
    let mut preds = refs.iter().map(|(f, m)| warp_block(f, width, height, m, rect));
    let first = preds.next().expect("texture mode needs a reference");
    match preds.next() {
        None => first,
        Some(second) => {
            let mut out = first;
            for (plane, other) in out.iter_mut().zip(second.iter()) {
                for (p, &q) in plane.iter_mut().zip(other) {
                    *p = average(*p, q);
                }
            }
            out
        }
    }
}

/// Rounded mean of two samples, halves upwards.
#[inline]
pub fn average(p: u8, q: u8) -> u8 {
    ((u16::from(p) + u16::from(q) + 1) >> 1) as u8
}
