//! Two-step texture block decision.

use serde::{Deserialize, Serialize};

use crate::frame::{Rect, TextureMask, BLOCK_SIZE};
use crate::motion::AffineModel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionCheck {
    /// Four corners and the centre of the rect.
    #[default]
    Corners,
    /// Every pixel of the rect.
    Strict,
}

/// One active reference of a texture-enabled frame.
#[derive(Clone, Copy, Debug)]
pub struct TextureRef<'a> {
    pub mask: &'a TextureMask,
    pub model: Option<AffineModel>,
}

fn probe_points(rect: Rect, check: RegionCheck) -> Vec<(f64, f64)> {
    match check {
        RegionCheck::Corners => {
            let (x0, y0) = (rect.x as f64, rect.y as f64);
            let (x1, y1) = ((rect.x + rect.w - 1) as f64, (rect.y + rect.h - 1) as f64);
            vec![
                (x0, y0),
                (x1, y0),
                (x0, y1),
                (x1, y1),
                ((rect.x + rect.w / 2) as f64, (rect.y + rect.h / 2) as f64),
            ]
        }
        RegionCheck::Strict => (rect.y..rect.y + rect.h)
            .flat_map(|y| (rect.x..rect.x + rect.w).map(move |x| (x as f64, y as f64)))
            .collect(),
    }
}

/// Rounds a mapped coordinate to the 1/64-pel grid the warp samples on.
fn snap(v: f64) -> f64 {
    (v * 64.0).round() / 64.0
}

/// Step 1: every 32x32 block under `rect` is texture in `cur_mask`.
/// Step 2: for each reference, the probe points mapped through its model
/// (as transmitted, positions snapped to 1/64 pel) land in texture blocks of
/// that reference's mask.
pub fn is_texture_block(rect: Rect, cur_mask: &TextureMask, refs: &[TextureRef], check: RegionCheck) -> bool {
    if refs.is_empty()
        || rect.w < BLOCK_SIZE
        || rect.h < BLOCK_SIZE
        || rect.x % BLOCK_SIZE != 0
        || rect.y % BLOCK_SIZE != 0
        || rect.w % BLOCK_SIZE != 0
        || rect.h % BLOCK_SIZE != 0
    {
        return false;
    }
    let grid = cur_mask.grid();
    let (c0, r0) = (rect.x / BLOCK_SIZE, rect.y / BLOCK_SIZE);
    let (c1, r1) = (c0 + rect.w / BLOCK_SIZE, r0 + rect.h / BLOCK_SIZE);
    if c1 > grid.cols || r1 > grid.rows {
        return false;
    }
    for r in r0..r1 {
        for c in c0..c1 {
            if !cur_mask.is_texture(r, c) {
                return false;
            }
        }
    }
    let points = probe_points(rect, check);
    refs.iter().all(|tr| {
        let Some(m) = tr.model else { return false };
        let m = m.quantized();
        points.iter().all(|&(x, y)| {
            let (u, v) = m.apply(x, y);
            tr.mask.is_texture_point(snap(u), snap(v))
        })
    })
}

/// True when any 32x32 block under `rect` is texture.
pub fn touches_texture(rect: Rect, mask: &TextureMask) -> bool {
    let grid = mask.grid();
    let c0 = rect.x / BLOCK_SIZE;
    let r0 = rect.y / BLOCK_SIZE;
    let c1 = (rect.x + rect.w).div_ceil(BLOCK_SIZE).min(grid.cols);
    let r1 = (rect.y + rect.h).div_ceil(BLOCK_SIZE).min(grid.rows);
    (r0..r1).any(|r| (c0..c1).any(|c| mask.is_texture(r, c)))
}
