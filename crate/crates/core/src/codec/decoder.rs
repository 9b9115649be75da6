//! Frame decoder: mirrors the encoder's superblock traversal.

use super::entropy::RangeDecoder;
use super::predict::{
    inter_pred, intra_dc, intra_planar, planar_available, put_tile, reconstruct_tile, tile_of, tile_size,
    write_block,
};
use super::syntax::{read_coeffs, read_mode, split_ctx, texture_ctx, Contexts, LeafMode};
use super::warp::reconstruct_texture_block;
use super::{qp_to_step, SB_SIZE};
use crate::error::Result;
use crate::frame::{Frame, Rect};
use crate::motion::AffineModel;

const MIN_LEAF: usize = 8;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameDecodeStats {
    pub texture_pixels: usize,
    pub texture_leaves: usize,
    /// Coefficient symbols read inside texture leaves; texture leaves carry
    /// none, so this stays zero for a well-formed stream.
    pub texture_coeff_symbols: usize,
}

pub struct FrameDecodeInput<'a> {
    pub payload: &'a [u8],
    /// Offset of the payload within the file.
    pub base: usize,
    pub frame_index: usize,
    /// Padded dimensions.
    pub padded: (usize, usize),
    /// Real dimensions.
    pub width: usize,
    pub height: usize,
    pub qp: u8,
    /// Padded reconstructions of the conventional references.
    pub refs: Vec<&'a Frame>,
    /// Texture references with their models; `None` when texture mode is off.
    pub texture: Option<Vec<(&'a Frame, AffineModel)>>,
}

struct FrameDecoder<'a, 'd> {
    input: &'d FrameDecodeInput<'a>,
    dec: RangeDecoder<'a>,
    step: f64,
    ctx: Contexts,
    mv_pred: [(i32, i32); 2],
    recon: Frame,
    stats: FrameDecodeStats,
}

fn plane_rect(r: Rect, p: usize) -> Rect {
    if p == 0 {
        r
    } else {
        Rect::new(r.x / 2, r.y / 2, r.w / 2, r.h / 2)
    }
}

/// Decodes one frame payload into a padded reconstruction.
pub fn decode_frame(input: &FrameDecodeInput) -> Result<(Frame, FrameDecodeStats)> {
    let (pw, ph) = input.padded;
    let mut d = FrameDecoder {
        input,
        dec: RangeDecoder::new(input.payload, input.base)?,
        step: qp_to_step(input.qp),
        ctx: Contexts::default(),
        mv_pred: [(0, 0); 2],
        recon: Frame::filled(input.frame_index, pw, ph, [0, 0, 0])?,
        stats: FrameDecodeStats::default(),
    };
    for sy in (0..ph).step_by(SB_SIZE) {
        for sx in (0..pw).step_by(SB_SIZE) {
            let full = sx + SB_SIZE <= input.width && sy + SB_SIZE <= input.height;
            d.node(Rect::new(sx, sy, SB_SIZE, SB_SIZE), full)?;
        }
    }
    d.dec.check_overrun()?;
    Ok((d.recon, d.stats))
}

impl FrameDecoder<'_, '_> {
    fn node(&mut self, rect: Rect, sb_full: bool) -> Result<()> {
        let (pw, ph) = self.input.padded;
        let size = rect.w;
        if rect.x >= pw || rect.y >= ph {
            return Ok(());
        }
        if rect.x + size > pw || rect.y + size > ph {
            for q in rect.quadrants() {
                self.node(q, sb_full)?;
            }
            return Ok(());
        }
        if let Some(trefs) = &self.input.texture {
            if sb_full && size >= 32 && self.dec.bit(&mut self.ctx.texture[texture_ctx(size)]) {
                let recon = reconstruct_texture_block(trefs, self.input.width, self.input.height, rect);
                for (p, block) in recon.iter().enumerate() {
                    write_block(self.recon.plane_mut(p), plane_rect(rect, p), block);
                }
                self.stats.texture_pixels += rect.area();
                self.stats.texture_leaves += 1;
                return Ok(());
            }
        }
        if size > MIN_LEAF && self.dec.bit(&mut self.ctx.split[split_ctx(size)]) {
            for q in rect.quadrants() {
                self.node(q, sb_full)?;
            }
            return Ok(());
        }
        self.leaf(rect)
    }

    fn leaf(&mut self, rect: Rect) -> Result<()> {
        let n_refs = self.input.refs.len();
        let mode = read_mode(&mut self.dec, &mut self.ctx, n_refs, planar_available(rect), &self.mv_pred)?;
        if let LeafMode::Inter { slot, mv } = mode {
            self.mv_pred[slot] = mv;
        }
        for p in 0..3 {
            let pr = plane_rect(rect, p);
            let pred = match mode {
                LeafMode::IntraDc => intra_dc(self.recon.plane(p), pr),
                LeafMode::IntraPlanar => intra_planar(self.recon.plane(p), pr),
                LeafMode::Inter { slot, mv } => {
                    inter_pred(self.input.refs[slot].plane(p), pr, mv, if p == 0 { 2 } else { 4 })
                }
            };
            let n = tile_size(pr.w);
            let mut out = vec![0u8; pr.w * pr.h];
            for ty in 0..pr.h / n {
                for tx in 0..pr.w / n {
                    let (levels, _) = read_coeffs(&mut self.dec, &mut self.ctx, n, usize::from(p > 0))?;
                    let pt = tile_of(&pred, pr.w, tx, ty, n);
                    put_tile(&mut out, pr.w, tx, ty, n, &reconstruct_tile(&pt, &levels, n, self.step));
                }
            }
            write_block(self.recon.plane_mut(p), pr, &out);
        }
        self.dec.check_overrun()
    }
}
