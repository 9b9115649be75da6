//! Frame encoder: superblock partition search and payload writing.

use serde::{Deserialize, Serialize};

use super::dct;
use super::entropy::{bit_cost, BitSink, CostEstimator, RangeEncoder};
use super::predict::{
    inter_pred, intra_dc, intra_planar, planar_available, put_tile, read_block, reconstruct_tile, tile_of,
    tile_size, write_block,
};
use super::syntax::{split_ctx, texture_ctx, write_coeffs, write_mode, Contexts, LeafMode};
use super::texture::{is_texture_block, touches_texture, RegionCheck, TextureRef};
use super::warp::reconstruct_texture_block;
use super::{lambda, qp_to_step, SB_SIZE};
use crate::frame::{Frame, Plane, Rect, TextureMask};
use crate::motion::AffineModel;

/// Integer full-search range in luma pixels.
pub const SEARCH_RANGE: i32 = 24;
const SPAN: usize = (2 * SEARCH_RANGE + 1) as usize;
const NDISP: usize = SPAN * SPAN;
const MARGIN: usize = SEARCH_RANGE as usize + 8;
const MIN_LEAF: usize = 8;

/// Texture-mode inputs of one frame; present only when every required model was found.
pub struct TextureSetup<'a> {
    pub cur_mask: &'a TextureMask,
    /// Reference reconstruction (padded), its mask and the model into it.
    pub refs: Vec<(&'a Frame, &'a TextureMask, AffineModel)>,
    pub check: RegionCheck,
}

pub struct FrameInput<'a> {
    /// Padded source.
    pub source: &'a Frame,
    pub width: usize,
    pub height: usize,
    /// Padded reconstructions of the conventional references (at most two).
    pub refs: Vec<&'a Frame>,
    pub texture: Option<TextureSetup<'a>>,
    pub qp: u8,
    pub trace: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCodingStats {
    pub texture_pixels: usize,
    pub texture_leaves: usize,
    pub conventional_leaves: usize,
    /// Coefficient bits spent inside texture leaves.
    pub texture_coeff_bits: f64,
    pub coeff_bits: f64,
}

/// One evaluated option of a conventional node.
#[derive(Clone, Debug, PartialEq)]
pub struct RdOption {
    pub label: String,
    pub distortion: f64,
    pub rate: f64,
    /// Reconstruction of the node area, Y then U then V, each row-major.
    pub recon: [Vec<u8>; 3],
}

/// Rate-distortion record of one conventional node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTrace {
    pub rect: Rect,
    pub lambda: f64,
    pub options: Vec<RdOption>,
    pub chosen: usize,
}

pub struct FrameOutput {
    pub recon: Frame,
    pub payload: Vec<u8>,
    pub stats: FrameCodingStats,
    pub trace: Vec<NodeTrace>,
}

#[derive(Clone, Debug)]
struct Leaf {
    mode: LeafMode,
    /// Tiles per plane in raster order.
    levels: [Vec<Vec<i32>>; 3],
}

#[derive(Clone, Debug)]
enum Node {
    Outside,
    Implicit(Vec<Node>),
    Texture,
    Split(Vec<Node>),
    Leaf(Box<Leaf>),
}

struct Candidate {
    leaf: Leaf,
    recon: [Vec<u8>; 3],
    distortion: f64,
    rate: f64,
}

/// Luma plane with an edge-replicated margin for unclamped block reads.
struct ExtPlane {
    stride: usize,
    data: Vec<u8>,
}

impl ExtPlane {
    fn new(p: &Plane) -> Self {
        let stride = p.width() + 2 * MARGIN;
        let rows = p.height() + 2 * MARGIN;
        let mut data = Vec::with_capacity(stride * rows);
        for y in 0..rows {
            let sy = y as i64 - MARGIN as i64;
            for x in 0..stride {
                data.push(p.get_clamped(x as i64 - MARGIN as i64, sy));
            }
        }
        Self { stride, data }
    }

    fn row(&self, x: i64, y: i64, len: usize) -> &[u8] {
        let start = (y + MARGIN as i64) as usize * self.stride + (x + MARGIN as i64) as usize;
        &self.data[start..start + len]
    }
}

/// Per-superblock search state.
struct SbState {
    x: usize,
    y: usize,
    full: bool,
    ctx: Contexts,
    mv_pred: [(i32, i32); 2],
    /// Per reference: SAD of every 8x8 block of the superblock at every integer displacement.
    sad: Vec<Vec<u32>>,
}

pub struct FrameEncoder<'a> {
    input: FrameInput<'a>,
    pw: usize,
    ph: usize,
    step: f64,
    lambda: f64,
    recon: Frame,
    ext: Vec<ExtPlane>,
    ctx: Contexts,
    mv_pred: [(i32, i32); 2],
    stats: FrameCodingStats,
    trace: Vec<NodeTrace>,
}

fn sse(a: &[u8], b: &[u8]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn sad(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| u32::from(x.abs_diff(y))).sum()
}

fn chroma_rect(r: Rect) -> Rect {
    Rect::new(r.x / 2, r.y / 2, r.w / 2, r.h / 2)
}

fn plane_rect(r: Rect, p: usize) -> Rect {
    if p == 0 {
        r
    } else {
        chroma_rect(r)
    }
}

/// Writes symbols through to the encoder while summing their cost.
struct Tracked<'e> {
    enc: &'e mut RangeEncoder,
    bits: f64,
}

impl BitSink for Tracked<'_> {
    fn bit(&mut self, p: &mut u16, bit: bool) {
        self.bits += bit_cost(*p, bit);
        self.enc.bit(p, bit);
    }

    fn bypass(&mut self, bit: bool) {
        self.bits += 1.0;
        self.enc.bypass(bit);
    }
}

impl<'a> FrameEncoder<'a> {
    pub fn new(input: FrameInput<'a>) -> Self {
        let (pw, ph) = (input.source.width(), input.source.height());
        let step = qp_to_step(input.qp);
        let ext = input.refs.iter().map(|r| ExtPlane::new(r.luma())).collect();
        let recon = Frame::filled(input.source.index(), pw, ph, [0, 0, 0]).expect("padded frame is valid");
        Self {
            pw,
            ph,
            step,
            lambda: lambda(input.qp),
            recon,
            ext,
            ctx: Contexts::default(),
            mv_pred: [(0, 0); 2],
            stats: FrameCodingStats::default(),
            trace: Vec::new(),
            input,
        }
    }

    pub fn encode(mut self) -> FrameOutput {
        let mut enc = RangeEncoder::new();
        for sy in (0..self.ph).step_by(SB_SIZE) {
            for sx in (0..self.pw).step_by(SB_SIZE) {
                let mut sb = SbState {
                    x: sx,
                    y: sy,
                    full: sx + SB_SIZE <= self.input.width && sy + SB_SIZE <= self.input.height,
                    ctx: self.ctx.clone(),
                    mv_pred: self.mv_pred,
                    sad: (0..self.ext.len()).map(|i| self.sad_maps(i, sx, sy)).collect(),
                };
                let rect = Rect::new(sx, sy, SB_SIZE, SB_SIZE);
                let (node, _) = self.search(&mut sb, rect);
                self.write_node(&mut enc, &node, rect, sb.full);
            }
        }
        FrameOutput {
            recon: self.recon,
            payload: enc.finish(),
            stats: self.stats,
            trace: self.trace,
        }
    }

    fn sad_maps(&self, slot: usize, sx: usize, sy: usize) -> Vec<u32> {
        let ext = &self.ext[slot];
        let src = self.input.source.luma();
        let w = SB_SIZE.min(self.pw - sx);
        let h = SB_SIZE.min(self.ph - sy);
        let bw = SB_SIZE / 8;
        let mut maps = vec![0u32; bw * bw * NDISP];
        let mut diff = [0u16; SB_SIZE];
        for (di, (dy, dx)) in (-SEARCH_RANGE..=SEARCH_RANGE)
            .flat_map(|dy| (-SEARCH_RANGE..=SEARCH_RANGE).map(move |dx| (dy, dx)))
            .enumerate()
        {
            for r in 0..h {
                let srow = &src.row(sy + r)[sx..sx + w];
                let rrow = ext.row(sx as i64 + i64::from(dx), (sy + r) as i64 + i64::from(dy), w);
                for ((d, &a), &b) in diff.iter_mut().zip(srow).zip(rrow) {
                    *d = u16::from(a.abs_diff(b));
                }
                let base = (r / 8) * bw;
                for b in 0..w / 8 {
                    let s: u16 = diff[b * 8..b * 8 + 8].iter().sum();
                    maps[(base + b) * NDISP + di] += u32::from(s);
                }
            }
        }
        maps
    }

    fn best_integer_mv(&self, sb: &SbState, slot: usize, rect: Rect) -> (i32, i32) {
        let bw = SB_SIZE / 8;
        let (bx0, by0) = ((rect.x - sb.x) / 8, (rect.y - sb.y) / 8);
        let blocks: Vec<usize> = (by0..by0 + rect.h / 8)
            .flat_map(|by| (bx0..bx0 + rect.w / 8).map(move |bx| by * bw + bx))
            .collect();
        let maps = &sb.sad[slot];
        let mut best = (u32::MAX, u32::MAX, 0usize);
        for di in 0..NDISP {
            let s: u32 = blocks.iter().map(|&b| maps[b * NDISP + di]).sum();
            let dy = (di / SPAN) as i32 - SEARCH_RANGE;
            let dx = (di % SPAN) as i32 - SEARCH_RANGE;
            let len = dx.unsigned_abs() + dy.unsigned_abs();
            if (s, len) < (best.0, best.1) {
                best = (s, len, di);
            }
        }
        let di = best.2;
        ((di % SPAN) as i32 - SEARCH_RANGE, (di / SPAN) as i32 - SEARCH_RANGE)
    }

    /// Integer search on shared SAD maps, then a half-pel refinement.
    fn motion_search(&self, sb: &SbState, slot: usize, rect: Rect) -> (i32, i32) {
        let (ix, iy) = self.best_integer_mv(sb, slot, rect);
        let src = read_block(self.input.source.luma(), rect);
        let reference = self.input.refs[slot].luma();
        let mut best_mv = (2 * ix, 2 * iy);
        let mut best = sad(&src, &inter_pred(reference, rect, best_mv, 2));
        let center = best_mv;
        for (ox, oy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let mv = (center.0 + ox, center.1 + oy);
            let s = sad(&src, &inter_pred(reference, rect, mv, 2));
            if s < best {
                best = s;
                best_mv = mv;
            }
        }
        best_mv
    }

    fn predictions(&self, rect: Rect, mode: LeafMode) -> [Vec<u8>; 3] {
        std::array::from_fn(|p| {
            let pr = plane_rect(rect, p);
            match mode {
                LeafMode::IntraDc => intra_dc(self.recon.plane(p), pr),
                LeafMode::IntraPlanar => intra_planar(self.recon.plane(p), pr),
                LeafMode::Inter { slot, mv } => {
                    let reference = self.input.refs[slot].plane(p);
                    if p == 0 {
                        inter_pred(reference, pr, mv, 2)
                    } else {
                        inter_pred(reference, pr, mv, 4)
                    }
                }
            }
        })
    }

    fn evaluate(&self, sb: &mut SbState, rect: Rect, mode: LeafMode) -> Candidate {
        let preds = self.predictions(rect, mode);
        let mut est = CostEstimator::default();
        write_mode(
            &mut est,
            &mut sb.ctx,
            mode,
            self.input.refs.len(),
            planar_available(rect),
            &sb.mv_pred,
        );
        let mut levels: [Vec<Vec<i32>>; 3] = Default::default();
        let mut recon: [Vec<u8>; 3] = Default::default();
        let mut distortion = 0.0;
        for p in 0..3 {
            let pr = plane_rect(rect, p);
            let src = read_block(self.input.source.plane(p), pr);
            let n = tile_size(pr.w);
            let mut out = vec![0u8; pr.w * pr.h];
            for ty in 0..pr.h / n {
                for tx in 0..pr.w / n {
                    let st = tile_of(&src, pr.w, tx, ty, n);
                    let pt = tile_of(&preds[p], pr.w, tx, ty, n);
                    let residual: Vec<f64> = st.iter().zip(&pt).map(|(&s, &q)| f64::from(s) - f64::from(q)).collect();
                    let lv = dct::quantize(&dct::forward(&residual, n), self.step);
                    write_coeffs(&mut est, &mut sb.ctx, &lv, n, usize::from(p > 0));
                    put_tile(&mut out, pr.w, tx, ty, n, &reconstruct_tile(&pt, &lv, n, self.step));
                    levels[p].push(lv);
                }
            }
            distortion += sse(&src, &out);
            recon[p] = out;
        }
        Candidate {
            leaf: Leaf { mode, levels },
            recon,
            distortion,
            rate: est.bits,
        }
    }

    fn texture_refs(&self) -> Vec<TextureRef<'a>> {
        self.input
            .texture
            .as_ref()
            .map(|t| {
                t.refs
                    .iter()
                    .map(|&(_, mask, model)| TextureRef {
                        mask,
                        model: Some(model),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn store(&mut self, rect: Rect, recon: &[Vec<u8>; 3]) {
        for (p, block) in recon.iter().enumerate() {
            write_block(self.recon.plane_mut(p), plane_rect(rect, p), block);
        }
    }

    fn current(&self, rect: Rect) -> [Vec<u8>; 3] {
        std::array::from_fn(|p| read_block(self.recon.plane(p), plane_rect(rect, p)))
    }

    fn source_sse(&self, rect: Rect, recon: &[Vec<u8>; 3]) -> f64 {
        (0..3)
            .map(|p| sse(&read_block(self.input.source.plane(p), plane_rect(rect, p)), &recon[p]))
            .sum()
    }

    /// Returns the chosen subtree and its (distortion, rate). The chosen
    /// reconstruction is left in `self.recon`.
    fn search(&mut self, sb: &mut SbState, rect: Rect) -> (Node, (f64, f64)) {
        let size = rect.w;
        if rect.x >= self.pw || rect.y >= self.ph {
            return (Node::Outside, (0.0, 0.0));
        }
        if rect.x + size > self.pw || rect.y + size > self.ph {
            let mut children = Vec::with_capacity(4);
            let (mut d, mut r) = (0.0, 0.0);
            for q in rect.quadrants() {
                let (n, (cd, cr)) = self.search(sb, q);
                d += cd;
                r += cr;
                children.push(n);
            }
            return (Node::Implicit(children), (d, r));
        }
        let eligible = self.input.texture.is_some() && sb.full && size >= 32;
        let mut flag_rate = 0.0;
        if eligible {
            let tctx = texture_ctx(size);
            let t = self.input.texture.as_ref().expect("eligible implies texture");
            if is_texture_block(rect, t.cur_mask, &self.texture_refs(), t.check) {
                let refs: Vec<(&Frame, AffineModel)> = t.refs.iter().map(|&(f, _, m)| (f, m)).collect();
                let recon = reconstruct_texture_block(&refs, self.input.width, self.input.height, rect);
                let d = self.source_sse(rect, &recon);
                self.store(rect, &recon);
                return (Node::Texture, (d, bit_cost(sb.ctx.texture[tctx], true)));
            }
            flag_rate += bit_cost(sb.ctx.texture[tctx], false);
            if size > 32 && touches_texture(rect, t.cur_mask) {
                let split_rate = flag_rate + bit_cost(sb.ctx.split[split_ctx(size)], true);
                let (children, d, r) = self.search_children(sb, rect);
                return (Node::Split(children), (d, r + split_rate));
            }
        }

        let can_split = size > MIN_LEAF;
        let leaf_flags = flag_rate + if can_split { bit_cost(sb.ctx.split[split_ctx(size)], false) } else { 0.0 };
        let mut cands = vec![self.evaluate(sb, rect, LeafMode::IntraDc)];
        if planar_available(rect) {
            cands.push(self.evaluate(sb, rect, LeafMode::IntraPlanar));
        }
        for slot in 0..self.input.refs.len() {
            let mv = self.motion_search(sb, slot, rect);
            cands.push(self.evaluate(sb, rect, LeafMode::Inter { slot, mv }));
        }
        let lam = self.lambda;
        let cost = move |d: f64, r: f64| d + lam * r;
        let mut best = 0;
        for (i, c) in cands.iter().enumerate() {
            if cost(c.distortion, c.rate + leaf_flags) < cost(cands[best].distortion, cands[best].rate + leaf_flags) {
                best = i;
            }
        }
        let mut options: Vec<RdOption> = Vec::new();
        if self.input.trace {
            options = cands
                .iter()
                .map(|c| RdOption {
                    label: format!("{:?}", c.leaf.mode),
                    distortion: c.distortion,
                    rate: c.rate + leaf_flags,
                    recon: c.recon.clone(),
                })
                .collect();
        }
        let leaf = cands.swap_remove(best);
        let leaf_dr = (leaf.distortion, leaf.rate + leaf_flags);

        let mut chosen = best;
        let result = if can_split {
            let split_rate = flag_rate + bit_cost(sb.ctx.split[split_ctx(size)], true);
            let (children, sd, sr) = self.search_children(sb, rect);
            let split_dr = (sd, sr + split_rate);
            if self.input.trace {
                options.push(RdOption {
                    label: "Split".into(),
                    distortion: split_dr.0,
                    rate: split_dr.1,
                    recon: self.current(rect),
                });
            }
            if cost(split_dr.0, split_dr.1) < cost(leaf_dr.0, leaf_dr.1) {
                chosen = options.len().saturating_sub(1);
                (Node::Split(children), split_dr)
            } else {
                self.store(rect, &leaf.recon);
                (Node::Leaf(Box::new(leaf.leaf)), leaf_dr)
            }
        } else {
            self.store(rect, &leaf.recon);
            (Node::Leaf(Box::new(leaf.leaf)), leaf_dr)
        };
        if self.input.trace {
            self.trace.push(NodeTrace {
                rect,
                lambda: self.lambda,
                options,
                chosen,
            });
        }
        result
    }

    fn search_children(&mut self, sb: &mut SbState, rect: Rect) -> (Vec<Node>, f64, f64) {
        let mut children = Vec::with_capacity(4);
        let (mut d, mut r) = (0.0, 0.0);
        for q in rect.quadrants() {
            let (n, (cd, cr)) = self.search(sb, q);
            d += cd;
            r += cr;
            children.push(n);
        }
        (children, d, r)
    }

    fn write_node(&mut self, enc: &mut RangeEncoder, node: &Node, rect: Rect, sb_full: bool) {
        let size = rect.w;
        match node {
            Node::Outside => {}
            Node::Implicit(children) => {
                for (c, q) in children.iter().zip(rect.quadrants()) {
                    self.write_node(enc, c, q, sb_full);
                }
            }
            _ => {
                if self.input.texture.is_some() && sb_full && size >= 32 {
                    enc.bit(&mut self.ctx.texture[texture_ctx(size)], matches!(node, Node::Texture));
                }
                match node {
                    Node::Texture => {
                        self.stats.texture_pixels += rect.area();
                        self.stats.texture_leaves += 1;
                    }
                    Node::Split(children) => {
                        enc.bit(&mut self.ctx.split[split_ctx(size)], true);
                        for (c, q) in children.iter().zip(rect.quadrants()) {
                            self.write_node(enc, c, q, sb_full);
                        }
                    }
                    Node::Leaf(leaf) => {
                        if size > MIN_LEAF {
                            enc.bit(&mut self.ctx.split[split_ctx(size)], false);
                        }
                        write_mode(
                            enc,
                            &mut self.ctx,
                            leaf.mode,
                            self.input.refs.len(),
                            planar_available(rect),
                            &self.mv_pred,
                        );
                        if let LeafMode::Inter { slot, mv } = leaf.mode {
                            self.mv_pred[slot] = mv;
                        }
                        let mut sink = Tracked { enc, bits: 0.0 };
                        for p in 0..3 {
                            let n = tile_size(plane_rect(rect, p).w);
                            for lv in &leaf.levels[p] {
                                write_coeffs(&mut sink, &mut self.ctx, lv, n, usize::from(p > 0));
                            }
                        }
                        self.stats.coeff_bits += sink.bits;
                        self.stats.conventional_leaves += 1;
                    }
                    Node::Outside | Node::Implicit(_) => unreachable!(),
                }
            }
        }
    }
}
