//! Hybrid encoder and decoder with the texture mode.
//!
//! Frames are coded in GF-group order. Texture-enabled frames carry one affine
//! model per texture reference; blocks that pass the two-step texture check
//! are rebuilt by warping those references and carry no residual. Everything
//! else goes through the conventional intra/inter + DCT path.

pub mod bitstream;
pub mod dct;
pub mod decoder;
pub mod encoder;
pub mod entropy;
pub mod plan;
pub mod predict;
pub mod syntax;
pub mod texture;
pub mod warp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bitstream::{Bitstream, FrameRecord};
pub use decoder::FrameDecodeStats;
pub use encoder::{FrameCodingStats, NodeTrace, RdOption};
pub use plan::{coding_sequence, plan_gf_groups, CodingConfig, FrameKind, GfGroupPlan, PlanEntry, GF_INTERVAL};
pub use texture::{is_texture_block, RegionCheck, TextureRef};
pub use warp::{reconstruct_texture_block, warp_block};

use crate::error::{Error, Result};
use crate::frame::{Frame, TextureMask};
use crate::motion::{estimate_texture_motion, AffineModel, ModelRecord, MotionParams};
use decoder::{decode_frame, FrameDecodeInput};
use encoder::{FrameEncoder, FrameInput, TextureSetup};

/// Superblock side.
pub const SB_SIZE: usize = 64;
/// Header charge per transmitted texture model: six parameters of 12 bits.
pub const MODEL_HEADER_BITS: u64 = 6 * 12;

/// Quantizer step: 2^(qp/8 + 1).
pub fn qp_to_step(qp: u8) -> f64 {
    2f64.powf(f64::from(qp) / 8.0 + 1.0)
}

/// Lagrange multiplier: 0.85 * step^2.
pub fn lambda(qp: u8) -> f64 {
    0.85 * qp_to_step(qp).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodeParams {
    pub config: CodingConfig,
    pub qp: u8,
    /// GF interval of tex-all; the hierarchical configurations always use 8.
    pub gf_interval: usize,
    pub motion: MotionParams,
    pub check: RegionCheck,
    /// Record every rate-distortion decision.
    #[serde(skip)]
    pub trace: bool,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            config: CodingConfig::Baseline,
            qp: 32,
            gf_interval: GF_INTERVAL,
            motion: MotionParams::default(),
            check: RegionCheck::Corners,
            trace: false,
        }
    }
}

/// Encoder-side outcome of one frame.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub entry: PlanEntry,
    pub texture_active: bool,
    /// Why a texture-enabled frame fell back to conventional coding.
    pub model_failure: Option<String>,
    pub models: Vec<ModelRecord>,
    pub payload_bytes: usize,
    /// Payload bits plus the model header charge.
    pub bits: u64,
    pub stats: FrameCodingStats,
    pub trace: Vec<NodeTrace>,
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub config: CodingConfig,
    pub qp: u8,
    pub width: usize,
    pub height: usize,
    pub bytes: Vec<u8>,
    /// Encoder reconstructions in display order.
    pub recon: Vec<Frame>,
    /// Coding order.
    pub frames: Vec<FrameResult>,
}

impl Encoded {
    pub fn total_bits(&self) -> u64 {
        self.frames.iter().map(|f| f.bits).sum()
    }

    pub fn texture_coeff_bits(&self) -> f64 {
        self.frames.iter().map(|f| f.stats.texture_coeff_bits).sum()
    }

    pub fn model_records(&self) -> Vec<ModelRecord> {
        self.frames.iter().flat_map(|f| f.models.iter().copied()).collect()
    }
}

enum ModelOutcome {
    Off,
    Active(Vec<ModelRecord>),
    Failed(String),
}

fn padded_dims(w: usize, h: usize) -> (usize, usize) {
    (w.next_multiple_of(8), h.next_multiple_of(8))
}

fn check_inputs(frames: &[Frame], masks: Option<&[TextureMask]>) -> Result<(usize, usize)> {
    if frames.len() < 2 {
        return Err(Error::Input(format!("need at least 2 frames, got {}", frames.len())));
    }
    let (w, h) = (frames[0].width(), frames[0].height());
    if w > usize::from(u16::MAX) || h > usize::from(u16::MAX) {
        return Err(Error::Dimension(format!("{w}x{h} exceeds the container limit")));
    }
    if frames.iter().any(|f| f.width() != w || f.height() != h) {
        return Err(Error::Dimension("frames differ in size".into()));
    }
    if let Some(m) = masks {
        if m.len() != frames.len() {
            return Err(Error::Shape(format!("{} masks for {} frames", m.len(), frames.len())));
        }
        if m.iter().any(|m| m.grid() != frames[0].grid()) {
            return Err(Error::Shape("mask grid does not match the frames".into()));
        }
    }
    Ok((w, h))
}

/// Encodes `frames` (display order). `masks` are the refined texture masks;
/// the baseline configuration ignores them.
pub fn encode_with_masks(frames: &[Frame], masks: Option<&[TextureMask]>, params: &EncodeParams) -> Result<Encoded> {
    let (w, h) = check_inputs(frames, masks)?;
    let groups = plan_gf_groups(frames.len(), params.config, params.gf_interval)?;
    let seq = coding_sequence(&groups);
    let (pw, ph) = padded_dims(w, h);
    let padded: Vec<Frame> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| f.padded_to(pw, ph).with_index(i))
        .collect();
    let masks = masks.filter(|_| params.config.uses_texture());

    let outcomes: Vec<ModelOutcome> = seq
        .par_iter()
        .map(|e| {
            let Some(masks) = masks else { return ModelOutcome::Off };
            let d = e.display_index;
            if !e.texture_enabled || !masks[d].has_texture() {
                return ModelOutcome::Off;
            }
            let mut records = Vec::new();
            for &r in &e.texture_refs {
                match estimate_texture_motion(&frames[d], &frames[r], &masks[d], &masks[r], &params.motion) {
                    Ok(est) => records.push(ModelRecord {
                        frame: d,
                        reference: r,
                        model: est.model.quantized(),
                        inliers: est.inliers,
                    }),
                    Err(err) => return ModelOutcome::Failed(format!("ref {r}: {err}")),
                }
            }
            ModelOutcome::Active(records)
        })
        .collect();

    let mut recon: Vec<Option<Frame>> = vec![None; frames.len()];
    let mut records = Vec::with_capacity(seq.len());
    let mut results = Vec::with_capacity(seq.len());
    for (e, outcome) in seq.iter().zip(outcomes) {
        let d = e.display_index;
        let refs: Vec<&Frame> = e
            .refs
            .iter()
            .map(|&r| recon[r].as_ref().expect("plan codes references first"))
            .collect();
        let (models, failure) = match outcome {
            ModelOutcome::Off => (Vec::new(), None),
            ModelOutcome::Active(m) => (m, None),
            ModelOutcome::Failed(why) => (Vec::new(), Some(why)),
        };
        let texture = match (masks, models.is_empty()) {
            (Some(masks), false) => Some(TextureSetup {
                cur_mask: &masks[d],
                refs: models
                    .iter()
                    .map(|m| {
                        let f = recon[m.reference].as_ref().expect("plan codes references first");
                        (f, &masks[m.reference], m.model)
                    })
                    .collect(),
                check: params.check,
            }),
            _ => None,
        };
        let out = FrameEncoder::new(FrameInput {
            source: &padded[d],
            width: w,
            height: h,
            refs,
            texture,
            qp: params.qp,
            trace: params.trace,
        })
        .encode();
        let crc = out.recon.cropped(w, h).crc32();
        records.push(FrameRecord {
            display_index: d as u32,
            kind: e.kind,
            qp: params.qp,
            texture_active: !models.is_empty(),
            refs: e.refs.iter().map(|&r| r as u32).collect(),
            models: models.iter().map(|m| (m.reference as u32, m.model)).collect(),
            payload_offset: 0,
            payload: out.payload,
            crc,
        });
        let payload_bytes = records.last().map_or(0, |r: &FrameRecord| r.payload.len());
        results.push(FrameResult {
            entry: e.clone(),
            texture_active: !models.is_empty(),
            model_failure: failure,
            bits: payload_bytes as u64 * 8 + MODEL_HEADER_BITS * models.len() as u64,
            models,
            payload_bytes,
            stats: out.stats,
            trace: out.trace,
        });
        recon[d] = Some(out.recon);
    }
    let bytes = Bitstream {
        width: w as u16,
        height: h as u16,
        frames: records,
    }
    .to_bytes();
    Ok(Encoded {
        config: params.config,
        qp: params.qp,
        width: w,
        height: h,
        bytes,
        recon: recon
            .into_iter()
            .map(|f| f.expect("every frame is coded").cropped(w, h))
            .collect(),
        frames: results,
    })
}

#[derive(Clone, Debug)]
pub struct Decoded {
    /// Display order.
    pub frames: Vec<Frame>,
    /// Per display index: the reconstruction matches the transmitted CRC32.
    pub crc_ok: Vec<bool>,
    pub stats: Vec<FrameDecodeStats>,
}

impl Decoded {
    pub fn all_crc_ok(&self) -> bool {
        self.crc_ok.iter().all(|&ok| ok)
    }
}

/// Decodes a TEXC1 stream. Any malformed frame fails the whole call.
pub fn decode_sequence(bytes: &[u8]) -> Result<Decoded> {
    let stream = Bitstream::parse(bytes)?;
    let (w, h) = (usize::from(stream.width), usize::from(stream.height));
    let (pw, ph) = padded_dims(w, h);
    let n = stream.frames.len();
    let mut recon: Vec<Option<Frame>> = vec![None; n];
    let mut crc_ok = vec![false; n];
    let mut stats = vec![FrameDecodeStats::default(); n];
    for rec in &stream.frames {
        let bad = |reason: &str| Error::Parse {
            offset: rec.payload_offset,
            reason: reason.into(),
        };
        let d = rec.display_index as usize;
        if d >= n || recon[d].is_some() {
            return Err(bad("display index out of range or repeated"));
        }
        let fetch = |r: u32| {
            recon
                .get(r as usize)
                .and_then(Option::as_ref)
                .ok_or_else(|| bad("reference frame not decoded yet"))
        };
        let refs = rec.refs.iter().map(|&r| fetch(r)).collect::<Result<Vec<_>>>()?;
        let texture = if rec.texture_active {
            let t = rec
                .models
                .iter()
                .map(|&(r, m)| Ok((fetch(r)?, m)))
                .collect::<Result<Vec<(&Frame, AffineModel)>>>()?;
            Some(t)
        } else {
            None
        };
        let (frame, st) = decode_frame(&FrameDecodeInput {
            payload: &rec.payload,
            base: rec.payload_offset,
            frame_index: d,
            padded: (pw, ph),
            width: w,
            height: h,
            qp: rec.qp,
            refs,
            texture,
        })?;
        crc_ok[d] = frame.cropped(w, h).crc32() == rec.crc;
        stats[d] = st;
        recon[d] = Some(frame);
    }
    let frames = recon
        .into_iter()
        .map(|f| {
            f.map(|f| f.cropped(w, h)).ok_or_else(|| Error::Parse {
                offset: bytes.len(),
                reason: "stream ends before every frame was coded".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decoded { frames, crc_ok, stats })
}
