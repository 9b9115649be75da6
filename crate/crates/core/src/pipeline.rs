//! End-to-end flow: classify blocks, refine masks, encode, measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzer::{segment_frame, CnnWeights, DEFAULT_THRESHOLD};
use crate::codec::{encode_with_masks, EncodeParams, Encoded};
use crate::error::{Error, Result};
use crate::frame::{SourceClip, TextureMask};
use crate::metrics::{self, EncodeReport, FlickerScore, FrameStats, Psnr};
use crate::refine::{refine_sequence, RefineConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisParams {
    pub threshold: f64,
    pub refine: RefineConfig,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            refine: RefineConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    /// Per-frame classifier output.
    pub raw: Vec<TextureMask>,
    /// After clustering, temporal and spatial correction.
    pub refined: Vec<TextureMask>,
}

pub fn analyze_clip(clip: &SourceClip, weights: &CnnWeights, params: &AnalysisParams) -> Result<Analysis> {
    let raw = clip
        .rgb
        .par_iter()
        .enumerate()
        .map(|(i, rgb)| segment_frame(rgb, weights, params.threshold, i))
        .collect::<Result<Vec<_>>>()?;
    let refined = refine_sequence(&clip.frames, &raw, &params.refine)?.into_masks();
    Ok(Analysis { raw, refined })
}

/// Full encode. Texture configurations need classifier weights; the
/// baseline never runs the classifier.
pub fn encode_sequence(
    clip: &SourceClip,
    params: &EncodeParams,
    weights: Option<&CnnWeights>,
    analysis: &AnalysisParams,
) -> Result<(Encoded, Option<Analysis>)> {
    if !params.config.uses_texture() {
        return Ok((encode_with_masks(&clip.frames, None, params)?, None));
    }
    let weights = weights.ok_or_else(|| Error::Input(format!("{} needs classifier weights", params.config)))?;
    let a = analyze_clip(clip, weights, analysis)?;
    let enc = encode_with_masks(&clip.frames, Some(&a.refined), params)?;
    Ok((enc, Some(a)))
}

/// Measures an encode against its source. `masks` select the non-texture
/// region for PSNR and the texture region for flicker; without them the
/// non-texture PSNR equals the full-frame value.
pub fn build_report(
    video: &str,
    clip: &SourceClip,
    masks: Option<&[TextureMask]>,
    enc: &Encoded,
) -> Result<EncodeReport> {
    let n = clip.len();
    if enc.recon.len() != n {
        return Err(Error::Shape(format!("{} reconstructions for {n} frames", enc.recon.len())));
    }
    if masks.is_some_and(|m| m.len() != n) {
        return Err(Error::Shape("mask count differs from frame count".into()));
    }
    let grid = clip.frames[0].grid();
    let grid_pixels = grid.len() * crate::frame::BLOCK_SIZE * crate::frame::BLOCK_SIZE;

    let mut by_display: Vec<Option<FrameStats>> = vec![None; n];
    let (mut sse_full, mut n_full, mut sse_nt, mut n_nt) = (0f64, 0usize, 0f64, 0usize);
    let mut ssim_sum = 0.0;
    for f in &enc.frames {
        let d = f.entry.display_index;
        let (src, rec) = (&clip.frames[d], &enc.recon[d]);
        let mask = masks.map(|m| &m[d]);
        let (s, c) = metrics::luma_sse(src, rec, None)?;
        let (snt, cnt) = match mask {
            Some(m) => metrics::luma_sse(src, rec, Some(m))?,
            None => (s, c),
        };
        sse_full += s;
        n_full += c;
        sse_nt += snt;
        n_nt += cnt;
        let psnr_full = Psnr::from_mse(s / c as f64);
        // a frame that is texture everywhere has no non-texture region
        let psnr_nontexture = if cnt == 0 { psnr_full } else { Psnr::from_mse(snt / cnt as f64) };
        let ssim_full = metrics::ssim(src, rec)?;
        ssim_sum += ssim_full;
        let coverage = if grid_pixels == 0 {
            0.0
        } else {
            f.stats.texture_pixels as f64 / grid_pixels as f64
        };
        by_display[d] = Some(FrameStats {
            display_index: d,
            coding_order: f.entry.coding_order,
            kind: f.entry.kind,
            texture_enabled: f.entry.texture_enabled,
            texture_active: f.texture_active,
            model_failure: f.model_failure.clone(),
            bits: f.bits,
            payload_bytes: f.payload_bytes,
            psnr_full,
            psnr_nontexture,
            ssim_full,
            texture_coverage: coverage,
            texture_leaves: f.stats.texture_leaves,
            conventional_leaves: f.stats.conventional_leaves,
            texture_coeff_bits: f.stats.texture_coeff_bits,
        });
    }
    let frames = by_display
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Shape("encode result misses a frame".into()))?;
    let enabled: Vec<f64> = frames
        .iter()
        .filter(|f| f.texture_enabled)
        .map(|f| f.texture_coverage)
        .collect();
    let coverage_pct = if enabled.is_empty() || !enc.config.uses_texture() {
        0.0
    } else {
        enabled.iter().sum::<f64>() / enabled.len() as f64 * 100.0
    };
    let flicker = match masks {
        Some(m) => metrics::flicker_score(&enc.recon, &clip.frames, m)?,
        None => FlickerScore {
            value: 0.0,
            no_texture: true,
        },
    };
    let psnr_full = Psnr::from_mse(sse_full / n_full as f64);
    let psnr_nontexture = if n_nt == 0 {
        psnr_full
    } else {
        Psnr::from_mse(sse_nt / n_nt as f64)
    };
    let total_bits = enc.total_bits();
    Ok(EncodeReport {
        video: video.to_string(),
        config: enc.config,
        qp: enc.qp,
        width: enc.width,
        height: enc.height,
        frames,
        file_bytes: enc.bytes.len(),
        total_bits,
        bits_per_frame: total_bits as f64 / n as f64,
        psnr_full,
        psnr_nontexture,
        ssim: ssim_sum / n as f64,
        coverage_pct,
        flicker,
        texture_coeff_bits: enc.texture_coeff_bits(),
    })
}
