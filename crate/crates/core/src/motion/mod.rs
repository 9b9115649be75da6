//! Frame-level affine motion of the texture region.
//!
//! FAST-9 corners are detected inside the texture blocks of both frames,
//! matched by patch SAD and fitted with seeded RANSAC.

pub mod affine;
pub mod fast;
pub mod matching;
pub mod ransac;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use affine::{AffineModel, PointPair, MIN_DET};
pub use fast::{detect_fast, Keypoint};
pub use matching::{match_features, Match, MatchParams};
pub use ransac::{ransac_affine, RansacFit, RansacParams};

use crate::error::{Error, Result};
use crate::frame::{Frame, TextureMask};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub fast_threshold: u8,
    /// Per-frame keypoint budget after detection; the strongest are kept.
    pub max_keypoints: usize,
    pub matching: MatchParams,
    pub ransac: RansacParams,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            fast_threshold: 20,
            max_keypoints: 500,
            matching: MatchParams::default(),
            ransac: RansacParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionEstimate {
    pub model: AffineModel,
    pub matches: usize,
    pub inliers: usize,
}

/// Affine model from `cur` into `reference`, estimated only from features in
/// the texture blocks of the respective masks.
pub fn estimate_texture_motion(
    cur: &Frame,
    reference: &Frame,
    cur_mask: &TextureMask,
    ref_mask: &TextureMask,
    params: &MotionParams,
) -> Result<MotionEstimate> {
    if !cur_mask.has_texture() || !ref_mask.has_texture() {
        return Err(Error::NoModel("empty texture region".into()));
    }
    let detect = |f: &Frame, m: &TextureMask| {
        fast::strongest(
            detect_fast(f.luma(), Some(m), params.fast_threshold),
            params.max_keypoints,
        )
    };
    let kc = detect(cur, cur_mask);
    let kr = detect(reference, ref_mask);
    let matches = match_features(cur.luma(), &kc, reference.luma(), &kr, &params.matching);
    let pairs: Vec<PointPair> = matches
        .iter()
        .map(|m| {
            PointPair::new(
                (m.cur.x as f64, m.cur.y as f64),
                (m.reference.x as f64, m.reference.y as f64),
            )
        })
        .collect();
    let fit = ransac_affine(&pairs, &params.ransac)?;
    fit.model.validate(cur.width(), cur.height())?;
    Ok(MotionEstimate {
        model: fit.model,
        matches: pairs.len(),
        inliers: fit.inliers.len(),
    })
}

/// One line of the model log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub frame: usize,
    pub reference: usize,
    pub model: AffineModel,
    pub inliers: usize,
}

pub fn write_models_csv(records: &[ModelRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "frame,ref,a,b,c,d,tx,ty,inlier_count")?;
    for r in records {
        let m = r.model;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.frame, r.reference, m.a, m.b, m.c, m.d, m.tx, m.ty, r.inliers
        )?;
    }
    Ok(())
}
