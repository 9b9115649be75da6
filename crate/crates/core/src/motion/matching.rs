use serde::{Deserialize, Serialize};

use super::fast::Keypoint;
use crate::frame::Plane;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub patch_radius: usize,
    pub ratio: f64,
    pub max_distance: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            patch_radius: 8,
            ratio: 0.8,
            max_distance: 64.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub cur: Keypoint,
    pub reference: Keypoint,
    /// Patch SAD.
    pub distance: u32,
}

/// Luma patch around a keypoint, edge-clamped.
pub fn patch(luma: &Plane, kp: &Keypoint, r: usize) -> Vec<u8> {
    let r = r as i64;
    let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for dy in -r..=r {
        for dx in -r..=r {
            out.push(luma.get_clamped(kp.x as i64 + dx, kp.y as i64 + dy));
        }
    }
    out
}

pub fn sad(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| u32::from(x.abs_diff(y))).sum()
}

fn within(a: &Keypoint, b: &Keypoint, max: f64) -> bool {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    dx * dx + dy * dy <= max * max
}

/// Best and second-best candidate (SAD, index); ties go to the earlier candidate.
fn best_two(costs: impl Iterator<Item = (u32, usize)>) -> Option<((u32, usize), Option<u32>)> {
    let mut best: Option<(u32, usize)> = None;
    let mut second: Option<u32> = None;
    for (c, j) in costs {
        match best {
            None => best = Some((c, j)),
            Some((bc, _)) if c < bc => {
                second = Some(bc);
                best = Some((c, j));
            }
            Some(_) => second = Some(second.map_or(c, |s| s.min(c))),
        }
    }
    best.map(|b| (b, second))
}

fn patch_inside(luma: &Plane, kp: &Keypoint, r: usize) -> bool {
    kp.x >= r && kp.y >= r && kp.x + r < luma.width() && kp.y + r < luma.height()
}

/// SAD matching within `max_distance`, ratio test against the runner-up, and a
/// mutual-best check. A keypoint with a single candidate passes the ratio test.
/// Keypoints whose patch does not fit inside the frame take no part.
pub fn match_features(
    cur_luma: &Plane,
    kps_cur: &[Keypoint],
    ref_luma: &Plane,
    kps_ref: &[Keypoint],
    params: &MatchParams,
) -> Vec<Match> {
    let r = params.patch_radius;
    let kps_cur: Vec<Keypoint> = kps_cur.iter().copied().filter(|k| patch_inside(cur_luma, k, r)).collect();
    let kps_ref: Vec<Keypoint> = kps_ref.iter().copied().filter(|k| patch_inside(ref_luma, k, r)).collect();
    let pc: Vec<Vec<u8>> = kps_cur.iter().map(|k| patch(cur_luma, k, r)).collect();
    let pr: Vec<Vec<u8>> = kps_ref.iter().map(|k| patch(ref_luma, k, r)).collect();
    // candidate lists with costs, in both directions
    let mut fwd: Vec<Vec<(u32, usize)>> = vec![Vec::new(); kps_cur.len()];
    let mut bwd: Vec<Vec<(u32, usize)>> = vec![Vec::new(); kps_ref.len()];
    for (i, kc) in kps_cur.iter().enumerate() {
        for (j, kr) in kps_ref.iter().enumerate() {
            if within(kc, kr, params.max_distance) {
                let c = sad(&pc[i], &pr[j]);
                fwd[i].push((c, j));
                bwd[j].push((c, i));
            }
        }
    }
    let passes = |best: u32, second: Option<u32>| {
        second.is_none_or(|s| f64::from(best) <= params.ratio * f64::from(s))
    };
    let mut out = Vec::new();
    for (i, cands) in fwd.iter().enumerate() {
        let Some(((c, j), second)) = best_two(cands.iter().copied()) else {
            continue;
        };
        if !passes(c, second) {
            continue;
        }
        let back = best_two(bwd[j].iter().copied()).map(|((_, k), _)| k);
        if back != Some(i) {
            continue;
        }
        out.push(Match {
            cur: kps_cur[i],
            reference: kps_ref[j],
            distance: c,
        });
    }
    out
}
