use serde::{Deserialize, Serialize};

use crate::frame::{Plane, TextureMask};

/// Offsets of the 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Contiguous arc length required by the segment test.
pub const ARC: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub score: u32,
}

fn has_arc(flags: u16) -> bool {
    // doubling the word turns circular runs into linear ones
    let mut bits = u32::from(flags) | (u32::from(flags) << 16);
    // after k steps a bit survives only at the end of a run of k + 1 ones
    let mut run = 1;
    while bits != 0 {
        if run >= ARC {
            return true;
        }
        bits &= bits << 1;
        run += 1;
    }
    false
}

/// Segment-test score of pixel (x, y), or `None` if it is not a corner.
/// The caller guarantees a 3-pixel border.
pub fn corner_score(luma: &Plane, x: usize, y: usize, t: u8) -> Option<u32> {
    let p = i32::from(luma.get(x, y));
    let t = i32::from(t);
    let (mut bright, mut dark) = (0u16, 0u16);
    let (mut sb, mut sd) = (0u32, 0u32);
    for (k, &(dx, dy)) in CIRCLE.iter().enumerate() {
        let v = i32::from(luma.get((x as i32 + dx) as usize, (y as i32 + dy) as usize));
        if v > p + t {
            bright |= 1 << k;
            sb += (v - p - t) as u32;
        } else if v < p - t {
            dark |= 1 << k;
            sd += (p - t - v) as u32;
        }
    }
    (has_arc(bright) || has_arc(dark)).then_some(sb.max(sd))
}

/// FAST-9 corners with 3x3 non-maximum suppression, restricted to texture blocks
/// of `region` when given. A corner survives unless a neighbouring corner has a
/// higher score, or an equal score and an earlier raster position.
pub fn detect_fast(luma: &Plane, region: Option<&TextureMask>, t: u8) -> Vec<Keypoint> {
    let (w, h) = (luma.width(), luma.height());
    if w < 7 || h < 7 {
        return Vec::new();
    }
    let mut scores = vec![0u32; w * h];
    let mut is_corner = vec![false; w * h];
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            if let Some(s) = corner_score(luma, x, y, t) {
                scores[y * w + x] = s;
                is_corner[y * w + x] = true;
            }
        }
    }
    let mut out = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let i = y * w + x;
            if !is_corner[i] {
                continue;
            }
            if let Some(mask) = region {
                if !mask.is_texture_pixel(x, y) {
                    continue;
                }
            }
            let s = scores[i];
            let mut keep = true;
            'nms: for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    let j = ny * w + nx;
                    if j != i && is_corner[j] && (scores[j] > s || (scores[j] == s && j < i)) {
                        keep = false;
                        break 'nms;
                    }
                }
            }
            if keep {
                out.push(Keypoint { x, y, score: s });
            }
        }
    }
    out
}

/// Keeps the `n` strongest keypoints (ties by raster order), returned in raster order.
pub fn strongest(mut kps: Vec<Keypoint>, n: usize) -> Vec<Keypoint> {
    if kps.len() <= n {
        return kps;
    }
    kps.sort_by(|a, b| b.score.cmp(&a.score).then((a.y, a.x).cmp(&(b.y, b.x))));
    kps.truncate(n);
    kps.sort_by_key(|k| (k.y, k.x));
    kps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_detection() {
        assert!(has_arc(0b0000_0001_1111_1111));
        assert!(!has_arc(0b0000_0000_1111_1111));
        // wraps around bit 15 -> bit 0
        assert!(has_arc(0b1111_0000_0001_1111));
        assert!(!has_arc(0b0101_0101_0101_0101));
    }

    #[test]
    fn constant_image_has_no_corners() {
        let p = Plane::filled(64, 64, 90);
        assert!(detect_fast(&p, None, 20).is_empty());
    }

    #[test]
    fn strongest_keeps_top_scores() {
        let kps = vec![
            Keypoint { x: 5, y: 5, score: 3 },
            Keypoint { x: 9, y: 5, score: 7 },
            Keypoint { x: 2, y: 8, score: 5 },
        ];
        let top = strongest(kps, 2);
        assert_eq!(top.iter().map(|k| k.score).collect::<Vec<_>>(), vec![7, 5]);
    }
}
