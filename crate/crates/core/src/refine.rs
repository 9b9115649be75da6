//! Temporal and spatial clean-up of raw block masks.
//!
//! Per frame the pipeline runs texture clustering, a three-frame majority vote,
//! a 4-neighbour hole fill and finally drops texture components smaller than
//! `min_blocks`.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Label, TextureMask, BLOCK_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Largest acceptable mean distance to the cluster centroid, in standardized units.
    pub tau_split: f64,
    pub k_max: usize,
    pub min_blocks: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            tau_split: 1.0,
            k_max: 4,
            min_blocks: 5,
        }
    }
}

/// Masks of consecutive frames over one grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSequence {
    masks: Vec<TextureMask>,
}

impl MaskSequence {
    pub fn new(masks: Vec<TextureMask>) -> Result<Self> {
        if let Some(first) = masks.first() {
            for (i, m) in masks.iter().enumerate() {
                if m.grid() != first.grid() {
                    return Err(Error::Input(format!("mask {i} has a different grid")));
                }
                if m.frame_index() != first.frame_index() + i {
                    return Err(Error::Input(format!(
                        "mask {i} has frame index {}, expected {}",
                        m.frame_index(),
                        first.frame_index() + i
                    )));
                }
            }
        }
        Ok(Self { masks })
    }

    pub fn masks(&self) -> &[TextureMask] {
        &self.masks
    }

    pub fn into_masks(self) -> Vec<TextureMask> {
        self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&TextureMask> {
        self.masks.get(i)
    }
}

/// Per-block (mean Y, mean U, mean V, Y variance).
fn block_features(frame: &Frame, row: usize, col: usize) -> [f64; 4] {
    let (x0, y0) = (col * BLOCK_SIZE, row * BLOCK_SIZE);
    let luma = frame.luma();
    let (mut s, mut s2) = (0f64, 0f64);
    for y in y0..y0 + BLOCK_SIZE {
        for &v in &luma.row(y)[x0..x0 + BLOCK_SIZE] {
            let v = f64::from(v);
            s += v;
            s2 += v * v;
        }
    }
    let n = (BLOCK_SIZE * BLOCK_SIZE) as f64;
    let mean_y = s / n;
    let var_y = (s2 / n - mean_y * mean_y).max(0.0);
    let half = BLOCK_SIZE / 2;
    let chroma_mean = |p: usize| {
        let plane = frame.plane(p);
        let mut acc = 0f64;
        for y in y0 / 2..y0 / 2 + half {
            for &v in &plane.row(y)[x0 / 2..x0 / 2 + half] {
                acc += f64::from(v);
            }
        }
        acc / (half * half) as f64
    };
    [mean_y, chroma_mean(1), chroma_mean(2), var_y]
}

/// Standardizes texture-block features. The divisor of each feature is floored
/// so that a single homogeneous texture does not get its natural block-to-block
/// jitter blown up to unit variance.
pub fn standardized_features(frame: &Frame, mask: &TextureMask) -> Vec<(usize, [f64; 4])> {
    let grid = mask.grid();
    let raw: Vec<(usize, [f64; 4])> = (0..grid.len())
        .filter(|&i| mask.labels()[i].is_texture())
        .map(|i| (i, block_features(frame, i / grid.cols, i % grid.cols)))
        .collect();
    if raw.is_empty() {
        return raw;
    }
    let n = raw.len() as f64;
    let mut mean = [0f64; 4];
    for (_, f) in &raw {
        for k in 0..4 {
            mean[k] += f[k] / n;
        }
    }
    let mut var = [0f64; 4];
    for (_, f) in &raw {
        for k in 0..4 {
            var[k] += (f[k] - mean[k]).powi(2) / n;
        }
    }
    let floors = [8.0, 4.0, 4.0, 0.25 * mean[3] + 1.0];
    let scale: Vec<f64> = (0..4).map(|k| var[k].sqrt().max(floors[k])).collect();
    raw.into_iter()
        .map(|(i, f)| {
            let mut z = [0f64; 4];
            for k in 0..4 {
                z[k] = (f[k] - mean[k]) / scale[k];
            }
            (i, z)
        })
        .collect()
}

fn dist2(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroids(points: &[[f64; 4]], assign: &[usize], k: usize) -> Vec<[f64; 4]> {
    let mut sums = vec![[0f64; 4]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assign) {
        counts[a] += 1;
        for d in 0..4 {
            sums[a][d] += p[d];
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let mut m = [0f64; 4];
            if c > 0 {
                for d in 0..4 {
                    m[d] = s[d] / c as f64;
                }
            }
            m
        })
        .collect()
}

fn nearest(p: &[f64; 4], cents: &[[f64; 4]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in cents.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Split-until-compact k-means over standardized block features.
///
/// Returns one cluster id per point, ids numbered by first appearance.
pub fn adaptive_kmeans(points: &[[f64; 4]], tau_split: f64, k_max: usize) -> Vec<usize> {
    let mut assign = vec![0usize; points.len()];
    if points.is_empty() {
        return assign;
    }
    let mut k = 1;
    loop {
        let cents = centroids(points, &assign, k);
        let mut mean_dist = vec![0f64; k];
        let mut sse = vec![0f64; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            let d2 = dist2(p, &cents[a]);
            mean_dist[a] += d2.sqrt();
            sse[a] += d2;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                mean_dist[j] /= counts[j] as f64;
                sse[j] /= counts[j] as f64;
            }
        }
        if k >= k_max || mean_dist.iter().all(|&d| d <= tau_split) {
            break;
        }
        // Split the cluster with the largest within-cluster variance.
        let target = (0..k)
            .filter(|&j| counts[j] >= 2)
            .max_by(|&a, &b| sse[a].total_cmp(&sse[b]).then(b.cmp(&a)));
        let Some(target) = target else { break };
        let members: Vec<usize> = (0..points.len()).filter(|&i| assign[i] == target).collect();
        let far = |from: &[f64; 4]| {
            let mut best = members[0];
            for &i in &members {
                if dist2(&points[i], from) > dist2(&points[best], from) {
                    best = i;
                }
            }
            best
        };
        let a = far(&cents[target]);
        let b = far(&points[a]);
        if dist2(&points[a], &points[b]) == 0.0 {
            break;
        }
        let mut seeds = cents.clone();
        seeds[target] = points[a];
        seeds.push(points[b]);
        k += 1;
        let mut cur = seeds;
        for _ in 0..100 {
            let next: Vec<usize> = points.iter().map(|p| nearest(p, &cur)).collect();
            let changed = next != assign;
            assign = next;
            let fresh = centroids(points, &assign, k);
            // keep empty clusters at their previous centre
            let counts: Vec<usize> = (0..k).map(|j| assign.iter().filter(|&&a| a == j).count()).collect();
            for j in 0..k {
                if counts[j] > 0 {
                    cur[j] = fresh[j];
                }
            }
            if !changed {
                break;
            }
        }
        // compact away empty clusters
        let mut remap = vec![usize::MAX; k];
        let mut next_id = 0;
        for &a in &assign {
            if remap[a] == usize::MAX {
                remap[a] = next_id;
                next_id += 1;
            }
        }
        for a in &mut assign {
            *a = remap[*a];
        }
        if next_id < k {
            k = next_id;
            break;
        }
    }
    // canonical numbering by first appearance
    let mut remap = vec![usize::MAX; k.max(1)];
    let mut next_id = 0;
    for a in &mut assign {
        if remap[*a] == usize::MAX {
            remap[*a] = next_id;
            next_id += 1;
        }
        *a = remap[*a];
    }
    assign
}

pub fn adaptive_kmeans_cluster(frame: &Frame, mask: &TextureMask, cfg: &RefineConfig) -> Result<TextureMask> {
    if frame.grid() != mask.grid() {
        return Err(Error::Input(format!(
            "mask grid {}x{} does not belong to a {}x{} frame",
            mask.grid().cols,
            mask.grid().rows,
            frame.width(),
            frame.height()
        )));
    }
    let feats = standardized_features(frame, mask);
    if feats.is_empty() {
        return Ok(mask.clone());
    }
    let points: Vec<[f64; 4]> = feats.iter().map(|(_, f)| *f).collect();
    let assign = adaptive_kmeans(&points, cfg.tau_split, cfg.k_max.max(1));
    let mut out = mask.clone();
    let cols = mask.grid().cols;
    for ((i, _), a) in feats.iter().zip(assign) {
        out.set(i / cols, i % cols, Label::Texture(a as u8));
    }
    Ok(out)
}

/// Majority vote of three masks for the middle frame.
pub fn temporal_correct(prev: &TextureMask, cur: &TextureMask, next: &TextureMask) -> Result<TextureMask> {
    if prev.grid() != cur.grid() || next.grid() != cur.grid() {
        return Err(Error::Input("temporal vote over different grids".into()));
    }
    let mut out = cur.clone();
    let grid = cur.grid();
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let (p, m, n) = (prev.get(r, c), cur.get(r, c), next.get(r, c));
            let votes = [p, m, n].iter().filter(|l| l.is_texture()).count();
            let label = if votes < 2 {
                Label::NonTexture
            } else if m.is_texture() {
                m
            } else if p.is_texture() {
                p
            } else {
                n
            };
            out.set(r, c, label);
        }
    }
    Ok(out)
}

fn neighbours(rows: usize, cols: usize, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut v = Vec::with_capacity(4);
    if r > 0 {
        v.push((r - 1, c));
    }
    if r + 1 < rows {
        v.push((r + 1, c));
    }
    if c > 0 {
        v.push((r, c - 1));
    }
    if c + 1 < cols {
        v.push((r, c + 1));
    }
    v.into_iter()
}

/// One synchronous pass of 4-neighbour hole filling: a non-texture block turns
/// texture when at least `ceil(3n/4)` of its `n` existing neighbours are texture.
pub fn spatial_correct(mask: &TextureMask) -> TextureMask {
    let grid = mask.grid();
    let mut out = mask.clone();
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            if mask.is_texture(r, c) {
                continue;
            }
            let mut n = 0usize;
            let mut voters = Vec::new();
            for (nr, nc) in neighbours(grid.rows, grid.cols, r, c) {
                n += 1;
                if let Label::Texture(k) = mask.get(nr, nc) {
                    voters.push(k);
                }
            }
            let needed = (3 * n).div_ceil(4);
            if n > 0 && voters.len() >= needed {
                out.set(r, c, Label::Texture(mode_of(&voters)));
            }
        }
    }
    out
}

/// Most frequent id, smallest id on ties.
fn mode_of(ids: &[u8]) -> u8 {
    let mut best = (0usize, u8::MAX);
    for &k in ids {
        let count = ids.iter().filter(|&&x| x == k).count();
        if count > best.0 || (count == best.0 && k < best.1) {
            best = (count, k);
        }
    }
    best.1
}

/// 4-connected texture components (cluster ids ignored), in raster order of
/// their first block.
pub fn texture_components(mask: &TextureMask) -> Vec<Vec<(usize, usize)>> {
    let grid = mask.grid();
    let mut seen = vec![false; grid.len()];
    let mut comps = Vec::new();
    for start in 0..grid.len() {
        if seen[start] || !mask.labels()[start].is_texture() {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / grid.cols, i % grid.cols);
            comp.push((r, c));
            for (nr, nc) in neighbours(grid.rows, grid.cols, r, c) {
                let j = nr * grid.cols + nc;
                if !seen[j] && mask.labels()[j].is_texture() {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

pub fn remove_small_components(mask: &TextureMask, min_blocks: usize) -> TextureMask {
    let mut out = mask.clone();
    for comp in texture_components(mask) {
        if comp.len() < min_blocks {
            for (r, c) in comp {
                out.set(r, c, Label::NonTexture);
            }
        }
    }
    out
}

/// Cluster, temporal vote, spatial fill, small-component removal, per frame.
pub fn refine_sequence(frames: &[Frame], raw: &[TextureMask], cfg: &RefineConfig) -> Result<MaskSequence> {
    if frames.len() != raw.len() {
        return Err(Error::Input(format!(
            "{} frames but {} masks",
            frames.len(),
            raw.len()
        )));
    }
    let clustered = frames
        .iter()
        .zip(raw)
        .map(|(f, m)| adaptive_kmeans_cluster(f, m, cfg))
        .collect::<Result<Vec<_>>>()?;
    let n = clustered.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let cur = &clustered[i];
        let prev = if i > 0 { &clustered[i - 1] } else { cur };
        let next = if i + 1 < n { &clustered[i + 1] } else { cur };
        let voted = temporal_correct(prev, cur, next)?;
        let filled = spatial_correct(&voted);
        out.push(remove_small_components(&filled, cfg.min_blocks));
    }
    MaskSequence::new(out)
}

/// Binary PGM, one sample per block: 0 non-texture, 1 + k for cluster k.
pub fn write_mask_pgm(mask: &TextureMask, mut out: impl Write) -> Result<()> {
    let grid = mask.grid();
    write!(out, "P5\n{} {}\n255\n", grid.cols, grid.rows)?;
    let bytes: Vec<u8> = mask
        .labels()
        .iter()
        .map(|l| match l {
            Label::NonTexture => 0,
            Label::Texture(k) => k.saturating_add(1),
        })
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_mask_pgm(bytes: &[u8], frame_index: usize) -> Result<TextureMask> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Input("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::Input("expected an 8-bit binary PGM".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Input(format!("bad PGM size {s:?}")));
    let (cols, rows) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = bytes
        .get(pos..pos + cols * rows)
        .ok_or_else(|| Error::Input("truncated PGM data".into()))?;
    let labels = data
        .iter()
        .map(|&b| if b == 0 { Label::NonTexture } else { Label::Texture(b - 1) })
        .collect();
    TextureMask::from_labels(crate::frame::BlockGrid { cols, rows }, frame_index, labels)
}

/// PNG bytes of a mask overlay: texture blocks tinted by cluster, block borders dimmed.
pub fn overlay_png(rgb: &image::RgbImage, mask: &TextureMask) -> Result<Vec<u8>> {
    const TINTS: [[u8; 3]; 4] = [[255, 64, 64], [64, 255, 64], [64, 128, 255], [255, 220, 0]];
    let mut img = rgb.clone();
    for (x, y, px) in img.enumerate_pixels_mut() {
        if let Some((r, c)) = mask.grid().block_at(x as usize, y as usize) {
            if let Label::Texture(k) = mask.get(r, c) {
                let t = TINTS[k as usize % TINTS.len()];
                for ch in 0..3 {
                    px.0[ch] = ((u16::from(px.0[ch]) + u16::from(t[ch])) / 2) as u8;
                }
            }
            if x as usize % BLOCK_SIZE == 0 || y as usize % BLOCK_SIZE == 0 {
                for ch in 0..3 {
                    px.0[ch] /= 2;
                }
            }
        }
    }
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::BlockGrid;

    fn mask_from(rows: &[&str]) -> TextureMask {
        let grid = BlockGrid {
            cols: rows[0].len(),
            rows: rows.len(),
        };
        let labels = rows
            .iter()
            .flat_map(|r| r.chars())
            .map(|ch| match ch {
                '.' => Label::NonTexture,
                d => Label::Texture(d.to_digit(10).unwrap() as u8),
            })
            .collect();
        TextureMask::from_labels(grid, 0, labels).unwrap()
    }

    #[test]
    fn temporal_majority_cases() {
        let t = mask_from(&["0"]);
        let n = mask_from(&["."]);
        assert!(temporal_correct(&t, &t, &n).unwrap().is_texture(0, 0));
        assert!(!temporal_correct(&n, &t, &n).unwrap().is_texture(0, 0));
        let m = mask_from(&["01.", "2.0"]);
        assert_eq!(temporal_correct(&m, &m, &m).unwrap(), m);
    }

    #[test]
    fn temporal_cluster_taken_from_nearest_agreeing_frame() {
        let p = mask_from(&["2"]);
        let c = mask_from(&["."]);
        let n = mask_from(&["3"]);
        assert_eq!(temporal_correct(&p, &c, &n).unwrap().get(0, 0), Label::Texture(2));
        let c1 = mask_from(&["1"]);
        assert_eq!(temporal_correct(&p, &c1, &n).unwrap().get(0, 0), Label::Texture(1));
    }

    #[test]
    fn hole_is_filled() {
        let m = mask_from(&["000", "0.0", "000"]);
        assert!(spatial_correct(&m).is_texture(1, 1));
        let empty = mask_from(&["...", "..."]);
        assert_eq!(spatial_correct(&empty), empty);
    }

    #[test]
    fn spatial_vote_uses_mode_of_voters() {
        let m = mask_from(&[".1.", "2.1", ".1."]);
        assert_eq!(spatial_correct(&m).get(1, 1), Label::Texture(1));
    }

    #[test]
    fn small_component_rules() {
        let lone = mask_from(&[".....", "..0..", "....."]);
        assert_eq!(remove_small_components(&lone, 5).texture_count(), 0);
        let plus = mask_from(&["..0..", ".000.", "..0.."]);
        assert_eq!(remove_small_components(&plus, 5), plus);
    }

    #[test]
    fn kmeans_single_texture_is_one_cluster() {
        let pts: Vec<[f64; 4]> = (0..20)
            .map(|i| [0.01 * i as f64, -0.02 * (i % 3) as f64, 0.0, 0.05])
            .collect();
        let a = adaptive_kmeans(&pts, 1.0, 4);
        assert!(a.iter().all(|&x| x == 0));
    }

    #[test]
    fn kmeans_respects_k_max() {
        let pts: Vec<[f64; 4]> = (0..40).map(|i| [i as f64 * 3.0, 0.0, 0.0, 0.0]).collect();
        let a = adaptive_kmeans(&pts, 0.1, 3);
        assert_eq!(a.iter().max(), Some(&2));
    }

    #[test]
    fn pgm_round_trip() {
        let m = mask_from(&["01.", "..2"]);
        let mut buf = Vec::new();
        write_mask_pgm(&m, &mut buf).unwrap();
        assert_eq!(read_mask_pgm(&buf, 0).unwrap(), m);
    }

    #[test]
    fn length_mismatch_is_input_error() {
        let f = Frame::filled(0, 64, 64, [0, 128, 128]).unwrap();
        assert!(matches!(
            refine_sequence(&[f], &[], &RefineConfig::default()),
            Err(Error::Input(_))
        ));
    }
}
