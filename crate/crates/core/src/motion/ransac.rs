use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::affine::{fit_least_squares, solve_exact, AffineModel, PointPair};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    pub iters: usize,
    pub inlier_tol: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iters: 2000,
            inlier_tol: 1.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacFit {
    pub model: AffineModel,
    /// Indices into the caller's slice, ascending.
    pub inliers: Vec<usize>,
}

fn key(p: &PointPair) -> [f64; 4] {
    [p.cur.0, p.cur.1, p.reference.0, p.reference.1]
}

fn inliers_of(pairs: &[PointPair], m: &AffineModel, tol: f64) -> Vec<usize> {
    (0..pairs.len()).filter(|&i| pairs[i].error(m) <= tol).collect()
}

/// Seeded RANSAC over minimal 3-point samples followed by a least-squares
/// refit on the best consensus set.
///
/// Sampling runs over the pairs sorted by (cur x, cur y, ref x, ref y), so the
/// result does not depend on input order.
pub fn ransac_affine(pairs: &[PointPair], params: &RansacParams) -> Result<RansacFit> {
    if pairs.len() < 3 {
        return Err(Error::NoModel(format!("{} correspondences, need 3", pairs.len())));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        key(&pairs[i])
            .iter()
            .zip(key(&pairs[j]).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let sorted: Vec<PointPair> = order.iter().map(|&i| pairs[i]).collect();
    let n = sorted.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(usize, AffineModel)> = None;
    for _ in 0..params.iters {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.gen_range(0..n - 2);
        for lo in [i.min(j), i.max(j)] {
            if k >= lo {
                k += 1;
            }
        }
        let Some(m) = solve_exact(&[sorted[i], sorted[j], sorted[k]]) else {
            continue;
        };
        let count = sorted
            .iter()
            .filter(|p| p.error(&m) <= params.inlier_tol)
            .count();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, m));
        }
    }
    let Some((_, sample_model)) = best else {
        return Err(Error::NoModel("every sample was degenerate".into()));
    };
    let consensus = inliers_of(&sorted, &sample_model, params.inlier_tol);
    let subset: Vec<PointPair> = consensus.iter().map(|&i| sorted[i]).collect();
    let model = match fit_least_squares(&subset) {
        Some(refit) if inliers_of(&sorted, &refit, params.inlier_tol).len() >= consensus.len() => refit,
        _ => sample_model,
    };
    let mut inliers: Vec<usize> = inliers_of(&sorted, &model, params.inlier_tol)
        .into_iter()
        .map(|i| order[i])
        .collect();
    inliers.sort_unstable();
    Ok(RansacFit { model, inliers })
}
