//! Estimates the affine texture motion between two frames of a panning clip
//! and compares it with the ground truth.
//!
//! cargo run --release --example texture_motion

use texlab::motion::{estimate_texture_motion, MotionParams};
use texlab::synthetic::PanFixture;
use texlab::{BlockGrid, TextureMask};

fn main() -> texlab::error::Result<()> {
    let pan = PanFixture::default();
    let (cur, reference) = (pan.frame(4), pan.frame(5));
    let grid = BlockGrid::for_dims(pan.width, pan.height);
    // everything below the smooth band is texture
    let bits: Vec<bool> = (0..grid.len()).map(|i| i / grid.cols >= 1).collect();
    let mask = TextureMask::from_bools(grid, 0, &bits)?;
    let est = estimate_texture_motion(&cur, &reference, &mask, &mask, &MotionParams::default())?;
    println!("matches {}, inliers {}", est.matches, est.inliers);
    println!("estimated {:?}", est.model.params());
    println!("truth     {:?}", pan.true_motion(1).params());
    Ok(())
}
