//! Block texture classifier.
//!
//! Every 32x32 block of a frame is classified independently by a small
//! VGG-style network whose weights come from a `TEXW1` file.

pub mod tensor;
pub mod weights;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tensor::{conv3x3_forward, maxpool2, Conv3x3, Dense, Tensor};
pub use weights::{CnnWeights, Layer, ARCHITECTURE};

use crate::error::{Error, Result};
use crate::frame::{BlockGrid, Label, TextureMask, BLOCK_SIZE};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockScore {
    pub probability: f64,
    pub texture: bool,
}

impl BlockScore {
    pub fn new(probability: f64, threshold: f64) -> Self {
        Self {
            probability,
            texture: probability >= threshold,
        }
    }
}

/// Scales samples to [0, 1] and subtracts the stored channel means.
pub fn patch_tensor(patch: &RgbImage, means: [f32; 3]) -> Result<Tensor> {
    if patch.width() as usize != BLOCK_SIZE || patch.height() as usize != BLOCK_SIZE {
        return Err(Error::Shape(format!(
            "patch must be 32x32, got {}x{}",
            patch.width(),
            patch.height()
        )));
    }
    let n = BLOCK_SIZE * BLOCK_SIZE;
    let mut data = vec![0f32; 3 * n];
    for (x, y, px) in patch.enumerate_pixels() {
        let i = y as usize * BLOCK_SIZE + x as usize;
        for c in 0..3 {
            data[c * n + i] = f32::from(px.0[c]) / 255.0 - means[c];
        }
    }
    Tensor::new(3, BLOCK_SIZE, BLOCK_SIZE, data)
}

/// Texture probability of one 32x32 RGB patch.
pub fn cnn_forward(patch: &RgbImage, weights: &CnnWeights) -> Result<f64> {
    let mut t = patch_tensor(patch, weights.means())?;
    for layer in weights.layers() {
        t = match layer {
            Layer::Conv3x3(c) => c.forward(&t),
            Layer::Maxpool2 => maxpool2(&t),
            Layer::FullyConnected(d) => d.forward(&t),
            Layer::Relu => Ok(tensor::relu(t)),
            Layer::Sigmoid => Ok(tensor::sigmoid(t)),
        }
        .map_err(|e| Error::Model(e.to_string()))?;
    }
    if t.len() != 1 {
        return Err(Error::Model(format!("network emitted {} values", t.len())));
    }
    let p = f64::from(t.data()[0]);
    if !p.is_finite() {
        return Err(Error::Model("non-finite probability".into()));
    }
    Ok(p.clamp(0.0, 1.0))
}

pub fn block_patch(rgb: &RgbImage, row: usize, col: usize) -> RgbImage {
    image::imageops::crop_imm(
        rgb,
        (col * BLOCK_SIZE) as u32,
        (row * BLOCK_SIZE) as u32,
        BLOCK_SIZE as u32,
        BLOCK_SIZE as u32,
    )
    .to_image()
}

/// Scores of every grid block in row-major order.
pub fn score_frame(rgb: &RgbImage, weights: &CnnWeights, threshold: f64) -> Result<Vec<BlockScore>> {
    let grid = BlockGrid::for_dims(rgb.width() as usize, rgb.height() as usize);
    if grid.is_empty() {
        return Err(Error::Dimension(format!(
            "frame {}x{} holds no 32x32 block",
            rgb.width(),
            rgb.height()
        )));
    }
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = cnn_forward(&block_patch(rgb, i / grid.cols, i % grid.cols), weights)?;
            Ok(BlockScore::new(p, threshold))
        })
        .collect()
}

/// Raw per-frame mask; every texture block carries cluster 0.
pub fn segment_frame(
    rgb: &RgbImage,
    weights: &CnnWeights,
    threshold: f64,
    frame_index: usize,
) -> Result<TextureMask> {
    let grid = BlockGrid::for_dims(rgb.width() as usize, rgb.height() as usize);
    let labels = score_frame(rgb, weights, threshold)?
        .into_iter()
        .map(|s| {
            if s.texture {
                Label::Texture(0)
            } else {
                Label::NonTexture
            }
        })
        .collect();
    TextureMask::from_labels(grid, frame_index, labels)
}
