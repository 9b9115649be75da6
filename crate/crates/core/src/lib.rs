//! Texture-mode hybrid video coding laboratory.
//!
//! The crate classifies 32x32 blocks of each frame as texture or non-texture
//! with a small CNN, refines the per-frame masks over time and space, estimates
//! one affine motion model per (frame, reference) from features inside the
//! texture region, and codes texture blocks by warping references with zero
//! residual. Everything else goes through a conventional DCT + arithmetic-coding
//! path that also serves as the baseline.
//!
//! Start with the runnable programs under `examples/`.

pub mod analyzer;
pub mod cli;
pub mod codec;
pub mod error;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod refine;
pub mod synthetic;

pub use error::{Error, Result};
pub use frame::{BlockGrid, Frame, Label, Plane, Rect, SourceClip, TextureMask, BLOCK_SIZE};
