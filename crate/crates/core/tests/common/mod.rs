#![allow(dead_code)]

use std::path::PathBuf;

use texlab::analyzer::CnnWeights;
use texlab::pipeline::{analyze_clip, AnalysisParams};
use texlab::synthetic::{noise_plane, rotating_texture, CompositeFixture, PanFixture};
use texlab::{BlockGrid, Frame, Label, Plane, SourceClip, TextureMask};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn weights() -> CnnWeights {
    CnnWeights::load(fixture_path("texture_fixture.texw1")).expect("fixture weights")
}

pub fn refined_masks(clip: &SourceClip) -> Vec<TextureMask> {
    analyze_clip(clip, &weights(), &AnalysisParams::default())
        .expect("analysis")
        .refined
}

/// Texture in every block row from `first_row` down.
pub fn rows_mask(width: usize, height: usize, first_row: usize, index: usize) -> TextureMask {
    let grid = BlockGrid::for_dims(width, height);
    let bits: Vec<bool> = (0..grid.len()).map(|i| i / grid.cols >= first_row).collect();
    TextureMask::from_bools(grid, index, &bits).unwrap()
}

pub fn empty_masks(frames: &[Frame]) -> Vec<TextureMask> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| TextureMask::new(f.grid(), i))
        .collect()
}

/// Three identical 128x128 frames: flat mid-gray above row 64, static noise below.
pub fn static_fixture() -> (Vec<Frame>, Vec<TextureMask>) {
    let (w, h) = (128, 128);
    let noise = noise_plane(w, h, 120.0, 45.0, 11);
    let mut y = Plane::filled(w, h, 128);
    for row in 64..h {
        for x in 0..w {
            y.set(x, row, noise.get(x, row));
        }
    }
    let c = Plane::filled(w / 2, h / 2, 128);
    let f = Frame::new(0, y, c.clone(), c).unwrap();
    let frames: Vec<Frame> = (0..3).map(|i| f.clone().with_index(i)).collect();
    let masks = (0..3).map(|i| rows_mask(w, h, 2, i)).collect();
    (frames, masks)
}

/// Clips for the encoder/decoder mirror check.
pub fn mirror_clips() -> Vec<(&'static str, SourceClip)> {
    let pan = PanFixture {
        width: 192,
        frames: 12,
        ..PanFixture::default()
    };
    let composite = CompositeFixture {
        pan: PanFixture {
            frames: 10,
            ..CompositeFixture::default().pan
        },
        ..CompositeFixture::default()
    };
    vec![
        ("pan", pan.clip().unwrap()),
        ("composite", SourceClip::from_frames(composite.frames()).unwrap()),
        // odd size exercises padding and implicit splits
        ("rotating", SourceClip::from_frames(rotating_texture(150, 90, 10, 3)).unwrap()),
    ]
}

pub fn label_count(masks: &[TextureMask]) -> usize {
    masks
        .iter()
        .map(|m| m.labels().iter().filter(|l| **l != Label::NonTexture).count())
        .sum()
}
