use std::path::PathBuf;

use image::RgbImage;
use texlab::analyzer::{cnn_forward, segment_frame, CnnWeights};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn golden() -> (Vec<RgbImage>, Vec<f64>) {
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(fixture("golden.json")).unwrap()).unwrap();
    let strip = image::open(fixture("golden_patches.png")).unwrap().to_rgb8();
    let probs: Vec<f64> = json["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let patches = (0..probs.len() as u32)
        .map(|i| image::imageops::crop_imm(&strip, i * 32, 0, 32, 32).to_image())
        .collect();
    (patches, probs)
}

#[test]
fn fixture_weights_match_golden_probabilities() {
    let weights = CnnWeights::load(fixture("texture_fixture.texw1")).unwrap();
    let (patches, probs) = golden();
    assert_eq!(patches.len(), 20);
    for (patch, &expected) in patches.iter().zip(&probs) {
        let p = cnn_forward(patch, &weights).unwrap();
        assert!((p - expected).abs() <= 1e-5, "{p} vs {expected}");
    }
}

#[test]
fn forward_pass_is_deterministic() {
    let weights = CnnWeights::load(fixture("texture_fixture.texw1")).unwrap();
    let (patches, _) = golden();
    let a = cnn_forward(&patches[2], &weights).unwrap();
    let b = cnn_forward(&patches[2], &weights).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn segment_equals_per_block_forward() {
    let weights = CnnWeights::load(fixture("texture_fixture.texw1")).unwrap();
    let (patches, _) = golden();
    // 4x3 blocks, each a golden patch, in a checkerboard-like arrangement
    let (cols, rows) = (4u32, 3u32);
    let mut frame = RgbImage::new(cols * 32 + 10, rows * 32 + 6);
    for r in 0..rows {
        for c in 0..cols {
            let p = &patches[((r * cols + c) as usize * 7) % patches.len()];
            image::imageops::replace(&mut frame, p, (c * 32) as i64, (r * 32) as i64);
        }
    }
    let t = std::time::Instant::now();
    let mask = segment_frame(&frame, &weights, 0.5, 0).unwrap();
    eprintln!("segment 12 blocks: {:?}", t.elapsed());
    for r in 0..rows as usize {
        for c in 0..cols as usize {
            let p = cnn_forward(&texlab::analyzer::block_patch(&frame, r, c), &weights).unwrap();
            assert_eq!(mask.is_texture(r, c), p >= 0.5);
        }
    }
}
