//! Classifies every 32x32 block of a synthetic frame with the fixture CNN.
//!
//! cargo run --release --example segment_frames

use texlab::analyzer::{score_frame, CnnWeights, DEFAULT_THRESHOLD};
use texlab::synthetic::CompositeFixture;
use texlab::SourceClip;

fn main() -> texlab::error::Result<()> {
    let weights = CnnWeights::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/texture_fixture.texw1"))?;
    let clip = SourceClip::from_frames(vec![CompositeFixture::default().frame(3)])?;
    let grid = clip.frames[0].grid();
    let scores = score_frame(&clip.rgb[0], &weights, DEFAULT_THRESHOLD)?;
    println!("texture probability per block ({}x{} grid):", grid.cols, grid.rows);
    for row in scores.chunks(grid.cols) {
        let cells: Vec<String> = row
            .iter()
            .map(|s| format!("{:.2}{}", s.probability, if s.texture { '*' } else { ' ' }))
            .collect();
        println!("  {}", cells.join(" "));
    }
    let n = scores.iter().filter(|s| s.texture).count();
    println!("{n} of {} blocks marked texture (*)", scores.len());
    Ok(())
}
