//! Raw CNN masks next to the refined ones: clustering, temporal vote,
//! hole filling and small-region removal.
//!
//! cargo run --release --example refine_masks

use texlab::analyzer::CnnWeights;
use texlab::pipeline::{analyze_clip, AnalysisParams};
use texlab::synthetic::CompositeFixture;
use texlab::{Label, SourceClip, TextureMask};

fn render(mask: &TextureMask) -> Vec<String> {
    let g = mask.grid();
    (0..g.rows)
        .map(|r| {
            (0..g.cols)
                .map(|c| match mask.get(r, c) {
                    Label::NonTexture => '.',
                    Label::Texture(k) => char::from(b'A' + k),
                })
                .collect()
        })
        .collect()
}

fn main() -> texlab::error::Result<()> {
    let weights = CnnWeights::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/texture_fixture.texw1"))?;
    let fixture = CompositeFixture::default();
    let clip = SourceClip::from_frames(fixture.frames()[..6].to_vec())?;
    let a = analyze_clip(&clip, &weights, &AnalysisParams::default())?;
    for (i, (raw, refined)) in a.raw.iter().zip(&a.refined).enumerate() {
        println!("frame {i}: raw | refined");
        for (l, r) in render(raw).iter().zip(render(refined)) {
            println!("  {l} | {r}");
        }
    }
    Ok(())
}
