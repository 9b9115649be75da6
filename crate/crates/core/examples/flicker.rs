//! Temporal flicker added in texture regions by each texture configuration.
//!
//! cargo run --release --example flicker

use texlab::analyzer::CnnWeights;
use texlab::codec::{encode_with_masks, CodingConfig, EncodeParams};
use texlab::metrics::flicker_score;
use texlab::pipeline::{analyze_clip, AnalysisParams};
use texlab::synthetic::PanFixture;

fn main() -> texlab::error::Result<()> {
    let weights = CnnWeights::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/texture_fixture.texw1"))?;
    for (name, fixture) in [
        ("pan", PanFixture { frames: 17, ..PanFixture::default() }),
        ("still", PanFixture::still(17)),
    ] {
        let clip = fixture.clip()?;
        let masks = analyze_clip(&clip, &weights, &AnalysisParams::default())?.refined;
        for config in [CodingConfig::TexCp, CodingConfig::TexSp, CodingConfig::TexAll] {
            let params = EncodeParams { config, qp: 24, ..EncodeParams::default() };
            let enc = encode_with_masks(&clip.frames, Some(&masks), &params)?;
            let f = flicker_score(&enc.recon, &clip.frames, &masks)?;
            println!("{name:<6} {config:<8} flicker {:.3}", f.value);
        }
    }
    Ok(())
}
