//! Encodes the panning fixture with every configuration at four QPs and
//! prints the comparison table.
//!
//! cargo run --release --example encode_pan

use texlab::analyzer::CnnWeights;
use texlab::codec::{encode_with_masks, CodingConfig, EncodeParams};
use texlab::metrics::{build_comparison, comparison_table, saving_trends};
use texlab::pipeline::{analyze_clip, build_report, AnalysisParams};
use texlab::synthetic::PanFixture;

fn main() -> texlab::error::Result<()> {
    let weights = CnnWeights::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/texture_fixture.texw1"))?;
    let clip = PanFixture { frames: 17, ..PanFixture::default() }.clip()?;
    let masks = analyze_clip(&clip, &weights, &AnalysisParams::default())?.refined;
    let (mut base, mut tex) = (Vec::new(), Vec::new());
    for qp in [16, 24, 32, 40] {
        for config in CodingConfig::ALL {
            let params = EncodeParams { config, qp, ..EncodeParams::default() };
            let enc = encode_with_masks(&clip.frames, Some(&masks), &params)?;
            let report = build_report("pan", &clip, Some(&masks), &enc)?;
            if config == CodingConfig::Baseline {
                base.push(report);
            } else {
                tex.push(report);
            }
        }
    }
    let rows = build_comparison(&base, &tex)?;
    print!("{}", comparison_table(&rows));
    for t in saving_trends(&rows, 1.0) {
        println!("{} savings shrink with qp: {}", t.config, t.monotone);
    }
    Ok(())
}
