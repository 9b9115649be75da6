mod common;

use common::*;
use texlab::codec::{encode_with_masks, CodingConfig, EncodeParams};
use texlab::metrics::*;
use texlab::synthetic::{rotating_texture, PanFixture};
use texlab::{BlockGrid, Frame, TextureMask};

fn report(video: &str, config: CodingConfig, qp: u8, bits_per_frame: f64) -> EncodeReport {
    EncodeReport {
        video: video.into(),
        config,
        qp,
        width: 352,
        height: 288,
        frames: Vec::new(),
        file_bytes: 0,
        total_bits: 0,
        bits_per_frame,
        psnr_full: Psnr::Db(38.0),
        psnr_nontexture: Psnr::Db(39.0),
        ssim: 0.95,
        coverage_pct: if config.uses_texture() { 58.0 } else { 0.0 },
        flicker: FlickerScore {
            value: 0.0,
            no_texture: false,
        },
        texture_coeff_bits: 0.0,
    }
}

#[test]
fn masked_psnr_matches_loop_oracle() {
    let a = rotating_texture(150, 90, 2, 1);
    let b = rotating_texture(150, 90, 2, 2);
    let grid = BlockGrid::for_dims(150, 90);
    let mask = TextureMask::from_bools(grid, 0, &[true, false, false, true, false, true, true, false]).unwrap();
    let (mut sse, mut n) = (0.0, 0usize);
    for y in 0..90 {
        for x in 0..150 {
            let (r, c) = (y / 32, x / 32);
            // pixels outside the block grid are never texture
            let texture = r < grid.rows && c < grid.cols && mask.is_texture(r, c);
            if !texture {
                let d = f64::from(a[0].luma().get(x, y)) - f64::from(b[0].luma().get(x, y));
                sse += d * d;
                n += 1;
            }
        }
    }
    let want = 10.0 * (255.0f64 * 255.0 / (sse / n as f64)).log10();
    assert_eq!(psnr(&a[0], &b[0], Some(&mask)).unwrap(), Psnr::Db(want));
    assert_eq!(luma_sse(&a[0], &b[0], Some(&mask)).unwrap(), (sse, n));
}

#[test]
fn psnr_of_unit_error_is_48_13() {
    let a = Frame::filled(0, 64, 64, [90, 128, 128]).unwrap();
    let b = Frame::filled(0, 64, 64, [91, 128, 128]).unwrap();
    assert_eq!(psnr(&a, &b, None).unwrap().to_string(), "48.13");
    assert_eq!(psnr(&a, &a, None).unwrap(), Psnr::Identical);
    assert_eq!(Psnr::Identical.to_string(), "inf");
}

#[test]
fn flicker_of_source_is_zero() {
    let clip = PanFixture { frames: 6, ..PanFixture::default() }.clip().unwrap();
    let masks: Vec<_> = (0..6).map(|i| rows_mask(256, 128, 1, i)).collect();
    let f = flicker_score(&clip.frames, &clip.frames, &masks).unwrap();
    assert_eq!(f.value, 0.0);
    assert!(!f.no_texture);

    let none = empty_masks(&clip.frames);
    let f = flicker_score(&clip.frames, &clip.frames, &none).unwrap();
    assert!(f.no_texture);
    assert!(flicker_score(&clip.frames[..1], &clip.frames[..1], &masks[..1]).is_err());
}

#[test]
fn flicker_counts_added_temporal_change() {
    let src: Vec<Frame> = (0..3).map(|i| Frame::filled(i, 64, 64, [100, 128, 128]).unwrap()).collect();
    let mut rec = src.clone();
    rec[1] = Frame::filled(1, 64, 64, [104, 128, 128]).unwrap();
    let masks: Vec<_> = (0..3).map(|i| rows_mask(64, 64, 1, i)).collect();
    // pairs (0,1) and (1,2) each move by 4 inside the lower block row
    assert_eq!(flicker_score(&rec, &src, &masks).unwrap().value, 4.0);
}

#[test]
fn table_renders_saving_with_two_decimals() {
    let base = [report("flower", CodingConfig::Baseline, 16, 20000.0)];
    let tex = [report("flower", CodingConfig::TexCp, 16, 17890.0)];
    let rows = build_comparison(&base, &tex).unwrap();
    let row = rows.iter().find(|r| r.config == CodingConfig::TexCp).unwrap();
    assert_eq!(format!("{:.2}", row.rate_saving_pct), "-10.55");
    let csv = comparison_csv(&rows);
    assert!(csv.starts_with(CSV_HEADER));
    assert!(csv.contains("flower,16,tex-cp,17890.00,-10.55,"), "{csv}");
    assert!(comparison_table(&rows).contains("-10.55"));
}

#[test]
fn equal_sizes_give_zero_saving() {
    let base = [report("v", CodingConfig::Baseline, 24, 5000.0)];
    let tex = [report("v", CodingConfig::TexSp, 24, 5000.0)];
    let rows = build_comparison(&base, &tex).unwrap();
    assert!(comparison_csv(&rows).contains("v,24,tex-sp,5000.00,0.00,"));
}

#[test]
fn comparison_needs_matching_keys() {
    let base = [report("v", CodingConfig::Baseline, 24, 5000.0)];
    let tex = [report("v", CodingConfig::TexCp, 32, 4000.0)];
    assert!(build_comparison(&base, &tex).is_err());
    let tex = [report("w", CodingConfig::TexCp, 24, 4000.0)];
    assert!(build_comparison(&base, &tex).is_err());
}

#[test]
fn trend_flags_growing_savings() {
    let qps = [16, 24, 32, 40];
    let base: Vec<_> = qps.iter().map(|&q| report("v", CodingConfig::Baseline, q, 1000.0)).collect();
    let shrinking: Vec<_> = qps
        .iter()
        .zip([800.0, 850.0, 905.0, 900.0])
        .map(|(&q, b)| report("v", CodingConfig::TexCp, q, b))
        .collect();
    let t = saving_trends(&build_comparison(&base, &shrinking).unwrap(), 1.0);
    assert_eq!(t.len(), 1);
    // the last step grows by 0.5 points, inside the tolerance
    assert!(t[0].monotone);
    let growing: Vec<_> = qps
        .iter()
        .zip([900.0, 850.0, 900.0, 950.0])
        .map(|(&q, b)| report("v", CodingConfig::TexCp, q, b))
        .collect();
    assert!(!saving_trends(&build_comparison(&base, &growing).unwrap(), 1.0)[0].monotone);
}

#[test]
fn data_rate_of_static_fixture_drops_with_texture() {
    let (frames, masks) = static_fixture();
    let bpf = |config| {
        let p = EncodeParams {
            config,
            qp: 24,
            ..EncodeParams::default()
        };
        let enc = encode_with_masks(&frames, Some(&masks), &p).unwrap();
        assert_eq!(data_rate(enc.bytes.len(), 3).unwrap(), enc.bytes.len() as f64 * 8.0 / 3.0);
        enc.total_bits() as f64 / 3.0
    };
    assert!(bpf(CodingConfig::TexCp) < bpf(CodingConfig::Baseline));
}

#[test]
fn report_invariants_hold_on_pan() {
    let clip = PanFixture { frames: 9, ..PanFixture::default() }.clip().unwrap();
    let masks = refined_masks(&clip);
    for config in [CodingConfig::Baseline, CodingConfig::TexCp] {
        let p = EncodeParams {
            config,
            qp: 32,
            ..EncodeParams::default()
        };
        let enc = encode_with_masks(&clip.frames, Some(&masks), &p).unwrap();
        let r = texlab::pipeline::build_report("pan", &clip, Some(&masks), &enc).unwrap();
        assert_eq!(r.frames.len(), 9);
        assert!(r.frames.iter().all(|f| f.bits > 0 && (0.0..=1.0).contains(&f.texture_coverage)));
        assert_eq!(r.total_bits, r.frames.iter().map(|f| f.bits).sum::<u64>());
        assert_eq!(r.bits_per_frame, r.total_bits as f64 / 9.0);
        if config == CodingConfig::Baseline {
            assert_eq!(r.coverage_pct, 0.0);
        } else {
            assert!(r.coverage_pct > 0.0);
        }
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<EncodeReport>(&json).unwrap(), r);
    }
}
