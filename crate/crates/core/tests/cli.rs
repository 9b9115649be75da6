mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use texlab::codec::bitstream::Bitstream;
use texlab::synthetic::{CompositeFixture, PanFixture};
use texlab::Frame;

fn texlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texlab"))
        .args(args)
        .env("TEXLAB_THREADS", "2")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_yuv(dir: &Path, name: &str, frames: &[Frame]) -> String {
    let p = dir.join(name);
    fs::write(&p, texlab::io::write_yuv420(frames)).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn small_pan() -> Vec<Frame> {
    PanFixture {
        width: 128,
        height: 96,
        frames: 5,
        smooth_rows: 32,
        ..PanFixture::default()
    }
    .clip()
    .unwrap()
    .frames
}

fn encode(input: &str, config: &str, qps: &[u8], out: &Path) -> Output {
    let w = s(&fixture_path("texture_fixture.texw1"));
    let mut args = vec![
        "encode", "--input", input, "--format", "yuv420", "--size", "128x96", "--config", config, "--weights", &w,
        "--video", "pan", "--out",
    ];
    let out_s = s(out);
    args.push(&out_s);
    let qs: Vec<String> = qps.iter().map(|q| q.to_string()).collect();
    for q in &qs {
        args.push("--qp");
        args.push(q);
    }
    texlab(&args)
}

#[test]
fn analyze_matches_committed_golden_masks() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = CompositeFixture {
        pan: PanFixture {
            frames: 5,
            ..CompositeFixture::default().pan
        },
        ..CompositeFixture::default()
    };
    let input = write_yuv(dir.path(), "composite.yuv", &fixture.frames());
    let out = dir.path().join("out");
    let o = texlab(&[
        "analyze",
        "--input",
        &input,
        "--format",
        "yuv420",
        "--size",
        "256x128",
        "--weights",
        &s(&fixture_path("texture_fixture.texw1")),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for kind in ["refined", "raw"] {
        let sub = if kind == "refined" { "masks" } else { "raw" };
        for i in 0..5 {
            let name = format!("frame_{i:04}.pgm");
            let got = fs::read(out.join(sub).join(&name)).unwrap();
            let want = fs::read(fixture_path("golden_masks").join(kind).join(&name)).unwrap();
            assert_eq!(got, want, "{kind} {name}");
        }
    }
    for i in 0..5 {
        let png = image::open(out.join("overlays").join(format!("frame_{i:04}.png"))).unwrap();
        assert_eq!((png.width(), png.height()), (256, 128));
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["frames"], 5);
    assert_eq!(summary["mean_refined_coverage"], 0.5);
}

#[test]
fn flat_clip_has_no_texture() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<Frame> = (0..3).map(|i| Frame::filled(i, 96, 64, [128, 128, 128]).unwrap()).collect();
    let input = write_yuv(dir.path(), "flat.yuv", &frames);
    let out = dir.path().join("out");
    let o = texlab(&[
        "analyze", "--input", &input, "--format", "yuv420", "--size", "96x64", "--weights",
        &s(&fixture_path("texture_fixture.texw1")), "--out", &s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["mean_raw_coverage"].as_f64().unwrap() < 0.05);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_yuv(dir.path(), "pan.yuv", &small_pan());
    let missing = s(&dir.path().join("nope.texw1"));
    let o = texlab(&["analyze", "--input", &input, "--format", "yuv420", "--size", "128x96", "--weights", &missing]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    // yuv without a size
    let w = s(&fixture_path("texture_fixture.texw1"));
    assert_eq!(code(&texlab(&["analyze", "--input", &input, "--format", "yuv420", "--weights", &w])), 2);
    // texture configs need weights
    assert_eq!(code(&texlab(&["encode", "--input", &input, "--format", "yuv420", "--size", "128x96"])), 2);
    assert_eq!(code(&texlab(&["encode", "--bogus"])), 2);
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"qp": [16], "colour": "red"}"#).unwrap();
    assert_eq!(code(&texlab(&["encode", "--run-config", &s(&cfg)])), 2);
}

#[test]
fn encode_compare_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_yuv(dir.path(), "pan.yuv", &small_pan());
    let out = dir.path().join("out");
    let qps = [16, 24, 32, 40];
    for config in ["baseline", "tex-cp"] {
        let o = encode(&input, config, &qps, &out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for config in ["baseline", "tex-cp"] {
        for qp in qps {
            for ext in [".texc", ".json", "_models.csv"] {
                assert!(out.join(format!("pan_{config}_qp{qp}{ext}")).exists(), "{config} {qp} {ext}");
            }
        }
    }

    // deterministic
    let again = dir.path().join("again");
    assert_eq!(code(&encode(&input, "tex-cp", &[24], &again)), 0);
    assert_eq!(
        fs::read(out.join("pan_tex-cp_qp24.texc")).unwrap(),
        fs::read(again.join("pan_tex-cp_qp24.texc")).unwrap()
    );
    let models = fs::read_to_string(out.join("pan_tex-cp_qp24_models.csv")).unwrap();
    assert!(models.lines().count() > 1);

    let reports: Vec<String> = ["baseline", "tex-cp"]
        .iter()
        .flat_map(|c| qps.map(|q| s(&out.join(format!("pan_{c}_qp{q}.json")))))
        .collect();
    let cmp = dir.path().join("cmp");
    let mut args = vec!["compare".to_string(), "--out".into(), s(&cmp)];
    args.extend(reports.iter().cloned());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = texlab(&refs);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let qp16 = text
        .lines()
        .find(|l| l.starts_with("pan") && l.contains(" 16 ") && l.contains("tex-cp"))
        .unwrap();
    let saving: f64 = qp16.split_whitespace().nth(4).unwrap().parse().unwrap();
    assert!(saving < 0.0, "{qp16}");
    assert!(text.contains("trend pan tex-cp"), "{text}");
    assert!(text.contains("with qp"));
    for f in ["comparison.csv", "comparison.txt", "saving_vs_qp.csv"] {
        assert!(cmp.join(f).exists());
    }
    let csv = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);

    // a single report, or one without its baseline
    assert_eq!(code(&texlab(&["compare", &reports[0]])), 4);
    assert_eq!(code(&texlab(&["compare", &reports[4], &reports[5]])), 4);

    // roundtrip
    let stream = out.join("pan_tex-cp_qp32.texc");
    let yuv = dir.path().join("decoded.yuv");
    let o = texlab(&["roundtrip", "--input", &s(&stream), "--out", &s(&yuv)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("PASS"));
    assert_eq!(fs::read(&yuv).unwrap().len(), 5 * (128 * 96 * 3 / 2));

    let bytes = fs::read(&stream).unwrap();
    let parsed = Bitstream::parse(&bytes).unwrap();
    let mut flipped = bytes.clone();
    let at = parsed.frames[0].payload_offset + 5;
    flipped[at] ^= 0x01;
    let bad = dir.path().join("flipped.texc");
    fs::write(&bad, &flipped).unwrap();
    let o = texlab(&["roundtrip", "--input", &s(&bad)]);
    assert_eq!(code(&o), 5);
    assert!(format!("{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr)).contains("FAIL"));

    let cut = dir.path().join("cut.texc");
    fs::write(&cut, &bytes[..bytes.len() - 7]).unwrap();
    let o = texlab(&["roundtrip", "--input", &s(&cut)]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at byte"));
}

#[test]
fn png_directory_input() {
    let dir = tempfile::tempdir().unwrap();
    let clip = PanFixture {
        width: 128,
        height: 64,
        frames: 3,
        ..PanFixture::default()
    }
    .clip()
    .unwrap();
    let frames_dir: PathBuf = dir.path().join("frames");
    fs::create_dir_all(&frames_dir).unwrap();
    for (i, rgb) in clip.rgb.iter().enumerate() {
        rgb.save(frames_dir.join(format!("{i:03}.png"))).unwrap();
    }
    let out = dir.path().join("out");
    let o = texlab(&[
        "encode", "--input", &s(&frames_dir), "--format", "png-dir", "--config", "baseline", "--qp", "32", "--video",
        "clip", "--out", &s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("clip_baseline_qp32.json")).unwrap()).unwrap();
    assert_eq!(report["frames"].as_array().unwrap().len(), 3);
    assert_eq!(report["coverage_pct"], 0.0);
}
