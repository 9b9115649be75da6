//! `texlab` command line: analyze, encode, compare, roundtrip.
//!
//! Exit codes: 0 ok, 2 input, 3 codec, 4 comparison, 5 verification.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analyzer::CnnWeights;
use crate::codec::{decode_sequence, encode_with_masks, CodingConfig, EncodeParams, GF_INTERVAL};
use crate::error::Error;
use crate::frame::SourceClip;
use crate::io::{parse_size, read_clip, write_atomic, InputFormat};
use crate::metrics::{build_comparison, comparison_csv, comparison_table, saving_trends, trend_csv, EncodeReport};
use crate::motion::{write_models_csv, MotionParams};
use crate::pipeline::{analyze_clip, build_report, AnalysisParams};
use crate::refine::{overlay_png, write_mask_pgm, RefineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CODEC: i32 = 3;
pub const EXIT_COMPARE: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;
pub const THREADS_ENV: &str = "TEXLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "texlab", version, about = "Texture-mode video coding lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify and refine texture masks; writes PGM masks, overlays and a summary.
    Analyze(RunArgs),
    /// Encode at every requested qp; writes TEXC1 streams, reports and model logs.
    Encode(RunArgs),
    /// Join reports into a comparison table, CSV and saving-vs-qp data.
    Compare(CompareArgs),
    /// Decode a stream and verify every frame checksum.
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    run_config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// png-dir or yuv420.
    #[arg(long)]
    format: Option<String>,
    /// Frame size WxH, required for yuv420.
    #[arg(long)]
    size: Option<String>,
    /// Coding configuration: baseline, tex-all, tex-sp or tex-cp.
    #[arg(long)]
    config: Option<String>,
    /// Quantizer, repeatable.
    #[arg(long)]
    qp: Vec<u8>,
    /// TEXW1 classifier weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Video name used in output file names and reports.
    #[arg(long)]
    video: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// GF interval of tex-all.
    #[arg(long)]
    gf_interval: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Report JSON files written by `encode`.
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise allowance of the monotonicity check, percentage points.
    #[arg(long, default_value_t = 1.0)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct RoundtripArgs {
    /// TEXC1 stream.
    #[arg(long)]
    input: PathBuf,
    /// Optional path for the decoded frames as raw YUV 4:2:0.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSettings {
    pub fast_threshold: u8,
    pub ransac_iters: usize,
    pub ransac_tol: f64,
    pub seed: u64,
}

impl Default for MotionSettings {
    fn default() -> Self {
        let m = MotionParams::default();
        Self {
            fast_threshold: m.fast_threshold,
            ransac_iters: m.ransac.iters,
            ransac_tol: m.ransac.inlier_tol,
            seed: m.ransac.seed,
        }
    }
}

/// JSON run configuration. Every field is optional in the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub size: Option<String>,
    pub config: CodingConfig,
    pub qp: Vec<u8>,
    pub weights: Option<PathBuf>,
    pub threshold: f64,
    pub refine: RefineConfig,
    pub motion: MotionSettings,
    pub gf_interval: usize,
    pub out: PathBuf,
    pub video: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: InputFormat::PngDir,
            size: None,
            config: CodingConfig::TexCp,
            qp: vec![16, 24, 32, 40],
            weights: None,
            threshold: AnalysisParams::default().threshold,
            refine: RefineConfig::default(),
            motion: MotionSettings::default(),
            gf_interval: GF_INTERVAL,
            out: PathBuf::from("out"),
            video: None,
        }
    }
}

impl RunConfig {
    pub fn motion_params(&self) -> MotionParams {
        let mut m = MotionParams {
            fast_threshold: self.motion.fast_threshold,
            ..MotionParams::default()
        };
        m.ransac.iters = self.motion.ransac_iters;
        m.ransac.inlier_tol = self.motion.ransac_tol;
        m.ransac.seed = self.motion.seed;
        m
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        AnalysisParams {
            threshold: self.threshold,
            refine: self.refine,
        }
    }

    pub fn video_name(&self) -> String {
        self.video.clone().unwrap_or_else(|| {
            self.input
                .as_deref()
                .and_then(Path::file_stem)
                .map_or_else(|| "clip".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        code,
        message: e.to_string(),
    }
}

fn input_err(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.run_config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| input_err(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &args.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &args.format {
        cfg.format = v.parse().map_err(fail(EXIT_INPUT))?;
    }
    if let Some(v) = &args.size {
        cfg.size = Some(v.clone());
    }
    if let Some(v) = &args.config {
        cfg.config = v.parse().map_err(fail(EXIT_INPUT))?;
    }
    if !args.qp.is_empty() {
        cfg.qp = args.qp.clone();
    }
    if let Some(v) = &args.weights {
        cfg.weights = Some(v.clone());
    }
    if let Some(v) = args.seed {
        cfg.motion.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &args.video {
        cfg.video = Some(v.clone());
    }
    if let Some(v) = args.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = args.gf_interval {
        cfg.gf_interval = v;
    }
    if let Some(q) = cfg.qp.iter().find(|&&q| q > 63) {
        return Err(input_err(format!("qp {q} outside 0..=63")));
    }
    if cfg.qp.is_empty() {
        return Err(input_err("no qp given"));
    }
    Ok(cfg)
}

fn load_clip(cfg: &RunConfig) -> Result<SourceClip, Failure> {
    let input = cfg.input.as_deref().ok_or_else(|| input_err("--input is required"))?;
    if !input.exists() {
        return Err(input_err(format!("input {} does not exist", input.display())));
    }
    let size = cfg.size.as_deref().map(parse_size).transpose().map_err(fail(EXIT_INPUT))?;
    read_clip(input, cfg.format, size).map_err(fail(EXIT_INPUT))
}

fn load_weights(cfg: &RunConfig) -> Result<CnnWeights, Failure> {
    let p = cfg.weights.as_deref().ok_or_else(|| input_err("--weights is required"))?;
    CnnWeights::load(p).map_err(|e| input_err(format!("weights {}: {e}", p.display())))
}

fn write(path: &Path, bytes: &[u8], code: i32) -> Result<(), Failure> {
    write_atomic(path, bytes).map_err(|e| Failure {
        code,
        message: format!("{}: {e}", path.display()),
    })
}

#[derive(Serialize)]
struct AnalyzeSummary {
    video: String,
    frames: usize,
    grid_cols: usize,
    grid_rows: usize,
    threshold: f64,
    raw_coverage: Vec<f64>,
    refined_coverage: Vec<f64>,
    mean_raw_coverage: f64,
    mean_refined_coverage: f64,
}

fn cmd_analyze(args: &RunArgs) -> Result<String, Failure> {
    let cfg = resolve(args)?;
    let weights = load_weights(&cfg)?;
    let clip = load_clip(&cfg)?;
    let a = analyze_clip(&clip, &weights, &cfg.analysis_params()).map_err(fail(EXIT_INPUT))?;
    let grid = clip.frames[0].grid();
    let fraction = |m: &crate::frame::TextureMask| m.texture_count() as f64 / grid.len().max(1) as f64;
    for (i, (raw, refined)) in a.raw.iter().zip(&a.refined).enumerate() {
        let mut buf = Vec::new();
        write_mask_pgm(refined, &mut buf).map_err(fail(EXIT_INPUT))?;
        write(&cfg.out.join("masks").join(format!("frame_{i:04}.pgm")), &buf, EXIT_INPUT)?;
        buf.clear();
        write_mask_pgm(raw, &mut buf).map_err(fail(EXIT_INPUT))?;
        write(&cfg.out.join("raw").join(format!("frame_{i:04}.pgm")), &buf, EXIT_INPUT)?;
        let png = overlay_png(&clip.rgb[i], refined).map_err(fail(EXIT_INPUT))?;
        write(&cfg.out.join("overlays").join(format!("frame_{i:04}.png")), &png, EXIT_INPUT)?;
    }
    let raw_coverage: Vec<f64> = a.raw.iter().map(fraction).collect();
    let refined_coverage: Vec<f64> = a.refined.iter().map(fraction).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let summary = AnalyzeSummary {
        video: cfg.video_name(),
        frames: clip.len(),
        grid_cols: grid.cols,
        grid_rows: grid.rows,
        threshold: cfg.threshold,
        mean_raw_coverage: mean(&raw_coverage),
        mean_refined_coverage: mean(&refined_coverage),
        raw_coverage,
        refined_coverage,
    };
    let json = serde_json::to_vec_pretty(&summary).map_err(|e| fail(EXIT_INPUT)(e.into()))?;
    write(&cfg.out.join("summary.json"), &json, EXIT_INPUT)?;
    Ok(format!(
        "analyzed {} frames: mean texture coverage {:.1}% raw, {:.1}% refined\n",
        summary.frames,
        summary.mean_raw_coverage * 100.0,
        summary.mean_refined_coverage * 100.0
    ))
}

fn cmd_encode(args: &RunArgs) -> Result<String, Failure> {
    let cfg = resolve(args)?;
    let clip = load_clip(&cfg)?;
    // baseline encodes never see the masks; with weights they still feed the metrics
    let analysis = match (&cfg.weights, cfg.config.uses_texture()) {
        (None, true) => return Err(input_err(format!("{} needs --weights", cfg.config))),
        (None, false) => None,
        (Some(_), _) => {
            let w = load_weights(&cfg)?;
            Some(analyze_clip(&clip, &w, &cfg.analysis_params()).map_err(fail(EXIT_INPUT))?)
        }
    };
    let masks = analysis.as_ref().map(|a| a.refined.as_slice());
    let video = cfg.video_name();
    let mut log = String::new();
    for &qp in &cfg.qp {
        let params = EncodeParams {
            config: cfg.config,
            qp,
            gf_interval: cfg.gf_interval,
            motion: cfg.motion_params(),
            ..EncodeParams::default()
        };
        let enc = encode_with_masks(&clip.frames, masks, &params).map_err(fail(EXIT_CODEC))?;
        let report = build_report(&video, &clip, masks, &enc).map_err(fail(EXIT_CODEC))?;
        let stem = format!("{video}_{}_qp{qp}", cfg.config);
        write(&cfg.out.join(format!("{stem}.texc")), &enc.bytes, EXIT_CODEC)?;
        let json = serde_json::to_vec_pretty(&report).map_err(|e| fail(EXIT_CODEC)(e.into()))?;
        write(&cfg.out.join(format!("{stem}.json")), &json, EXIT_CODEC)?;
        let mut csv = Vec::new();
        write_models_csv(&enc.model_records(), &mut csv).map_err(fail(EXIT_CODEC))?;
        write(&cfg.out.join(format!("{stem}_models.csv")), &csv, EXIT_CODEC)?;
        let _ = writeln!(
            log,
            "{stem}: {} bytes, {:.1} bits/frame, psnr {} dB, texture {:.1}%",
            enc.bytes.len(),
            report.bits_per_frame,
            report.psnr_full,
            report.coverage_pct
        );
    }
    Ok(log)
}

fn cmd_compare(args: &CompareArgs) -> Result<String, Failure> {
    let compare_err = |message: String| Failure {
        code: EXIT_COMPARE,
        message,
    };
    if args.reports.len() < 2 {
        return Err(compare_err("compare needs at least two reports".into()));
    }
    let mut reports = Vec::new();
    for p in &args.reports {
        let text = fs::read_to_string(p).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
        let r: EncodeReport =
            serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    let (base, tex): (Vec<EncodeReport>, Vec<EncodeReport>) =
        reports.into_iter().partition(|r| r.config == CodingConfig::Baseline);
    if base.is_empty() || tex.is_empty() {
        return Err(compare_err("need baseline and texture-mode reports".into()));
    }
    let rows = build_comparison(&base, &tex).map_err(|e| compare_err(e.to_string()))?;
    let trends = saving_trends(&rows, args.tolerance);
    let table = comparison_table(&rows);
    let mut out = table.clone();
    for t in &trends {
        let points: Vec<String> = t.points.iter().map(|(q, s)| format!("qp{q} {s:.2}")).collect();
        let _ = writeln!(
            out,
            "trend {} {}: {} -> savings {} with qp",
            t.video,
            t.config,
            points.join(", "),
            if t.monotone { "shrink" } else { "do not shrink" }
        );
    }
    if let Some(dir) = &args.out {
        write(&dir.join("comparison.csv"), comparison_csv(&rows).as_bytes(), EXIT_COMPARE)?;
        write(&dir.join("comparison.txt"), table.as_bytes(), EXIT_COMPARE)?;
        write(&dir.join("saving_vs_qp.csv"), trend_csv(&trends).as_bytes(), EXIT_COMPARE)?;
    }
    Ok(out)
}

fn cmd_roundtrip(args: &RoundtripArgs) -> Result<String, Failure> {
    let bytes = fs::read(&args.input).map_err(|e| input_err(format!("{}: {e}", args.input.display())))?;
    let verify_err = |message: String| Failure {
        code: EXIT_VERIFY,
        message,
    };
    let dec = decode_sequence(&bytes).map_err(|e| verify_err(format!("FAIL: {e}")))?;
    let mut out = String::new();
    for (d, ok) in dec.crc_ok.iter().enumerate() {
        if !ok {
            let _ = writeln!(out, "frame {d}: checksum mismatch");
        }
    }
    if let Some(p) = &args.out {
        write(p, &crate::io::write_yuv420(&dec.frames), EXIT_VERIFY)?;
    }
    if dec.all_crc_ok() {
        let _ = writeln!(out, "PASS: {} frames", dec.frames.len());
        Ok(out)
    } else {
        let _ = write!(out, "FAIL");
        Err(verify_err(out))
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the command line and returns the exit code. Output goes to
/// stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("texlab: {}", f.message);
            f.code
        }
    }
}
