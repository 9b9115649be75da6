//! Rate, fidelity, coverage and flicker measurements, plus the comparison table.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{CodingConfig, FrameKind};
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane, TextureMask};

/// PSNR in dB, or the sentinel for a zero-error comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    pub fn from_mse(mse: f64) -> Self {
        if mse == 0.0 {
            Psnr::Identical
        } else {
            Psnr::Db(10.0 * (255.0f64 * 255.0 / mse).log10())
        }
    }

    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Identical => None,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.2}"),
            Psnr::Identical => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Db(v) => s.serialize_f64(*v),
            Psnr::Identical => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Psnr::Db(v)),
            Repr::Text(t) if t == "inf" => Ok(Psnr::Identical),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad PSNR value {t:?}"))),
        }
    }
}

/// Bits per frame of a stream of `bytes` bytes.
pub fn data_rate(bytes: usize, n_frames: usize) -> Result<f64> {
    if n_frames == 0 {
        return Err(Error::Input("data rate of zero frames".into()));
    }
    Ok(bytes as f64 * 8.0 / n_frames as f64)
}

/// Luma squared error and sample count, optionally over non-texture pixels only.
pub fn luma_sse(a: &Frame, b: &Frame, nontexture_of: Option<&TextureMask>) -> Result<(f64, usize)> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (mut sse, mut n) = (0f64, 0usize);
    for y in 0..a.height() {
        let (ra, rb) = (a.luma().row(y), b.luma().row(y));
        for x in 0..a.width() {
            if nontexture_of.is_some_and(|m| m.is_texture_pixel(x, y)) {
                continue;
            }
            let d = f64::from(ra[x]) - f64::from(rb[x]);
            sse += d * d;
            n += 1;
        }
    }
    Ok((sse, n))
}

/// Luma PSNR; with a mask, only its non-texture pixels count.
pub fn psnr(a: &Frame, b: &Frame, nontexture_of: Option<&TextureMask>) -> Result<Psnr> {
    let (sse, n) = luma_sse(a, b, nontexture_of)?;
    if n == 0 {
        return Err(Error::Undefined("PSNR over an empty region".into()));
    }
    Ok(Psnr::from_mse(sse / n as f64))
}

/// Mean SSIM of the luma planes over 8x8 windows placed every 4 pixels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Dimension("SSIM of frames with different sizes".into()));
    }
    Ok(ssim_plane(a.luma(), b.luma()))
}

fn ssim_plane(a: &Plane, b: &Plane) -> f64 {
    const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
    const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);
    let (w, h) = (a.width(), a.height());
    let (mut total, mut count) = (0f64, 0usize);
    for y0 in (0..=h.saturating_sub(8)).step_by(4) {
        for x0 in (0..=w.saturating_sub(8)).step_by(4) {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0f64, 0f64, 0f64, 0f64, 0f64);
            for y in y0..y0 + 8 {
                for x in x0..x0 + 8 {
                    let (p, q) = (f64::from(a.get(x, y)), f64::from(b.get(x, y)));
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let n = 64.0;
            let (ma, mb) = (sa / n, sb / n);
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            count += 1;
        }
    }
    total / count as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlickerScore {
    pub value: f64,
    /// Set when no frame pair shares a texture pixel; `value` is then 0.
    pub no_texture: bool,
}

fn temporal_activity(frames: &[Frame], masks: &[TextureMask]) -> Option<f64> {
    let mut per_pair = Vec::new();
    for t in 0..frames.len() - 1 {
        let (a, b) = (&frames[t], &frames[t + 1]);
        let (mut sum, mut n) = (0f64, 0usize);
        for y in 0..a.height() {
            for x in 0..a.width() {
                if masks[t].is_texture_pixel(x, y) && masks[t + 1].is_texture_pixel(x, y) {
                    sum += f64::from(a.luma().get(x, y).abs_diff(b.luma().get(x, y)));
                    n += 1;
                }
            }
        }
        if n > 0 {
            per_pair.push(sum / n as f64);
        }
    }
    (!per_pair.is_empty()).then(|| per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

/// Temporal luma activity inside texture regions of `recon`, minus the same
/// statistic on `source`. Positive values mean flicker was added.
pub fn flicker_score(recon: &[Frame], source: &[Frame], masks: &[TextureMask]) -> Result<FlickerScore> {
    if recon.len() < 2 || recon.len() != source.len() || masks.len() != recon.len() {
        return Err(Error::Input(format!(
            "flicker needs >= 2 frames and equal lengths, got {}/{}/{}",
            recon.len(),
            source.len(),
            masks.len()
        )));
    }
    match (temporal_activity(recon, masks), temporal_activity(source, masks)) {
        (Some(r), Some(s)) => Ok(FlickerScore {
            value: r - s,
            no_texture: false,
        }),
        _ => Ok(FlickerScore {
            value: 0.0,
            no_texture: true,
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub display_index: usize,
    pub coding_order: usize,
    pub kind: FrameKind,
    pub texture_enabled: bool,
    /// Texture mode was actually usable (models found).
    pub texture_active: bool,
    pub model_failure: Option<String>,
    /// Payload bits plus the fixed per-model header charge.
    pub bits: u64,
    pub payload_bytes: usize,
    pub psnr_full: Psnr,
    pub psnr_nontexture: Psnr,
    pub ssim_full: f64,
    /// Fraction of block-grid pixels coded in texture mode.
    pub texture_coverage: f64,
    pub texture_leaves: usize,
    pub conventional_leaves: usize,
    pub texture_coeff_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub video: String,
    pub config: CodingConfig,
    pub qp: u8,
    pub width: usize,
    pub height: usize,
    /// Display order.
    pub frames: Vec<FrameStats>,
    pub file_bytes: usize,
    pub total_bits: u64,
    pub bits_per_frame: f64,
    pub psnr_full: Psnr,
    pub psnr_nontexture: Psnr,
    pub ssim: f64,
    /// Mean coverage over texture-enabled frames, percent.
    pub coverage_pct: f64,
    pub flicker: FlickerScore,
    pub texture_coeff_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub video: String,
    pub qp: u8,
    pub config: CodingConfig,
    pub bits_per_frame: f64,
    /// Negative numbers are savings.
    pub rate_saving_pct: f64,
    pub psnr_full: Psnr,
    pub psnr_nontex: Psnr,
    pub ssim: f64,
    pub coverage_pct: f64,
    pub flicker: f64,
}

pub fn rate_saving_pct(bits_tex: f64, bits_base: f64) -> f64 {
    (bits_tex - bits_base) / bits_base * 100.0
}

/// Joins each report with the baseline of the same (video, qp). Baseline rows
/// are included with a saving of zero.
pub fn build_comparison(base: &[EncodeReport], tex: &[EncodeReport]) -> Result<Vec<ComparisonRow>> {
    let mut by_key: BTreeMap<(&str, u8), &EncodeReport> = BTreeMap::new();
    for b in base {
        if by_key.insert((b.video.as_str(), b.qp), b).is_some() {
            return Err(Error::Input(format!("duplicate baseline for {} qp {}", b.video, b.qp)));
        }
    }
    let row = |r: &EncodeReport, b: &EncodeReport| ComparisonRow {
        video: r.video.clone(),
        qp: r.qp,
        config: r.config,
        bits_per_frame: r.bits_per_frame,
        rate_saving_pct: rate_saving_pct(r.bits_per_frame, b.bits_per_frame),
        psnr_full: r.psnr_full,
        psnr_nontex: r.psnr_nontexture,
        ssim: r.ssim,
        coverage_pct: r.coverage_pct,
        flicker: r.flicker.value,
    };
    let mut rows: Vec<ComparisonRow> = base.iter().map(|b| row(b, b)).collect();
    for r in tex {
        let b = by_key.get(&(r.video.as_str(), r.qp)).ok_or_else(|| {
            Error::Input(format!("no baseline report for {} qp {}", r.video, r.qp))
        })?;
        rows.push(row(r, b));
    }
    rows.sort_by(|a, b| (&a.video, a.qp, a.config).cmp(&(&b.video, b.qp, b.config)));
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "video,qp,config,bits_per_frame,rate_saving_pct,psnr_full,psnr_nontex,ssim,coverage_pct,flicker";

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.2},{:.2},{},{},{:.4},{:.2},{:.4}",
            r.video,
            r.qp,
            r.config,
            r.bits_per_frame,
            r.rate_saving_pct,
            r.psnr_full,
            r.psnr_nontex,
            r.ssim,
            r.coverage_pct,
            r.flicker
        );
    }
    s
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut s = format!(
        "{:<12} {:>3} {:<8} {:>12} {:>9} {:>8} {:>8} {:>7} {:>9} {:>8}\n",
        "video", "qp", "config", "bits/frame", "saving%", "psnr", "psnr_nt", "ssim", "texture%", "flicker"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<12} {:>3} {:<8} {:>12.1} {:>9.2} {:>8} {:>8} {:>7.4} {:>9.2} {:>8.3}",
            r.video,
            r.qp,
            r.config.name(),
            r.bits_per_frame,
            r.rate_saving_pct,
            r.psnr_full.to_string(),
            r.psnr_nontex.to_string(),
            r.ssim,
            r.coverage_pct,
            r.flicker
        );
    }
    s
}

/// Savings of one (video, config) across qp, in ascending qp order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavingTrend {
    pub video: String,
    pub config: CodingConfig,
    pub points: Vec<(u8, f64)>,
    /// Saving magnitude never grows by more than the tolerance as qp rises.
    pub monotone: bool,
}

pub fn saving_trends(rows: &[ComparisonRow], tolerance_pp: f64) -> Vec<SavingTrend> {
    let mut groups: BTreeMap<(String, CodingConfig), Vec<(u8, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.config.uses_texture()) {
        groups
            .entry((r.video.clone(), r.config))
            .or_default()
            .push((r.qp, r.rate_saving_pct));
    }
    groups
        .into_iter()
        .map(|((video, config), mut points)| {
            points.sort_by_key(|p| p.0);
            let monotone = points
                .windows(2)
                .all(|w| (-w[1].1) <= (-w[0].1) + tolerance_pp);
            SavingTrend {
                video,
                config,
                points,
                monotone,
            }
        })
        .collect()
}

/// Plot-ready `config,qp,rate_saving_pct` lines.
pub fn trend_csv(trends: &[SavingTrend]) -> String {
    let mut s = String::from("video,config,qp,rate_saving_pct\n");
    for t in trends {
        for (qp, v) in &t.points {
            let _ = writeln!(s, "{},{},{},{:.2}", t.video, t.config, qp, v);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_rate_examples() {
        assert_eq!(data_rate(1000, 10).unwrap(), 800.0);
        assert!(data_rate(10, 0).is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let a = Frame::filled(0, 64, 64, [100, 128, 128]).unwrap();
        let b = Frame::filled(0, 64, 64, [101, 128, 128]).unwrap();
        assert_eq!(psnr(&a, &a, None).unwrap(), Psnr::Identical);
        let Psnr::Db(v) = psnr(&a, &b, None).unwrap() else { panic!() };
        assert_eq!(format!("{v:.2}"), "48.13");
    }

    #[test]
    fn empty_region_is_undefined() {
        let a = Frame::filled(0, 64, 64, [100, 128, 128]).unwrap();
        let grid = a.grid();
        let all = TextureMask::from_bools(grid, 0, &vec![true; grid.len()]).unwrap();
        assert!(matches!(psnr(&a, &a, Some(&all)), Err(Error::Undefined(_))));
    }

    #[test]
    fn ssim_of_identical_frames_is_one() {
        let a = crate::synthetic::PanFixture::still(1).frame(0);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saving_formatting() {
        assert_eq!(format!("{:.2}", rate_saving_pct(894.5, 1000.0)), "-10.55");
        assert_eq!(format!("{:.2}", rate_saving_pct(1000.0, 1000.0)), "0.00");
    }

    #[test]
    fn psnr_serializes_sentinel() {
        let s = serde_json::to_string(&[Psnr::Db(40.5), Psnr::Identical]).unwrap();
        assert_eq!(s, "[40.5,\"inf\"]");
        let back: Vec<Psnr> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Psnr::Db(40.5), Psnr::Identical]);
    }
}
