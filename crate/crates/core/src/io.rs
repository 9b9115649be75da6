//! Clip ingestion and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{chroma_dims, Frame, SourceClip};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// Directory of PNG frames, taken in file-name order.
    PngDir,
    /// Raw planar 8-bit YUV 4:2:0, frames back to back.
    Yuv420,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "png-dir" => Ok(Self::PngDir),
            "yuv420" => Ok(Self::Yuv420),
            _ => Err(Error::Input(format!("unknown input format {s:?} (png-dir, yuv420)"))),
        }
    }
}

/// Parses `WxH`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Input(format!("size {s:?} is not WxH"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Input(format!("no PNG files in {}", dir.display())));
    }
    Ok(files)
}

pub fn read_png_dir(dir: &Path) -> Result<SourceClip> {
    let rgb = png_files(dir)?
        .iter()
        .map(|p| Ok(image::open(p)?.to_rgb8()))
        .collect::<Result<Vec<_>>>()?;
    SourceClip::from_rgb(rgb)
}

pub fn parse_yuv420(bytes: &[u8], width: usize, height: usize) -> Result<SourceClip> {
    let (cw, ch) = chroma_dims(width, height);
    let frame_len = width * height + 2 * cw * ch;
    if bytes.is_empty() || bytes.len() % frame_len != 0 {
        return Err(Error::Input(format!(
            "{} bytes is not a whole number of {width}x{height} frames",
            bytes.len()
        )));
    }
    let frames = bytes
        .chunks_exact(frame_len)
        .enumerate()
        .map(|(i, c)| Frame::from_yuv420_bytes(i, width, height, c))
        .collect::<Result<Vec<_>>>()?;
    SourceClip::from_frames(frames)
}

pub fn read_clip(path: &Path, format: InputFormat, size: Option<(usize, usize)>) -> Result<SourceClip> {
    match format {
        InputFormat::PngDir => read_png_dir(path),
        InputFormat::Yuv420 => {
            let (w, h) = size.ok_or_else(|| Error::Input("yuv420 input needs --size WxH".into()))?;
            parse_yuv420(&fs::read(path)?, w, h)
        }
    }
}

pub fn write_yuv420(frames: &[Frame]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.to_yuv420_bytes()).collect()
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
