//! TEXC1 container: file header and per-frame records around the
//! range-coded payloads. Layout is documented in `docs/bitstream.md`.

use super::plan::FrameKind;
use crate::error::{Error, Result};
use crate::motion::AffineModel;

pub const MAGIC: &[u8; 5] = b"TEXC1";
pub const VERSION: u8 = 1;
pub const FLAG_TEXTURE: u8 = 1;
/// Largest number of conventional references or texture models per frame.
pub const MAX_REFS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub display_index: u32,
    pub kind: FrameKind,
    pub qp: u8,
    pub texture_active: bool,
    /// Conventional references, display indices.
    pub refs: Vec<u32>,
    /// Texture references with their models, in prediction order.
    pub models: Vec<(u32, AffineModel)>,
    pub payload: Vec<u8>,
    /// File offset of the payload; filled in by `parse`.
    pub payload_offset: usize,
    /// CRC32 of the cropped reconstruction.
    pub crc: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bitstream {
    pub width: u16,
    pub height: u16,
    /// Coding order.
    pub frames: Vec<FrameRecord>,
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.frames.len() as u32).to_le_bytes());
        for f in &self.frames {
            out.extend_from_slice(&f.display_index.to_le_bytes());
            out.push(f.kind.code());
            out.push(f.qp);
            out.push(if f.texture_active { FLAG_TEXTURE } else { 0 });
            out.push(f.refs.len() as u8);
            for r in &f.refs {
                out.extend_from_slice(&r.to_le_bytes());
            }
            out.push(f.models.len() as u8);
            for (r, m) in &f.models {
                out.extend_from_slice(&r.to_le_bytes());
                for p in m.params() {
                    out.extend_from_slice(&(p as f32).to_le_bytes());
                }
            }
            out.extend_from_slice(&(f.payload.len() as u32).to_le_bytes());
            out.extend_from_slice(&f.payload);
            out.extend_from_slice(&f.crc.to_le_bytes());
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(r.err_at(0, "bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(r.err_at(5, &format!("unsupported version {version}")));
        }
        let width = r.u16()?;
        let height = r.u16()?;
        if width == 0 || height == 0 {
            return Err(r.err_at(6, "zero frame dimension"));
        }
        let n = r.u32()? as usize;
        let mut frames = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            frames.push(r.frame()?);
        }
        if r.pos != bytes.len() {
            return Err(r.err_at(r.pos, "trailing bytes after the last frame"));
        }
        Ok(Self { width, height, frames })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err_at(&self, offset: usize, reason: &str) -> Error {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(self.err_at(self.bytes.len(), "unexpected end of stream"));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let n = self.u8()? as usize;
        if n > MAX_REFS {
            return Err(self.err_at(at, &format!("{n} {what} exceeds {MAX_REFS}")));
        }
        Ok(n)
    }

    fn frame(&mut self) -> Result<FrameRecord> {
        let display_index = self.u32()?;
        let at = self.pos;
        let kind = FrameKind::from_code(self.u8()?).ok_or_else(|| self.err_at(at, "unknown frame kind"))?;
        let qp = self.u8()?;
        let at = self.pos;
        let flags = self.u8()?;
        if flags & !FLAG_TEXTURE != 0 {
            return Err(self.err_at(at, "unknown frame flags"));
        }
        let texture_active = flags & FLAG_TEXTURE != 0;
        let n_refs = self.count("references")?;
        let refs = (0..n_refs).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let at = self.pos;
        let n_models = self.count("models")?;
        if texture_active != (n_models > 0) {
            return Err(self.err_at(at, "texture flag and model count disagree"));
        }
        let mut models = Vec::with_capacity(n_models);
        for _ in 0..n_models {
            let r = self.u32()?;
            let mut p = [0f64; 6];
            for v in &mut p {
                *v = f64::from(self.f32()?);
            }
            models.push((r, AffineModel::from_params(p)));
        }
        let len = self.u32()? as usize;
        let payload_offset = self.pos;
        let payload = self.take(len)?.to_vec();
        let crc = self.u32()?;
        Ok(FrameRecord {
            display_index,
            kind,
            qp,
            texture_active,
            refs,
            models,
            payload,
            payload_offset,
            crc,
        })
    }
}
