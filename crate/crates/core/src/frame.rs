//! Pixel containers, block-grid geometry and color conversion.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of an analysis block in pixels.
pub const BLOCK_SIZE: usize = 32;

/// Smallest frame the codec accepts.
pub const MIN_FRAME_DIM: usize = 64;

/// A single 8-bit sample plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "plane buffer has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped to the plane edge.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Copy of this plane grown to `width`x`height` by edge replication.
    pub fn padded_to(&self, width: usize, height: usize) -> Plane {
        let mut out = Plane::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                out.data[y * width + x] = self.get_clamped(x as i64, y as i64);
            }
        }
        out
    }

    /// Top-left `width`x`height` window of this plane.
    pub fn cropped(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.data[y * self.width..y * self.width + width]);
        }
        Plane {
            width,
            height,
            data,
        }
    }
}

/// Planar 4:2:0 8-bit picture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    index: usize,
    planes: [Plane; 3],
}

impl Frame {
    pub fn new(index: usize, y: Plane, u: Plane, v: Plane) -> Result<Self> {
        let (w, h) = (y.width(), y.height());
        if w < MIN_FRAME_DIM || h < MIN_FRAME_DIM {
            return Err(Error::Dimension(format!(
                "frame {w}x{h} is smaller than {MIN_FRAME_DIM}x{MIN_FRAME_DIM}"
            )));
        }
        let (cw, ch) = chroma_dims(w, h);
        for p in [&u, &v] {
            if p.width() != cw || p.height() != ch {
                return Err(Error::Dimension(format!(
                    "chroma plane {}x{} does not match {cw}x{ch}",
                    p.width(),
                    p.height()
                )));
            }
        }
        Ok(Self {
            index,
            planes: [y, u, v],
        })
    }

    /// Uniform frame, mostly useful for tests.
    pub fn filled(index: usize, width: usize, height: usize, yuv: [u8; 3]) -> Result<Self> {
        let (cw, ch) = chroma_dims(width, height);
        Self::new(
            index,
            Plane::filled(width, height, yuv[0]),
            Plane::filled(cw, ch, yuv[1]),
            Plane::filled(cw, ch, yuv[2]),
        )
    }

    /// Builds a frame from raw bytes laid out as Y then U then V.
    pub fn from_yuv420_bytes(index: usize, width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let (cw, ch) = chroma_dims(width, height);
        let (ys, cs) = (width * height, cw * ch);
        if bytes.len() != ys + 2 * cs {
            return Err(Error::Dimension(format!(
                "yuv420 frame needs {} bytes, got {}",
                ys + 2 * cs,
                bytes.len()
            )));
        }
        Self::new(
            index,
            Plane::new(width, height, bytes[..ys].to_vec())?,
            Plane::new(cw, ch, bytes[ys..ys + cs].to_vec())?,
            Plane::new(cw, ch, bytes[ys + cs..].to_vec())?,
        )
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    #[inline]
    pub fn luma(&self) -> &Plane {
        &self.planes[0]
    }

    #[inline]
    pub fn plane(&self, i: usize) -> &Plane {
        &self.planes[i]
    }

    #[inline]
    pub fn plane_mut(&mut self, i: usize) -> &mut Plane {
        &mut self.planes[i]
    }

    pub fn planes(&self) -> &[Plane; 3] {
        &self.planes
    }

    pub fn grid(&self) -> BlockGrid {
        BlockGrid::for_dims(self.width(), self.height())
    }

    /// Y, U and V samples concatenated.
    pub fn to_yuv420_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in &self.planes {
            out.extend_from_slice(p.data());
        }
        out
    }

    /// CRC32 over Y, U and V in that order.
    pub fn crc32(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for p in &self.planes {
            h.update(p.data());
        }
        h.finalize()
    }

    /// Edge-replicated copy with luma dimensions `width`x`height`.
    pub(crate) fn padded_to(&self, width: usize, height: usize) -> Frame {
        let (cw, ch) = chroma_dims(width, height);
        Frame {
            index: self.index,
            planes: [
                self.planes[0].padded_to(width, height),
                self.planes[1].padded_to(cw, ch),
                self.planes[2].padded_to(cw, ch),
            ],
        }
    }

    pub(crate) fn cropped(&self, width: usize, height: usize) -> Frame {
        let (cw, ch) = chroma_dims(width, height);
        Frame {
            index: self.index,
            planes: [
                self.planes[0].cropped(width, height),
                self.planes[1].cropped(cw, ch),
                self.planes[2].cropped(cw, ch),
            ],
        }
    }
}

#[inline]
pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

/// Pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.bottom()
            && other.y < self.bottom()
    }

    pub fn quadrants(&self) -> [Rect; 4] {
        let (hw, hh) = (self.w / 2, self.h / 2);
        [
            Rect::new(self.x, self.y, hw, hh),
            Rect::new(self.x + hw, self.y, hw, hh),
            Rect::new(self.x, self.y + hh, hw, hh),
            Rect::new(self.x + hw, self.y + hh, hw, hh),
        ]
    }
}

/// The 32x32 analysis grid laid over a frame. Pixels right of `cols*32` or
/// below `rows*32` belong to no block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub cols: usize,
    pub rows: usize,
}

impl BlockGrid {
    pub fn for_dims(width: usize, height: usize) -> Self {
        Self {
            cols: width / BLOCK_SIZE,
            rows: height / BLOCK_SIZE,
        }
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_rect(&self, row: usize, col: usize) -> Result<Rect> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::Index {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(Rect::new(
            col * BLOCK_SIZE,
            row * BLOCK_SIZE,
            BLOCK_SIZE,
            BLOCK_SIZE,
        ))
    }

    /// Block containing pixel (x, y), if any.
    pub fn block_at(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        let (c, r) = (x / BLOCK_SIZE, y / BLOCK_SIZE);
        (r < self.rows && c < self.cols).then_some((r, c))
    }
}

/// Per-block classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    NonTexture,
    Texture(u8),
}

impl Label {
    #[inline]
    pub fn is_texture(self) -> bool {
        matches!(self, Label::Texture(_))
    }
}

/// Block-level texture segmentation of one frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextureMask {
    grid: BlockGrid,
    labels: Vec<Label>,
    frame_index: usize,
}

impl TextureMask {
    pub fn new(grid: BlockGrid, frame_index: usize) -> Self {
        Self {
            grid,
            labels: vec![Label::NonTexture; grid.len()],
            frame_index,
        }
    }

    pub fn from_labels(grid: BlockGrid, frame_index: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} labels for a {}x{} grid",
                labels.len(),
                grid.rows,
                grid.cols
            )));
        }
        Ok(Self {
            grid,
            labels,
            frame_index,
        })
    }

    /// Builds a mask from a row-major boolean pattern; texture blocks get cluster 0.
    pub fn from_bools(grid: BlockGrid, frame_index: usize, bits: &[bool]) -> Result<Self> {
        let labels = bits
            .iter()
            .map(|&b| if b { Label::Texture(0) } else { Label::NonTexture })
            .collect();
        Self::from_labels(grid, frame_index, labels)
    }

    #[inline]
    pub fn grid(&self) -> BlockGrid {
        self.grid
    }

    #[inline]
    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn with_frame_index(mut self, frame_index: usize) -> Self {
        self.frame_index = frame_index;
        self
    }

    #[inline]
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.grid.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, label: Label) {
        self.labels[row * self.grid.cols + col] = label;
    }

    #[inline]
    pub fn is_texture(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_texture()
    }

    /// Remainder-strip pixels are never texture.
    pub fn is_texture_pixel(&self, x: usize, y: usize) -> bool {
        self.grid
            .block_at(x, y)
            .is_some_and(|(r, c)| self.is_texture(r, c))
    }

    /// Same as [`is_texture_pixel`](Self::is_texture_pixel) for real-valued positions;
    /// anything outside the grid is non-texture.
    pub fn is_texture_point(&self, x: f64, y: f64) -> bool {
        if !(x >= 0.0 && y >= 0.0) {
            return false;
        }
        let (xf, yf) = (x.floor(), y.floor());
        if xf >= (self.grid.cols * BLOCK_SIZE) as f64 || yf >= (self.grid.rows * BLOCK_SIZE) as f64 {
            return false;
        }
        self.is_texture_pixel(xf as usize, yf as usize)
    }

    pub fn texture_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_texture()).count()
    }

    pub fn has_texture(&self) -> bool {
        self.labels.iter().any(|l| l.is_texture())
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_texture()).collect()
    }
}

/// BT.601 full-range RGB to 4:2:0.
pub fn rgb_to_yuv420(rgb: &RgbImage, index: usize) -> Result<Frame> {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::Dimension(format!(
            "rgb image {w}x{h} must have even dimensions"
        )));
    }
    let (cw, ch) = (w / 2, h / 2);
    let mut y_plane = vec![0u8; w * h];
    let mut u_acc = vec![0f64; cw * ch];
    let mut v_acc = vec![0f64; cw * ch];
    for (x, y, px) in rgb.enumerate_pixels() {
        let (x, y) = (x as usize, y as usize);
        let [r, g, b] = px.0.map(f64::from);
        y_plane[y * w + x] = to_u8(0.299 * r + 0.587 * g + 0.114 * b);
        let ci = (y / 2) * cw + x / 2;
        u_acc[ci] += -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
        v_acc[ci] += 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    }
    let u_plane = u_acc.iter().map(|&s| to_u8(s / 4.0)).collect();
    let v_plane = v_acc.iter().map(|&s| to_u8(s / 4.0)).collect();
    Frame::new(
        index,
        Plane::new(w, h, y_plane)?,
        Plane::new(cw, ch, u_plane)?,
        Plane::new(cw, ch, v_plane)?,
    )
}

/// Inverse of [`rgb_to_yuv420`] with nearest-neighbour chroma upsampling.
pub fn yuv420_to_rgb(frame: &Frame) -> RgbImage {
    let (w, h) = (frame.width(), frame.height());
    let (yp, up, vp) = (frame.plane(0), frame.plane(1), frame.plane(2));
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let luma = f64::from(yp.get(x, y));
        let u = f64::from(up.get(x / 2, y / 2)) - 128.0;
        let v = f64::from(vp.get(x / 2, y / 2)) - 128.0;
        image::Rgb([
            to_u8(luma + 1.402 * v),
            to_u8(luma - 0.344136 * u - 0.714136 * v),
            to_u8(luma + 1.772 * u),
        ])
    })
}

#[inline]
fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// A clip in both representations: YUV for coding, RGB for the analyzer.
#[derive(Clone, Debug)]
pub struct SourceClip {
    pub frames: Vec<Frame>,
    pub rgb: Vec<RgbImage>,
}

impl SourceClip {
    pub fn from_rgb(rgb: Vec<RgbImage>) -> Result<Self> {
        let frames = rgb
            .iter()
            .enumerate()
            .map(|(i, img)| rgb_to_yuv420(img, i))
            .collect::<Result<Vec<_>>>()?;
        Self::check(&frames)?;
        Ok(Self { frames, rgb })
    }

    pub fn from_frames(frames: Vec<Frame>) -> Result<Self> {
        Self::check(&frames)?;
        let rgb = frames.iter().map(yuv420_to_rgb).collect();
        Ok(Self { frames, rgb })
    }

    fn check(frames: &[Frame]) -> Result<()> {
        let Some(first) = frames.first() else {
            return Err(Error::Input("clip has no frames".into()));
        };
        if frames
            .iter()
            .any(|f| f.width() != first.width() || f.height() != first.height())
        {
            return Err(Error::Dimension("frames differ in size".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }
}
