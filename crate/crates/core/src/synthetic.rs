//! Deterministic synthetic clips used by the examples and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::frame::{chroma_dims, Frame, Plane, SourceClip};
use crate::motion::AffineModel;

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Uniform noise in `[-amplitude, amplitude]` around zero, row-major.
pub fn noise_field(width: usize, height: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..width * height)
        .map(|_| rng.gen_range(-amplitude..=amplitude))
        .collect()
}

/// Luma plane of uniform noise around `mean`.
pub fn noise_plane(width: usize, height: usize, mean: f64, amplitude: f64, seed: u64) -> Plane {
    let data = noise_field(width, height, amplitude, seed)
        .into_iter()
        .map(|v| clamp_u8(mean + v))
        .collect();
    Plane::new(width, height, data).expect("sized buffer")
}

fn flat_chroma(width: usize, height: usize, u: u8, v: u8) -> (Plane, Plane) {
    let (cw, ch) = chroma_dims(width, height);
    (Plane::filled(cw, ch, u), Plane::filled(cw, ch, v))
}

/// A horizontally panning noise texture under a smooth, static top band.
///
/// Rows below `smooth_rows` show a static noise pattern that moves right by
/// `speed` pixels per frame, with per-frame dynamic noise and a brightness
/// ramp of `ramp` gray levels per frame on top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanFixture {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub speed: usize,
    pub smooth_rows: usize,
    pub base: f64,
    pub amplitude: f64,
    pub dynamic_amplitude: f64,
    pub ramp: f64,
    pub seed: u64,
}

impl Default for PanFixture {
    fn default() -> Self {
        Self {
            width: 256,
            height: 128,
            frames: 32,
            speed: 2,
            smooth_rows: 32,
            base: 100.0,
            amplitude: 48.0,
            dynamic_amplitude: 7.0,
            ramp: 2.0,
            seed: 7,
        }
    }
}

impl PanFixture {
    /// No motion, no dynamic noise, no ramp: every frame is identical.
    pub fn still(frames: usize) -> Self {
        Self {
            frames,
            speed: 0,
            dynamic_amplitude: 0.0,
            ramp: 0.0,
            ..Self::default()
        }
    }

    /// Model that maps frame `t` into frame `t + dt`.
    pub fn true_motion(&self, dt: i64) -> AffineModel {
        AffineModel::translation(dt as f64 * self.speed as f64, 0.0)
    }

    pub fn frame(&self, t: usize) -> Frame {
        let (w, h) = (self.width, self.height);
        let span = w + self.speed * self.frames;
        let tex_h = h - self.smooth_rows;
        let pattern = noise_field(span, tex_h, self.amplitude, self.seed);
        let dynamic = noise_field(w, tex_h, self.dynamic_amplitude, self.seed ^ (0x9e37_79b9 + t as u64));
        let offset = self.speed * (self.frames - t);
        let mut y = Plane::filled(w, h, 0);
        for row in 0..h {
            for x in 0..w {
                let v = if row < self.smooth_rows {
                    60.0 + x as f64 * 0.25 + row as f64 * 0.5
                } else {
                    let r = row - self.smooth_rows;
                    self.base + pattern[r * span + x + offset] + dynamic[r * w + x] + self.ramp * t as f64
                };
                y.set(x, row, clamp_u8(v));
            }
        }
        let (mut u, mut v) = flat_chroma(w, h, 128, 128);
        for row in self.smooth_rows / 2..u.height() {
            for x in 0..u.width() {
                u.set(x, row, 120);
                v.set(x, row, 134);
            }
        }
        Frame::new(t, y, u, v).expect("valid fixture geometry")
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.frames).map(|t| self.frame(t)).collect()
    }

    pub fn clip(&self) -> Result<SourceClip> {
        SourceClip::from_frames(self.frames())
    }
}

/// Static noise texture in the lower rows plus a flat square that moves by
/// `object_step` per frame inside the smooth top band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositeFixture {
    pub pan: PanFixture,
    pub object_size: usize,
    pub object_step: (i64, i64),
}

impl Default for CompositeFixture {
    fn default() -> Self {
        Self {
            pan: PanFixture {
                smooth_rows: 64,
                dynamic_amplitude: 0.0,
                ramp: 0.0,
                ..PanFixture::default()
            },
            object_size: 20,
            object_step: (-5, 1),
        }
    }
}

impl CompositeFixture {
    pub fn frame(&self, t: usize) -> Frame {
        let mut f = self.pan.frame(t);
        let s = self.object_size as i64;
        let x0 = 150 + self.object_step.0 * t as i64;
        let y0 = 16 + self.object_step.1 * t as i64;
        let luma = f.plane_mut(0);
        for y in y0..y0 + s {
            for x in x0..x0 + s {
                if x >= 0 && y >= 0 && (x as usize) < luma.width() && (y as usize) < luma.height() {
                    // checker inside the square gives the detector corners to find
                    let on = ((x - x0) / 5 + (y - y0) / 5) % 2 == 0;
                    luma.set(x as usize, y as usize, if on { 230 } else { 20 });
                }
            }
        }
        f
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.pan.frames).map(|t| self.frame(t)).collect()
    }
}

/// Noise texture that slowly rotates and zooms about the frame centre, so
/// motion models have fractional, non-translational parameters.
pub fn rotating_texture(width: usize, height: usize, frames: usize, seed: u64) -> Vec<Frame> {
    let big = 2 * width.max(height);
    let field = noise_field(big, big, 40.0, seed);
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    (0..frames)
        .map(|t| {
            let ang = 0.004 * t as f64;
            let zoom = 1.0 + 0.003 * t as f64;
            let (s, c) = ang.sin_cos();
            let mut y = Plane::filled(width, height, 0);
            for row in 0..height {
                for x in 0..width {
                    let (dx, dy) = (x as f64 - cx, row as f64 - cy);
                    let sx = (c * dx - s * dy) / zoom + big as f64 / 2.0;
                    let sy = (s * dx + c * dy) / zoom + big as f64 / 2.0;
                    let v = bilinear(&field, big, sx, sy);
                    y.set(x, row, clamp_u8(120.0 + v));
                }
            }
            let (u, v) = flat_chroma(width, height, 110, 140);
            Frame::new(t, y, u, v).expect("valid fixture geometry")
        })
        .collect()
}

fn bilinear(field: &[f64], size: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (size - 1) as f64);
    let y = y.clamp(0.0, (size - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(size - 1), (y0 + 1).min(size - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |xx: usize, yy: usize| field[yy * size + xx];
    (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1))
}

/// Smooth scene with a drifting bright disc; nothing in it is texture.
pub fn smooth_scene(width: usize, height: usize, frames: usize) -> Vec<Frame> {
    (0..frames)
        .map(|t| {
            let mut y = Plane::filled(width, height, 0);
            let (dx, dy) = (30.0 + 3.0 * t as f64, 40.0 + t as f64);
            for row in 0..height {
                for x in 0..width {
                    let d = ((x as f64 - dx).powi(2) + (row as f64 - dy).powi(2)).sqrt();
                    let base = 50.0 + 0.6 * x as f64 + 0.3 * row as f64;
                    y.set(x, row, clamp_u8(if d < 14.0 { 215.0 } else { base }));
                }
            }
            let (u, v) = flat_chroma(width, height, 100 + (t % 3) as u8, 150);
            Frame::new(t, y, u, v).expect("valid fixture geometry")
        })
        .collect()
}
