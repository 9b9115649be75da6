use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted |det| of the linear part.
pub const MIN_DET: f64 = 1e-3;

/// Maps a current-frame position (x, y) to `(a x + b y + tx, c x + d y + ty)` in the reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for AffineModel {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AffineModel {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            tx,
            ty,
            ..Self::IDENTITY
        }
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.b * y + self.tx,
            self.c * x + self.d * y + self.ty,
        )
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.tx, self.ty]
    }

    pub fn from_params(p: [f64; 6]) -> Self {
        Self {
            a: p[0],
            b: p[1],
            c: p[2],
            d: p[3],
            tx: p[4],
            ty: p[5],
        }
    }

    /// The model as it travels in a bitstream: every parameter rounded to f32.
    pub fn quantized(&self) -> Self {
        Self::from_params(self.params().map(|v| f64::from(v as f32)))
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if !det.is_finite() || det.abs() < MIN_DET {
            return None;
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Some(Self {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        })
    }

    /// Checks finiteness, the determinant bound and `|tx| <= width`, `|ty| <= height`.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::NoModel("non-finite parameter".into()));
        }
        if self.det().abs() < MIN_DET {
            return Err(Error::NoModel(format!("degenerate model, det {}", self.det())));
        }
        if self.tx.abs() > width as f64 || self.ty.abs() > height as f64 {
            return Err(Error::NoModel(format!(
                "translation ({}, {}) exceeds the frame",
                self.tx, self.ty
            )));
        }
        Ok(())
    }
}

/// A correspondence: position in the current frame and in the reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub cur: (f64, f64),
    pub reference: (f64, f64),
}

impl PointPair {
    pub fn new(cur: (f64, f64), reference: (f64, f64)) -> Self {
        Self { cur, reference }
    }

    pub fn error(&self, m: &AffineModel) -> f64 {
        let (x, y) = m.apply(self.cur.0, self.cur.1);
        (x - self.reference.0).hypot(y - self.reference.1)
    }
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !det.is_finite() || det.abs() < 1e-12 {
        return None;
    }
    let col = |j: usize| {
        let mut t = m;
        for i in 0..3 {
            t[i][j] = r[i];
        }
        t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1])
            - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
            + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
    };
    Some([col(0) / det, col(1) / det, col(2) / det])
}

/// Exact model through three correspondences; `None` when the source points
/// are (nearly) collinear.
pub fn solve_exact(p: &[PointPair; 3]) -> Option<AffineModel> {
    let (x0, y0) = p[0].cur;
    let area2 = (p[1].cur.0 - x0) * (p[2].cur.1 - y0) - (p[2].cur.0 - x0) * (p[1].cur.1 - y0);
    if area2.abs() < 1e-6 {
        return None;
    }
    fit_least_squares(p)
}

/// Least-squares model over all pairs, solved on centred coordinates.
pub fn fit_least_squares(pairs: &[PointPair]) -> Option<AffineModel> {
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in pairs {
        cx += p.cur.0 / n;
        cy += p.cur.1 / n;
    }
    let mut ata = [[0f64; 3]; 3];
    let mut atu = [0f64; 3];
    let mut atv = [0f64; 3];
    for p in pairs {
        let row = [p.cur.0 - cx, p.cur.1 - cy, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atu[i] += row[i] * p.reference.0;
            atv[i] += row[i] * p.reference.1;
        }
    }
    let u = solve3(ata, atu)?;
    let v = solve3(ata, atv)?;
    let m = AffineModel {
        a: u[0],
        b: u[1],
        c: v[0],
        d: v[1],
        tx: u[2] - u[0] * cx - u[1] * cy,
        ty: v[2] - v[0] * cx - v[1] * cy,
    };
    (m.det().abs() >= MIN_DET && m.params().iter().all(|v| v.is_finite())).then_some(m)
}
