//! Orthonormal 2-D DCT-II and the uniform quantizer.

use std::sync::OnceLock;

fn basis(n: usize) -> &'static [f64] {
    static B4: OnceLock<Vec<f64>> = OnceLock::new();
    static B8: OnceLock<Vec<f64>> = OnceLock::new();
    let build = move || {
        let mut m = vec![0f64; n * n];
        for k in 0..n {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for i in 0..n {
                m[k * n + i] = s * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
            }
        }
        m
    };
    match n {
        4 => B4.get_or_init(build),
        8 => B8.get_or_init(build),
        _ => panic!("unsupported transform size {n}"),
    }
}

/// Forward transform of an `n`x`n` block (n = 4 or 8), row-major.
pub fn forward(block: &[f64], n: usize) -> Vec<f64> {
    let m = basis(n);
    let mut tmp = vec![0f64; n * n];
    for y in 0..n {
        for k in 0..n {
            tmp[y * n + k] = (0..n).map(|x| m[k * n + x] * block[y * n + x]).sum();
        }
    }
    let mut out = vec![0f64; n * n];
    for k in 0..n {
        for x in 0..n {
            out[k * n + x] = (0..n).map(|y| m[k * n + y] * tmp[y * n + x]).sum();
        }
    }
    out
}

pub fn inverse(coefs: &[f64], n: usize) -> Vec<f64> {
    let m = basis(n);
    let mut tmp = vec![0f64; n * n];
    for k in 0..n {
        for x in 0..n {
            tmp[k * n + x] = (0..n).map(|u| m[u * n + x] * coefs[k * n + u]).sum();
        }
    }
    let mut out = vec![0f64; n * n];
    for y in 0..n {
        for x in 0..n {
            out[y * n + x] = (0..n).map(|k| m[k * n + y] * tmp[k * n + x]).sum();
        }
    }
    out
}

#[inline]
pub fn round_half_away(v: f64) -> f64 {
    // f64::round already rounds halves away from zero
    v.round()
}

pub fn quantize(coefs: &[f64], step: f64) -> Vec<i32> {
    coefs
        .iter()
        .map(|&c| round_half_away(c / step).clamp(-(1 << 20) as f64, (1 << 20) as f64) as i32)
        .collect()
}

pub fn dequantize(levels: &[i32], step: f64) -> Vec<f64> {
    levels.iter().map(|&q| f64::from(q) * step).collect()
}

/// Zigzag scan order for an `n`x`n` block.
pub fn zigzag(n: usize) -> &'static [usize] {
    static Z4: OnceLock<Vec<usize>> = OnceLock::new();
    static Z8: OnceLock<Vec<usize>> = OnceLock::new();
    let build = move || {
        let mut idx: Vec<usize> = (0..n * n).collect();
        idx.sort_by_key(|&i| {
            let (y, x) = (i / n, i % n);
            let d = x + y;
            (d, if d % 2 == 0 { x } else { y })
        });
        idx
    };
    match n {
        4 => Z4.get_or_init(build),
        8 => Z8.get_or_init(build),
        _ => panic!("unsupported scan size {n}"),
    }
}
