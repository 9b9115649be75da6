//! Dense CHW tensors and the layer kernels of the block classifier.
//!
//! Every output element is accumulated in `f64`, starting from the bias and
//! adding products in input order (input channel, then kernel row, then kernel
//! column for convolutions; input index for dense layers), and rounded to
//! `f32` exactly once.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "tensor buffer of {} for {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// 3x3 convolution, stride 1, zero padding 1.
#[derive(Clone, Debug)]
pub struct Conv3x3 {
    in_channels: usize,
    out_channels: usize,
    /// `[out][in][ky][kx]`
    weights: Vec<f32>,
    bias: Vec<f32>,
    /// `[in][ky][kx][out]`, so the innermost loop runs over output channels.
    transposed: Vec<f32>,
}

impl Conv3x3 {
    pub fn new(in_channels: usize, out_channels: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if weights.len() != out_channels * in_channels * 9 {
            return Err(Error::Shape(format!(
                "conv3x3 kernel has {} coefficients, expected {out_channels}x{in_channels}x3x3",
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv3x3 bias has {} entries, expected {out_channels}",
                bias.len()
            )));
        }
        let mut transposed = vec![0f32; weights.len()];
        for o in 0..out_channels {
            for i in 0..in_channels {
                for k in 0..9 {
                    transposed[(i * 9 + k) * out_channels + o] = weights[(o * in_channels + i) * 9 + k];
                }
            }
        }
        Ok(Self {
            in_channels,
            out_channels,
            weights,
            bias,
            transposed,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let (c, h, w) = input.shape();
        if c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv3x3 expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        if h == 0 || w == 0 {
            return Err(Error::Shape("conv3x3 on empty spatial extent".into()));
        }
        let co = self.out_channels;
        let mut out = vec![0f32; co * h * w];
        let mut acc = vec![0f64; co];
        for y in 0..h {
            for x in 0..w {
                for (a, &b) in acc.iter_mut().zip(&self.bias) {
                    *a = f64::from(b);
                }
                for i in 0..c {
                    for ky in 0..3 {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let sx = x as isize + kx as isize - 1;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let v = f64::from(input.at(i, sy as usize, sx as usize));
                            let base = (i * 9 + ky * 3 + kx) * co;
                            let wrow = &self.transposed[base..base + co];
                            for (a, &wv) in acc.iter_mut().zip(wrow) {
                                *a += f64::from(wv) * v;
                            }
                        }
                    }
                }
                for (o, &a) in acc.iter().enumerate() {
                    out[(o * h + y) * w + x] = a as f32;
                }
            }
        }
        Tensor::new(co, h, w, out)
    }
}

/// Fully connected layer over the row-major flattening of its input.
#[derive(Clone, Debug)]
pub struct Dense {
    in_features: usize,
    out_features: usize,
    /// `[out][in]`
    weights: Vec<f32>,
    bias: Vec<f32>,
    /// `[in][out]`
    transposed: Vec<f32>,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if weights.len() != in_features * out_features || bias.len() != out_features {
            return Err(Error::Shape(format!(
                "dense layer {in_features}->{out_features} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        let mut transposed = vec![0f32; weights.len()];
        for o in 0..out_features {
            for i in 0..in_features {
                transposed[i * out_features + o] = weights[o * in_features + i];
            }
        }
        Ok(Self {
            in_features,
            out_features,
            weights,
            bias,
            transposed,
        })
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        if input.len() != self.in_features {
            return Err(Error::Shape(format!(
                "dense layer expects {} inputs, got {}",
                self.in_features,
                input.len()
            )));
        }
        let n = self.out_features;
        let mut acc: Vec<f64> = self.bias.iter().map(|&b| f64::from(b)).collect();
        for (i, &x) in input.data().iter().enumerate() {
            let x = f64::from(x);
            let wrow = &self.transposed[i * n..(i + 1) * n];
            for (a, &wv) in acc.iter_mut().zip(wrow) {
                *a += f64::from(wv) * x;
            }
        }
        Tensor::new(n, 1, 1, acc.into_iter().map(|a| a as f32).collect())
    }
}

pub fn conv3x3_forward(input: &Tensor, kernel: &[f32], bias: &[f32]) -> Result<Tensor> {
    let co = bias.len();
    let ci = input.shape().0;
    if kernel.len() != co * ci * 9 {
        return Err(Error::Shape(format!(
            "kernel of {} coefficients does not match {co}x{ci}x3x3",
            kernel.len()
        )));
    }
    Conv3x3::new(ci, co, kernel.to_vec(), bias.to_vec())?.forward(input)
}

/// 2x2 non-overlapping max pooling.
pub fn maxpool2(input: &Tensor) -> Result<Tensor> {
    let (c, h, w) = input.shape();
    if h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0 {
        return Err(Error::Shape(format!("maxpool2 needs even extent, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let m = input
                    .at(ch, 2 * y, 2 * x)
                    .max(input.at(ch, 2 * y, 2 * x + 1))
                    .max(input.at(ch, 2 * y + 1, 2 * x))
                    .max(input.at(ch, 2 * y + 1, 2 * x + 1));
                out.push(m);
            }
        }
    }
    Tensor::new(c, oh, ow, out)
}

pub fn relu(mut t: Tensor) -> Tensor {
    for v in &mut t.data {
        *v = v.max(0.0);
    }
    t
}

pub fn sigmoid(mut t: Tensor) -> Tensor {
    for v in &mut t.data {
        *v = (1.0 / (1.0 + (-f64::from(*v)).exp())) as f32;
    }
    t
}
