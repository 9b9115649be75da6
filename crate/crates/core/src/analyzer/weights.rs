//! The `TEXW1` weights container.
//!
//! ```text
//! "TEXW1\n"                 6 magic bytes
//! <json header>             UTF-8, see `Header`
//! 0x00                      header terminator
//! <f32 LE blobs>            for every parametric layer in order: weights, then bias
//! ```
//!
//! Convolution weights are `[out][in][3][3]` row-major, dense weights `[out][in]`.
//! The file must end right after the last blob.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tensor::{Conv3x3, Dense};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"TEXW1\n";

/// The only architecture the engine evaluates.
pub const ARCHITECTURE: &str = "conv3x3(3,32);relu;conv3x3(32,32);relu;maxpool2;\
conv3x3(32,64);relu;conv3x3(64,64);relu;maxpool2;\
fully_connected(4096,256);relu;fully_connected(256,1);sigmoid";

pub fn architecture_hash() -> String {
    let digest = Sha256::digest(ARCHITECTURE.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv3x3 {
        in_channels: usize,
        out_channels: usize,
    },
    Maxpool2,
    FullyConnected {
        in_features: usize,
        out_features: usize,
    },
    Relu,
    Sigmoid,
}

impl LayerSpec {
    fn describe(&self) -> String {
        match self {
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
            } => format!("conv3x3({in_channels},{out_channels})"),
            LayerSpec::Maxpool2 => "maxpool2".into(),
            LayerSpec::FullyConnected {
                in_features,
                out_features,
            } => format!("fully_connected({in_features},{out_features})"),
            LayerSpec::Relu => "relu".into(),
            LayerSpec::Sigmoid => "sigmoid".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub architecture: String,
    pub architecture_hash: String,
    pub layers: Vec<LayerSpec>,
    /// Per-channel RGB means subtracted after scaling samples to [0, 1].
    pub means: [f32; 3],
    #[serde(default)]
    pub training: serde_json::Value,
}

#[derive(Clone, Debug)]
pub enum Layer {
    Conv3x3(Conv3x3),
    Maxpool2,
    FullyConnected(Dense),
    Relu,
    Sigmoid,
}

impl Layer {
    fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv3x3(c) => LayerSpec::Conv3x3 {
                in_channels: c.in_channels(),
                out_channels: c.out_channels(),
            },
            Layer::Maxpool2 => LayerSpec::Maxpool2,
            Layer::FullyConnected(d) => LayerSpec::FullyConnected {
                in_features: d.in_features(),
                out_features: d.out_features(),
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::Sigmoid => LayerSpec::Sigmoid,
        }
    }
}

/// Loaded classifier weights. Read-only after construction.
#[derive(Clone, Debug)]
pub struct CnnWeights {
    layers: Vec<Layer>,
    means: [f32; 3],
    training: serde_json::Value,
}

fn fixed_specs() -> Vec<LayerSpec> {
    use LayerSpec::*;
    vec![
        Conv3x3 {
            in_channels: 3,
            out_channels: 32,
        },
        Relu,
        Conv3x3 {
            in_channels: 32,
            out_channels: 32,
        },
        Relu,
        Maxpool2,
        Conv3x3 {
            in_channels: 32,
            out_channels: 64,
        },
        Relu,
        Conv3x3 {
            in_channels: 64,
            out_channels: 64,
        },
        Relu,
        Maxpool2,
        FullyConnected {
            in_features: 4096,
            out_features: 256,
        },
        Relu,
        FullyConnected {
            in_features: 256,
            out_features: 1,
        },
        Sigmoid,
    ]
}

fn param_counts(spec: &LayerSpec) -> Option<(usize, usize)> {
    match *spec {
        LayerSpec::Conv3x3 {
            in_channels,
            out_channels,
        } => Some((in_channels * out_channels * 9, out_channels)),
        LayerSpec::FullyConnected {
            in_features,
            out_features,
        } => Some((in_features * out_features, out_features)),
        _ => None,
    }
}

impl CnnWeights {
    /// Builds weights for the fixed architecture from `(weights, bias)` pairs,
    /// one per parametric layer in order.
    pub fn from_params(params: Vec<(Vec<f32>, Vec<f32>)>, means: [f32; 3]) -> Result<Self> {
        let specs = fixed_specs();
        let n_param = specs.iter().filter(|s| param_counts(s).is_some()).count();
        if params.len() != n_param {
            return Err(Error::Model(format!(
                "expected {n_param} parametric layers, got {}",
                params.len()
            )));
        }
        let mut params = params.into_iter();
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = match spec {
                LayerSpec::Conv3x3 {
                    in_channels,
                    out_channels,
                } => {
                    let (w, b) = params.next().expect("counted above");
                    Layer::Conv3x3(Conv3x3::new(in_channels, out_channels, w, b).map_err(as_model)?)
                }
                LayerSpec::FullyConnected {
                    in_features,
                    out_features,
                } => {
                    let (w, b) = params.next().expect("counted above");
                    Layer::FullyConnected(Dense::new(in_features, out_features, w, b).map_err(as_model)?)
                }
                LayerSpec::Maxpool2 => Layer::Maxpool2,
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Sigmoid => Layer::Sigmoid,
            };
            layers.push(layer);
        }
        Ok(Self {
            layers,
            means,
            training: serde_json::Value::Null,
        })
    }

    /// All coefficients zero.
    pub fn zeros(means: [f32; 3]) -> Self {
        let params = fixed_specs()
            .iter()
            .filter_map(param_counts)
            .map(|(w, b)| (vec![0.0; w], vec![0.0; b]))
            .collect();
        Self::from_params(params, means).expect("fixed architecture is consistent")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn means(&self) -> [f32; 3] {
        self.means
    }

    pub fn training(&self) -> &serde_json::Value {
        &self.training
    }

    pub fn with_training(mut self, training: serde_json::Value) -> Self {
        self.training = training;
        self
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Model("missing TEXW1 magic".into()));
        }
        let rest = &bytes[MAGIC.len()..];
        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| Error::Model("unterminated TEXW1 header".into()))?;
        let header: Header = serde_json::from_slice(&rest[..nul])
            .map_err(|e| Error::Model(format!("bad TEXW1 header: {e}")))?;
        if header.architecture != ARCHITECTURE {
            return Err(Error::Model(format!(
                "unsupported architecture {:?}",
                header.architecture
            )));
        }
        if header.architecture_hash != architecture_hash() {
            return Err(Error::Model("architecture hash mismatch".into()));
        }
        if header.layers != fixed_specs() {
            return Err(Error::Model("layer list does not match the architecture".into()));
        }
        let declared: String = header
            .layers
            .iter()
            .map(LayerSpec::describe)
            .collect::<Vec<_>>()
            .join(";");
        if declared != ARCHITECTURE {
            return Err(Error::Model("layer list does not match the architecture".into()));
        }
        let mut blob = &rest[nul + 1..];
        let mut take = |n: usize| -> Result<Vec<f32>> {
            if blob.len() < n * 4 {
                return Err(Error::Model("TEXW1 coefficient data truncated".into()));
            }
            let (head, tail) = blob.split_at(n * 4);
            blob = tail;
            Ok(head
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect())
        };
        let mut params = Vec::new();
        for spec in &header.layers {
            if let Some((nw, nb)) = param_counts(spec) {
                let w = take(nw)?;
                let b = take(nb)?;
                params.push((w, b));
            }
        }
        if !blob.is_empty() {
            return Err(Error::Model(format!(
                "{} trailing bytes after coefficients",
                blob.len()
            )));
        }
        Ok(Self::from_params(params, header.means)?.with_training(header.training))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref())?;
        Self::parse(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            architecture: ARCHITECTURE.to_string(),
            architecture_hash: architecture_hash(),
            layers: self.layers.iter().map(Layer::spec).collect(),
            means: self.means,
            training: self.training.clone(),
        };
        let mut out = MAGIC.to_vec();
        out.extend(serde_json::to_vec(&header).expect("header serializes"));
        out.push(0);
        for layer in &self.layers {
            let (w, b) = match layer {
                Layer::Conv3x3(c) => (c.weights(), c.bias()),
                Layer::FullyConnected(d) => (d.weights(), d.bias()),
                _ => continue,
            };
            for v in w.iter().chain(b) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

fn as_model(e: Error) -> Error {
    Error::Model(e.to_string())
}
