use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("index ({row}, {col}) outside {rows}x{cols} block grid")]
    Index {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("no motion model: {0}")]
    NoModel(String),
    #[error("bitstream parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
