//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(String, String),

    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training set contains a single class")]
    SingleClass,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("image ({0}x{1}) does not fit in canvas ({2}x{3})")]
    CanvasOverflow(usize, usize, usize, usize),

    #[error("locality receptive field exceeds padded input ({0})")]
    ReceptiveFieldOverflow(String),

    #[error("subsample size {requested} exceeds dataset size {available}")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
