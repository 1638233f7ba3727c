//! A small dense neural-network runtime: parameter storage, a gradient
//! tape over vector operations, Adam and checkpoints.

mod checkpoint;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use checkpoint::{Checkpoint, ParamRecord, CHECKPOINT_FORMAT, CHECKPOINT_FORMAT_VERSION};
pub use params::{init_params, AdamConfig, AdamState, LayerSpec, ParamId, ParamStore};
pub use tape::{sigmoid, Tape, Var, BCE_CLAMP};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{op}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("duplicate parameter {0:?}")]
    DuplicateParam(String),
    #[error("loss must be a scalar, found length {0}")]
    NotScalar(usize),
    #[error("optimizer step without gradients")]
    MissingGradient,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}
