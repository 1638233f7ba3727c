use thiserror::Error;

use crate::embeddings::EmbeddingError;
use crate::graph::{GraphError, NodeId, NodeKind};
use crate::nn::NnError;
use crate::procgen::ProcgenError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Procgen(#[from] ProcgenError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("model: {0}")]
    Model(String),
    #[error("policy {policy} cannot score {kind:?} nodes ({node})")]
    Role {
        policy: String,
        kind: NodeKind,
        node: NodeId,
    },
    #[error("role restriction: {0}")]
    Policy(String),
    #[error("search exceeded {limit} actions")]
    ActionGuard { limit: usize },
    #[error("search pass {pass} made no progress")]
    Stalled { pass: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
