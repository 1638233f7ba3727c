//! Hierarchical mechanical search over indoor scene graphs.
//!
//! [`procgen`] builds houses of rooms, storage and shelves with occluding
//! object arrangements, [`model`] scores containers and objects against a
//! text-described target with neural message passing, [`train`] fits it,
//! [`search`] runs the threshold search with any scorer and [`eval`]
//! computes accuracy and action-count reports.

pub mod embeddings;
mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod nn;
pub mod procgen;
pub mod search;
pub mod train;
pub mod util;

pub use embeddings::EmbeddingTable;
pub use error::{Error, Result};
pub use graph::{NodeId, NodeKind, SceneGraph, TargetSpec};
pub use model::{HmsModel, ModelVariant};
pub use procgen::{GenConfig, TargetMode};
pub use search::{Policy, PolicyEnv, SearchTrace};
pub use train::TrainConfig;
