//! Procedural scene generation from probability tables and an asset
//! catalog, plus the ground-truth priors those tables imply.

mod catalog;
mod config;
mod dataset;
mod generate;

use std::path::Path;

use thiserror::Error;

use crate::graph::{GraphError, NodeId};

pub use catalog::{default_assets, DEFAULT_ROOMS};
pub use config::{AssetSpec, GenConfig, StorageType, CONFIG_FORMAT_VERSION};
pub use dataset::{
    generate_dataset, read_dataset, write_dataset, Dataset, DatasetManifest, DATASET_FORMAT,
    DATASET_FORMAT_VERSION,
};
pub use generate::{
    container_prior, eligible_targets, generate_graph, place_objects, sample_target,
    PlacementRequest, TargetMode, DEPTH_BANDS, PLACEMENT_RETRIES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcgenError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("could not place instance {instance}{} after {retries} retries", shelf.map(|s| format!(" on shelf {s}")).unwrap_or_default())]
    Placement {
        shelf: Option<NodeId>,
        instance: usize,
        retries: usize,
    },
    #[error("no eligible {0:?} target in graph")]
    NoEligibleTarget(TargetMode),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("node {0} is not a room, storage or shelf")]
    NotContainer(NodeId),
    #[error("dataset count must be at least 1")]
    EmptyDataset,
    #[error("bad dataset: {0}")]
    Dataset(String),
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ProcgenError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        ProcgenError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
