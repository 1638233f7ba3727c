//! Datasets on disk: `graphs.jsonl`, `config.json` and `manifest.json` in
//! one directory.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::GenConfig;
use super::generate::{eligible_targets, generate_graph, TargetMode};
use super::ProcgenError;
use crate::graph::{read_graphs, serialize_graph, SceneGraph};
use crate::util::{derive_seed, sha256_hex};

pub const DATASET_FORMAT: &str = "hms-dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Generation attempts per graph before giving up.
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    pub format_version: u32,
    pub config_name: String,
    pub config_hash: String,
    pub seed: u64,
    pub count: usize,
    /// Seed actually used for each graph, after skipping unusable draws.
    pub graph_seeds: Vec<u64>,
    pub graphs_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: GenConfig,
    pub graphs: Vec<SceneGraph>,
    pub manifest: DatasetManifest,
}

fn graphs_jsonl(graphs: &[SceneGraph]) -> String {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&serialize_graph(g));
        out.push('\n');
    }
    out
}

/// A graph is usable when it offers a hidden target in both modes.
fn usable(graph: &SceneGraph, config: &GenConfig) -> Result<bool, ProcgenError> {
    Ok(!eligible_targets(graph, config, TargetMode::Train)?.is_empty()
        && !eligible_targets(graph, config, TargetMode::Test)?.is_empty())
}

fn generate_one(config: &GenConfig, split_seed: u64, index: usize) -> Result<(u64, SceneGraph), ProcgenError> {
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = derive_seed(split_seed, &[index as u64, attempt]);
        match generate_graph(config, seed) {
            Ok(g) if usable(&g, config)? => return Ok((seed, g)),
            Ok(_) => {}
            Err(e @ ProcgenError::Placement { .. }) => {
                log::debug!("graph {index} attempt {attempt}: {e}");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        ProcgenError::Dataset(format!("graph {index}: no usable draw in {MAX_ATTEMPTS} attempts"))
    }))
}

/// Generates `count` graphs, each from its own stream derived from
/// `(split_seed, index)`. Output is independent of the thread count.
pub fn generate_dataset(config: &GenConfig, count: usize, split_seed: u64) -> Result<Dataset, ProcgenError> {
    if count == 0 {
        return Err(ProcgenError::EmptyDataset);
    }
    config.validate()?;
    let results: Vec<(u64, SceneGraph)> = (0..count)
        .into_par_iter()
        .map(|i| generate_one(config, split_seed, i))
        .collect::<Result<_, _>>()?;
    let (graph_seeds, graphs): (Vec<u64>, Vec<SceneGraph>) = results.into_iter().unzip();
    let manifest = DatasetManifest {
        format: DATASET_FORMAT.into(),
        format_version: DATASET_FORMAT_VERSION,
        config_name: config.name.clone(),
        config_hash: config.hash(),
        seed: split_seed,
        count,
        graph_seeds,
        graphs_sha256: sha256_hex(graphs_jsonl(&graphs).as_bytes()),
    };
    Ok(Dataset {
        config: config.clone(),
        graphs,
        manifest,
    })
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(), ProcgenError> {
    fs::create_dir_all(dir).map_err(|e| ProcgenError::io(dir, e))?;
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| ProcgenError::io(&path, e))
    };
    write("graphs.jsonl", &graphs_jsonl(&dataset.graphs))?;
    write("config.json", &dataset.config.to_json())?;
    let manifest = serde_json::to_string_pretty(&dataset.manifest).expect("manifest serializes") + "\n";
    write("manifest.json", &manifest)
}

/// Loads a dataset directory, checking the manifest against its contents.
pub fn read_dataset(dir: &Path) -> Result<Dataset, ProcgenError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| ProcgenError::io(&manifest_path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| ProcgenError::Dataset(format!("manifest.json: {e}")))?;
    if manifest.format != DATASET_FORMAT || manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(ProcgenError::Dataset(format!(
            "unsupported dataset format {} v{}",
            manifest.format, manifest.format_version
        )));
    }
    let config = GenConfig::load(&dir.join("config.json"))?;
    if config.hash() != manifest.config_hash {
        return Err(ProcgenError::Dataset("config.json does not match the manifest hash".into()));
    }
    let graphs = read_graphs(&dir.join("graphs.jsonl"))?;
    if graphs.len() != manifest.count {
        return Err(ProcgenError::Dataset(format!(
            "manifest lists {} graphs, file holds {}",
            manifest.count,
            graphs.len()
        )));
    }
    Ok(Dataset {
        config,
        graphs,
        manifest,
    })
}
