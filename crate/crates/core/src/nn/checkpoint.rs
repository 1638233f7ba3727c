use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, NnError, ParamStore, Tensor};
use crate::util::sha256_hex;

pub const CHECKPOINT_FORMAT: &str = "hms-checkpoint";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Parameter values on disk. Floats are written in shortest round-trip
/// form, so loading restores every value bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub format_version: u32,
    pub architecture_hash: String,
    pub variant: String,
    pub optimizer_step: u64,
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, architecture_hash: &str, variant: &str) -> Self {
        let params = store
            .names()
            .iter()
            .map(|name| {
                let t = store.get(name).expect("name comes from the store");
                ParamRecord {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                }
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            format_version: CHECKPOINT_FORMAT_VERSION,
            architecture_hash: architecture_hash.to_string(),
            variant: variant.to_string(),
            optimizer_step: store.adam().t,
            params,
        }
    }

    /// Fresh store holding the saved values; optimizer moments start at zero.
    pub fn to_store(&self, config: AdamConfig) -> Result<ParamStore, NnError> {
        let mut store = ParamStore::new(config);
        for p in &self.params {
            store.insert(&p.name, Tensor::new(p.shape.clone(), p.data.clone())?)?;
        }
        store.set_step(self.optimizer_step);
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        let ck: Checkpoint = serde_json::from_str(text)
            .map_err(|e| NnError::Checkpoint(format!("line {} column {}: {e}", e.line(), e.column())))?;
        if ck.format != CHECKPOINT_FORMAT || ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint format {} v{}",
                ck.format, ck.format_version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_json()).map_err(|e| NnError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = fs::read_to_string(path).map_err(|e| NnError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}
