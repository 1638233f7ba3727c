//! The message-passing scorer and its ablations.

mod arch;
mod forward;

use std::path::Path;

pub use arch::{
    ArchitectureSpec, ModelVariant, FEATURE_DIM, FEATURIZER_HIDDEN, HEAD_HIDDEN, MESSAGE_HIDDEN,
    VOLUME_NORM_LITERS,
};
pub use forward::{
    featurize_container, featurize_object, featurize_target, message_pass, object_input, score_node,
    GraphForward, Head,
};

use crate::error::{Error, Result};
use crate::nn::{init_params, AdamConfig, Checkpoint, ParamStore};

#[derive(Debug, Clone, PartialEq)]
pub struct HmsModel {
    pub variant: ModelVariant,
    pub arch: ArchitectureSpec,
    pub params: ParamStore,
}

impl HmsModel {
    /// Glorot initialization with the final layer of both heads zeroed, so
    /// every score starts at exactly 0.5.
    pub fn new(word_dim: usize, variant: ModelVariant, seed: u64) -> Result<Self> {
        let mut model = Self::glorot(word_dim, variant, seed)?;
        for head in ["head_container.2", "head_object.2"] {
            model.params.get_mut(&format!("{head}.weight"))?.fill(0.0);
        }
        Ok(model)
    }

    /// Glorot initialization of every layer, heads included.
    pub fn glorot(word_dim: usize, variant: ModelVariant, seed: u64) -> Result<Self> {
        let arch = ArchitectureSpec::new(word_dim, variant);
        let params = init_params(&arch.layers(), seed)?;
        Ok(HmsModel { variant, arch, params })
    }

    pub fn set_adam_config(&mut self, config: AdamConfig) {
        self.params.set_adam_config(config);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_store(&self.params, &self.arch.hash(), self.variant.as_str())
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let variant: ModelVariant = ck.variant.parse().map_err(Error::Model)?;
        let target = ck
            .params
            .iter()
            .find(|p| p.name == "feat_target.0.weight")
            .ok_or_else(|| Error::Model("checkpoint lacks feat_target.0.weight".into()))?;
        let word_dim = *target
            .shape
            .get(1)
            .ok_or_else(|| Error::Model("feat_target.0.weight is not a matrix".into()))?;
        let arch = ArchitectureSpec::new(word_dim, variant);
        if arch.hash() != ck.architecture_hash {
            return Err(Error::Model("checkpoint architecture hash does not match its layers".into()));
        }
        let params = ck.to_store(AdamConfig::default())?;
        let expected = init_params(&arch.layers(), 0)?;
        if expected.names() != params.names() {
            return Err(Error::Model("checkpoint parameter names differ from the architecture".into()));
        }
        for name in expected.names() {
            if expected.get(name)?.shape() != params.get(name)?.shape() {
                return Err(Error::Model(format!("parameter {name} has the wrong shape")));
            }
        }
        Ok(HmsModel { variant, arch, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.checkpoint().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
