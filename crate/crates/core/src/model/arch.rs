use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::LayerSpec;
use crate::util::sha256_hex;

pub const FEATURE_DIM: usize = 100;
pub const FEATURIZER_HIDDEN: usize = 128;
pub const MESSAGE_HIDDEN: usize = 128;
pub const HEAD_HIDDEN: [usize; 2] = [64, 32];
pub const VOLUME_NORM_LITERS: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Hms,
    /// Scores raw featurizer outputs; the message layers are unused.
    NoMessagePassing,
    /// Object label vectors are zeroed, leaving only box geometry.
    NoObjectLabel,
    /// Objects are described by box geometry plus the label/target cosine.
    ContextVector,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Hms,
        ModelVariant::NoMessagePassing,
        ModelVariant::NoObjectLabel,
        ModelVariant::ContextVector,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Hms => "hms",
            ModelVariant::NoMessagePassing => "no_message_passing",
            ModelVariant::NoObjectLabel => "no_object_label",
            ModelVariant::ContextVector => "context_vector",
        }
    }

    pub fn uses_message_passing(self) -> bool {
        self != ModelVariant::NoMessagePassing
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hms" => Ok(ModelVariant::Hms),
            "no_message_passing" | "nomp" => Ok(ModelVariant::NoMessagePassing),
            "no_object_label" | "nolabel" => Ok(ModelVariant::NoObjectLabel),
            "context_vector" | "cv" => Ok(ModelVariant::ContextVector),
            other => Err(format!(
                "unknown variant {other:?} (expected hms, no_message_passing, no_object_label or context_vector)"
            )),
        }
    }
}

/// Layer shapes of the scorer. Every variant has the same parameter
/// names; only the object featurizer's input width differs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub word_dim: usize,
    pub feature_dim: usize,
    pub featurizer_hidden: usize,
    pub container_in: usize,
    pub object_in: usize,
    pub target_in: usize,
    pub message_hidden: usize,
    pub head_hidden: [usize; 2],
}

impl ArchitectureSpec {
    pub fn new(word_dim: usize, variant: ModelVariant) -> Self {
        let object_in = match variant {
            ModelVariant::ContextVector => 5,
            _ => word_dim + 4,
        };
        ArchitectureSpec {
            word_dim,
            feature_dim: FEATURE_DIM,
            featurizer_hidden: FEATURIZER_HIDDEN,
            container_in: word_dim + 1,
            object_in,
            target_in: word_dim,
            message_hidden: MESSAGE_HIDDEN,
            head_hidden: HEAD_HIDDEN,
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let (f, h) = (self.feature_dim, self.featurizer_hidden);
        let mut out = Vec::new();
        for (name, input) in [
            ("feat_container", self.container_in),
            ("feat_object", self.object_in),
            ("feat_target", self.target_in),
        ] {
            out.push(LayerSpec::new(&format!("{name}.0"), input, h));
            out.push(LayerSpec::new(&format!("{name}.1"), h, f));
        }
        out.push(LayerSpec::new("msg.0", 2 * f, self.message_hidden));
        out.push(LayerSpec::new("msg.1", self.message_hidden, f));
        let [h1, h2] = self.head_hidden;
        for head in ["head_container", "head_object"] {
            out.push(LayerSpec::new(&format!("{head}.0"), f, h1));
            out.push(LayerSpec::new(&format!("{head}.1"), h1, h2));
            out.push(LayerSpec::new(&format!("{head}.2"), h2, 1));
        }
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }
}
