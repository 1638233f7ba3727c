use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ProcgenError;
use crate::util::sha256_hex;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageType {
    pub label: String,
    /// Inclusive range of shelves per instance.
    pub shelf_count: [u32; 2],
    /// Inclusive range of interior volume in liters.
    pub volume_liters: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub name: String,
    pub description: String,
    pub category: String,
    pub w: f64,
    pub h: f64,
    pub held_out: bool,
}

/// Probability tables and catalog driving generation.
///
/// `storage_room_prob[s][r]` is the chance that storage type `s` is placed
/// in room `r` (rows are normalized when sampling). `category_storage_prob[c][s]`
/// is the chance that a storage of type `s` holds category `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub room_types: Vec<String>,
    pub storage_types: Vec<StorageType>,
    pub categories: Vec<String>,
    pub storage_room_prob: BTreeMap<String, BTreeMap<String, f64>>,
    pub category_storage_prob: BTreeMap<String, BTreeMap<String, f64>>,
    pub assets: Vec<AssetSpec>,
    pub objects_per_shelf: [u32; 2],
    pub categories_per_shelf: [u32; 2],
}

fn invalid(msg: impl Into<String>) -> ProcgenError {
    ProcgenError::InvalidConfig(msg.into())
}

impl GenConfig {
    pub fn storage_type(&self, label: &str) -> Option<&StorageType> {
        self.storage_types.iter().find(|s| s.label == label)
    }

    pub fn asset_by_description(&self, description: &str) -> Option<&AssetSpec> {
        self.assets.iter().find(|a| a.description == description)
    }

    pub fn assets_of(&self, category: &str) -> Vec<&AssetSpec> {
        self.assets.iter().filter(|a| a.category == category).collect()
    }

    /// `storage_room_prob[storage][room]`, 0 when absent.
    pub fn storage_room(&self, storage: &str, room: &str) -> f64 {
        self.storage_room_prob
            .get(storage)
            .and_then(|r| r.get(room))
            .copied()
            .unwrap_or(0.0)
    }

    /// `storage_room_prob[storage][room]` after normalizing the storage row.
    pub fn storage_room_normalized(&self, storage: &str, room: &str) -> f64 {
        let total: f64 = self.room_types.iter().map(|r| self.storage_room(storage, r)).sum();
        if total > 0.0 {
            self.storage_room(storage, room) / total
        } else {
            0.0
        }
    }

    pub fn category_storage(&self, category: &str, storage: &str) -> f64 {
        self.category_storage_prob
            .get(category)
            .and_then(|r| r.get(storage))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), ProcgenError> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(invalid(format!("unsupported format_version {}", self.format_version)));
        }
        if self.room_types.is_empty() || self.storage_types.is_empty() || self.categories.is_empty() {
            return Err(invalid("rooms, storage types and categories must be nonempty"));
        }
        let unique = |xs: Vec<&String>, what: &str| -> Result<(), ProcgenError> {
            let mut v = xs.clone();
            v.sort();
            v.dedup();
            if v.len() != xs.len() {
                return Err(invalid(format!("duplicate {what}")));
            }
            if xs.iter().any(|x| x.trim().is_empty()) {
                return Err(invalid(format!("empty {what} label")));
            }
            Ok(())
        };
        unique(self.room_types.iter().collect(), "room type")?;
        unique(self.storage_types.iter().map(|s| &s.label).collect(), "storage type")?;
        unique(self.categories.iter().collect(), "category")?;
        unique(self.assets.iter().map(|a| &a.name).collect(), "asset name")?;
        unique(self.assets.iter().map(|a| &a.description).collect(), "asset description")?;

        for s in &self.storage_types {
            let [lo, hi] = s.shelf_count;
            if lo < 1 || lo > hi {
                return Err(invalid(format!("shelf range {:?} for {}", s.shelf_count, s.label)));
            }
            let [vlo, vhi] = s.volume_liters;
            if !(vlo >= 0.0 && vlo <= vhi && vhi.is_finite()) {
                return Err(invalid(format!("volume range {:?} for {}", s.volume_liters, s.label)));
            }
        }
        let check_table = |table: &BTreeMap<String, BTreeMap<String, f64>>,
                           rows: &[&String],
                           cols: &[&String],
                           what: &str|
         -> Result<(), ProcgenError> {
            for (row, inner) in table {
                if !rows.contains(&row) {
                    return Err(invalid(format!("{what}: unknown row {row:?}")));
                }
                for (col, p) in inner {
                    if !cols.contains(&col) {
                        return Err(invalid(format!("{what}: unknown column {col:?}")));
                    }
                    if !(0.0..=1.0).contains(p) {
                        return Err(invalid(format!("{what}[{row}][{col}] = {p} outside [0, 1]")));
                    }
                }
            }
            for row in rows {
                let positive = table
                    .get(*row)
                    .is_some_and(|inner| inner.values().any(|&p| p > 0.0));
                if !positive {
                    return Err(invalid(format!("{what}: {row:?} has no positive entry")));
                }
            }
            Ok(())
        };
        let rooms: Vec<&String> = self.room_types.iter().collect();
        let storages: Vec<&String> = self.storage_types.iter().map(|s| &s.label).collect();
        let cats: Vec<&String> = self.categories.iter().collect();
        check_table(&self.storage_room_prob, &storages, &rooms, "storage_room_prob")?;
        check_table(&self.category_storage_prob, &cats, &storages, "category_storage_prob")?;

        for a in &self.assets {
            if !self.categories.contains(&a.category) {
                return Err(invalid(format!("asset {} has unknown category {}", a.name, a.category)));
            }
            if !(a.w > 0.0 && a.w <= 1.0 && a.h > 0.0 && a.h <= 1.0) {
                return Err(invalid(format!("asset {} extents outside (0, 1]", a.name)));
            }
            if a.description.trim().is_empty() {
                return Err(invalid(format!("asset {} has no description", a.name)));
            }
        }
        for c in &self.categories {
            let assets = self.assets_of(c);
            if assets.is_empty() {
                return Err(invalid(format!("category {c} has no assets")));
            }
            if assets.iter().filter(|a| !a.held_out).count() == 0 {
                return Err(invalid(format!("category {c} has only held-out assets")));
            }
        }
        if self.assets.iter().any(|a| a.held_out) {
            for c in &self.categories {
                let n = self.assets_of(c).iter().filter(|a| a.held_out).count();
                if n != 1 {
                    return Err(invalid(format!("category {c} has {n} held-out assets, expected 1")));
                }
            }
        }
        let [olo, ohi] = self.objects_per_shelf;
        if olo < 1 || olo > ohi {
            return Err(invalid(format!("objects_per_shelf {:?}", self.objects_per_shelf)));
        }
        let [clo, chi] = self.categories_per_shelf;
        if clo < 1 || clo > chi {
            return Err(invalid(format!("categories_per_shelf {:?}", self.categories_per_shelf)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ProcgenError> {
        let cfg: GenConfig = serde_json::from_str(text).map_err(|e| {
            invalid(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ProcgenError> {
        let text = fs::read_to_string(path).map_err(|e| ProcgenError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ProcgenError> {
        fs::write(path, self.to_json()).map_err(|e| ProcgenError::io(path, e))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    /// Copy with every positive table entry scaled by a factor drawn from
    /// `1 ± spread`, then rescaled so each row keeps its original mass.
    pub fn perturbed(&self, name: &str, spread: f64, seed: u64) -> GenConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perturb = |table: &BTreeMap<String, BTreeMap<String, f64>>| {
            table
                .iter()
                .map(|(row, inner)| {
                    let mass: f64 = inner.values().sum();
                    let scaled: Vec<(String, f64)> = inner
                        .iter()
                        .map(|(k, &p)| (k.clone(), p * rng.gen_range(1.0 - spread..=1.0 + spread)))
                        .collect();
                    let new_mass: f64 = scaled.iter().map(|(_, p)| p).sum();
                    let k = if new_mass > 0.0 { mass / new_mass } else { 1.0 };
                    let inner = scaled
                        .into_iter()
                        .map(|(c, p)| (c, ((p * k).min(1.0) * 1e4).round() / 1e4))
                        .collect();
                    (row.clone(), inner)
                })
                .collect()
        };
        let storage_room_prob = perturb(&self.storage_room_prob);
        let category_storage_prob = perturb(&self.category_storage_prob);
        GenConfig {
            name: name.to_string(),
            storage_room_prob,
            category_storage_prob,
            ..self.clone()
        }
    }

    pub fn default_train() -> GenConfig {
        super::catalog::default_config()
    }

    pub fn default_test() -> GenConfig {
        let mut cfg = Self::default_train().perturbed("default-test", 0.1, 0x7E57);
        cfg.seed = 1;
        cfg
    }
}
