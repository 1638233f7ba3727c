//! Supervised training of the scorer.
//!
//! Each example is a graph with one sampled hidden target. Per layer of the
//! hierarchy one positive node (the target's room, storage or shelf, or an
//! object occluding it) and one negative node are scored top-down, and the
//! binary cross entropies of every sampled node in the batch are averaged.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::classification_accuracy;
use crate::graph::{occluders_of, Detector, NodeId, NodeKind, SceneGraph, TargetSpec};
use crate::model::{GraphForward, HmsModel, ModelVariant};
use crate::nn::{AdamConfig, Tape, Var};
use crate::procgen::{sample_target, Dataset, GenConfig, TargetMode};
use crate::search::{Policy, PolicyEnv};
use crate::util::derive_seed;

/// Draws of a graph that yields no usable example before it is skipped.
pub const RESAMPLE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub graphs_per_batch: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub variant: ModelVariant,
    /// Graphs of the validation set scored after every epoch.
    pub validation_graphs: usize,
    pub validation_samples_per_graph: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batches_per_epoch: 100,
            graphs_per_batch: 10,
            seed: 0,
            adam: AdamConfig::default(),
            variant: ModelVariant::Hms,
            validation_graphs: 50,
            validation_samples_per_graph: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batches_per_epoch == 0 || self.graphs_per_batch == 0 {
            return Err(Error::Invalid("batches per epoch and graphs per batch must be at least 1".into()));
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::Invalid(format!("learning rate {} is not usable", self.adam.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Room,
    Storage,
    Shelf,
    Object,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Room, Layer::Storage, Layer::Shelf, Layer::Object];

    pub fn kind(self) -> NodeKind {
        match self {
            Layer::Room => NodeKind::Room,
            Layer::Storage => NodeKind::Storage,
            Layer::Shelf => NodeKind::Shelf,
            Layer::Object => NodeKind::Object,
        }
    }

    pub fn is_container(self) -> bool {
        self != Layer::Object
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSample {
    pub layer: Layer,
    pub positive: NodeId,
    pub negative: Option<NodeId>,
}

/// One positive and at most one negative node per layer, top layer first.
///
/// Object samples are restricted to detected objects, since the model can
/// only featurize what the detector reports. The object layer is left out
/// when every occluder of the target is itself hidden.
pub fn sample_layer_nodes<R: Rng>(graph: &SceneGraph, target: &TargetSpec, rng: &mut R) -> Result<Vec<LayerSample>> {
    let t = target.object_id;
    let shelf = graph
        .ancestor_of_kind(t, NodeKind::Shelf)
        .ok_or_else(|| Error::Invalid(format!("target {t} is not on a shelf")))?;
    let occluders = occluders_of(graph, shelf, t)?;
    if occluders.is_empty() {
        return Err(Error::Invalid(format!("target {t} has no occluder")));
    }
    let mut out = Vec::new();
    for layer in [Layer::Room, Layer::Storage, Layer::Shelf] {
        let positive = graph
            .ancestor_of_kind(t, layer.kind())
            .ok_or_else(|| Error::Invalid(format!("target {t} has no {:?} ancestor", layer)))?;
        let others: Vec<NodeId> = graph
            .ids_of_kind(layer.kind())
            .into_iter()
            .filter(|&n| n != positive)
            .collect();
        out.push(LayerSample {
            layer,
            positive,
            negative: others.choose(rng).copied(),
        });
    }

    let detector = Detector::default();
    let visible_occluders: Vec<NodeId> = detector
        .visible_objects(graph, shelf)?
        .into_iter()
        .filter(|o| occluders.contains(o))
        .collect();
    let Some(&positive) = visible_occluders.choose(rng) else {
        return Ok(out);
    };
    let same_shelf: Vec<NodeId> = detector
        .visible_objects(graph, shelf)?
        .into_iter()
        .filter(|o| !occluders.contains(o) && *o != t)
        .collect();
    let negative = if same_shelf.is_empty() {
        let mut elsewhere = Vec::new();
        for s in graph.ids_of_kind(NodeKind::Shelf) {
            if s != shelf {
                elsewhere.extend(detector.visible_objects(graph, s)?);
            }
        }
        elsewhere.choose(rng).copied()
    } else {
        same_shelf.choose(rng).copied()
    };
    out.push(LayerSample {
        layer: Layer::Object,
        positive,
        negative,
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedExample {
    pub target: TargetSpec,
    pub samples: Vec<LayerSample>,
}

impl PreparedExample {
    /// Sampled nodes with their labels, in scoring order.
    pub fn labeled_nodes(&self) -> Vec<(Layer, NodeId, f64)> {
        let mut out = Vec::new();
        for s in &self.samples {
            out.push((s.layer, s.positive, 1.0));
            if let Some(n) = s.negative {
                out.push((s.layer, n, 0.0));
            }
        }
        out
    }
}

pub fn prepare_example<R: Rng>(graph: &SceneGraph, config: &GenConfig, mode: TargetMode, rng: &mut R) -> Result<PreparedExample> {
    let target = sample_target(graph, config, mode, rng)?;
    let samples = sample_layer_nodes(graph, &target, rng)?;
    Ok(PreparedExample { target, samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub layer: Layer,
    pub node: NodeId,
    pub label: f64,
    pub p: f64,
}

/// Forward pass of one example. Returns the tape, the mean BCE over its
/// sampled nodes and the individual scores.
pub fn example_loss(
    model: &HmsModel,
    emb: &EmbeddingTable,
    graph: &SceneGraph,
    example: &PreparedExample,
) -> Result<(Tape, Var, Vec<ScoredSample>)> {
    let mut fwd = GraphForward::new(model, emb, &example.target.description)?;
    let mut losses = Vec::new();
    let mut scored = Vec::new();
    for (layer, node, label) in example.labeled_nodes() {
        let p = fwd.score(graph, node)?;
        scored.push(ScoredSample {
            layer,
            node,
            label,
            p: fwd.value(p),
        });
        losses.push(fwd.tape_mut().bce(p, label)?);
    }
    let mut tape = fwd.into_tape();
    let loss = tape.mean(&losses)?;
    Ok((tape, loss, scored))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    /// Mean BCE over every sampled node of the batch, before the update.
    pub mean_loss: f64,
    pub nodes: usize,
    pub scored: Vec<ScoredSample>,
}

/// One optimizer step on a prepared batch. Forward passes run in parallel;
/// gradients are accumulated in batch order so the result does not depend
/// on scheduling.
pub fn train_step(
    model: &mut HmsModel,
    emb: &EmbeddingTable,
    batch: &[(&SceneGraph, &PreparedExample)],
) -> Result<StepStats> {
    let frozen: &HmsModel = model;
    let forwards: Vec<(Tape, Var, Vec<ScoredSample>)> = batch
        .par_iter()
        .map(|(g, ex)| example_loss(frozen, emb, g, ex))
        .collect::<Result<_>>()?;
    let nodes: usize = forwards.iter().map(|f| f.2.len()).sum();
    if nodes == 0 {
        return Err(Error::Invalid("batch contains no sampled nodes".into()));
    }
    let total = nodes as f64;
    let mut mean_loss = 0.0;
    model.params.zero_grad();
    for (tape, loss, scored) in &forwards {
        let share = scored.len() as f64 / total;
        mean_loss += tape.scalar(*loss)? * share;
        tape.backward_scaled(*loss, share, &mut model.params)?;
    }
    model.params.adam_step()?;
    Ok(StepStats {
        mean_loss,
        nodes,
        scored: forwards.into_iter().flat_map(|f| f.2).collect(),
    })
}

/// Draws `count` examples from `graphs` uniformly with replacement. A draw
/// without a usable target is retried a few times and then dropped.
pub fn sample_batch<'g, R: Rng>(
    graphs: &'g [SceneGraph],
    config: &GenConfig,
    mode: TargetMode,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(&'g SceneGraph, PreparedExample)>> {
    if graphs.is_empty() {
        return Err(Error::Invalid("no graphs to sample from".into()));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut ok = None;
        for _ in 0..RESAMPLE_LIMIT {
            let g = &graphs[rng.gen_range(0..graphs.len())];
            match prepare_example(g, config, mode, rng) {
                Ok(ex) => {
                    ok = Some((g, ex));
                    break;
                }
                Err(e) => log::debug!("resampling graph: {e}"),
            }
        }
        match ok {
            Some(x) => out.push(x),
            None => log::warn!("skipping a batch slot after {RESAMPLE_LIMIT} unusable draws"),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    pub container_acc: f64,
    pub object_acc: f64,
}

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,mean_loss,container_acc,object_acc\n");
    for m in metrics {
        writeln!(out, "{},{:.6},{:.6},{:.6}", m.epoch, m.mean_loss, m.container_acc, m.object_acc)
            .expect("writing to a string");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub metrics: Vec<EpochMetrics>,
    pub steps: u64,
}

/// Runs the full schedule. After every epoch the model is scored on
/// held-out targets: those of `validation` if given, otherwise held-out
/// assets hidden in the training graphs. With `out_dir`, the metrics CSV
/// and a checkpoint per epoch are written there.
pub fn train(
    model: &mut HmsModel,
    emb: &EmbeddingTable,
    dataset: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainReport> {
    config.validate()?;
    if dataset.graphs.is_empty() {
        return Err(Error::Invalid("training dataset is empty".into()));
    }
    model.set_adam_config(config.adam);
    let val = validation.unwrap_or(dataset);
    let val_graphs = &val.graphs[..config.validation_graphs.min(val.graphs.len())];
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
    }
    let mut metrics = Vec::new();
    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for b in 0..config.batches_per_epoch {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[epoch as u64, b as u64]));
            let batch = sample_batch(
                &dataset.graphs,
                &dataset.config,
                TargetMode::Train,
                config.graphs_per_batch,
                &mut rng,
            )?;
            if batch.is_empty() {
                log::warn!("epoch {epoch} batch {b}: no usable graphs");
                continue;
            }
            let refs: Vec<(&SceneGraph, &PreparedExample)> = batch.iter().map(|(g, e)| (*g, e)).collect();
            loss_sum += train_step(model, emb, &refs)?.mean_loss;
            batches += 1;
        }
        let mean_loss = if batches == 0 { f64::NAN } else { loss_sum / batches as f64 };
        let (container_acc, object_acc) = if val_graphs.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let policy = Policy::model(config.variant.as_str(), Arc::new(model.clone()));
            let env = PolicyEnv {
                embeddings: emb,
                config: &val.config,
            };
            let acc = classification_accuracy(
                &policy,
                &env,
                val_graphs,
                TargetMode::Test,
                config.validation_samples_per_graph,
                derive_seed(config.seed, &[u64::MAX]),
            )?;
            (
                acc.container_accuracy.unwrap_or(f64::NAN),
                acc.object_accuracy.unwrap_or(f64::NAN),
            )
        };
        log::info!(
            "epoch {}/{}: loss {mean_loss:.4}, container acc {container_acc:.3}, object acc {object_acc:.3}",
            epoch + 1,
            config.epochs
        );
        metrics.push(EpochMetrics {
            epoch: epoch + 1,
            mean_loss,
            container_acc,
            object_acc,
        });
        if let Some(dir) = out_dir {
            model.save(&dir.join("checkpoints").join(format!("epoch_{:03}.json", epoch + 1)))?;
            let path = dir.join("metrics.csv");
            std::fs::write(&path, metrics_csv(&metrics)).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(TrainReport {
        metrics,
        steps: model.params.adam().t,
    })
}
