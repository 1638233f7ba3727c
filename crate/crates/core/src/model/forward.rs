//! Featurization, message passing and scoring on a tape.
//!
//! The starting vector of a room is its raw feature. Every other node
//! starts from the message computed with its parent,
//! `msg([start(parent) ‖ raw(node)])`, so vectors computed while scoring one
//! level are the ones carried into the next. A container is scored from
//! `mean(start(c), mean over known children of start(child))`, or from
//! `start(c)` alone when none of its children are known.

use std::collections::HashMap;

use super::{HmsModel, ModelVariant, VOLUME_NORM_LITERS};
use crate::embeddings::{cosine_similarity, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{Detector, NodeId, NodeKind, SceneGraph, SceneNode};
use crate::nn::{ParamStore, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Container,
    Object,
}

impl Head {
    fn prefix(self) -> &'static str {
        match self {
            Head::Container => "head_container",
            Head::Object => "head_object",
        }
    }
}

/// Two dense layers with a ReLU between them.
fn mlp2(tape: &mut Tape, params: &ParamStore, name: &str, x: Var) -> Result<Var> {
    let h = tape.linear(params, &format!("{name}.0"), x)?;
    let h = tape.relu(h);
    Ok(tape.linear(params, &format!("{name}.1"), h)?)
}

pub fn featurize_container(tape: &mut Tape, params: &ParamStore, emb: &EmbeddingTable, node: &SceneNode) -> Result<Var> {
    if !matches!(node.kind, NodeKind::Room | NodeKind::Storage | NodeKind::Shelf) {
        return Err(Error::Model(format!("{} is not a container", node.id)));
    }
    let mut input = emb.embed_phrase(&node.label)?;
    input.push(node.volume / VOLUME_NORM_LITERS);
    let x = tape.input(input);
    mlp2(tape, params, "feat_container", x)
}

/// Pre-featurizer input vector of a detected object.
pub fn object_input(emb: &EmbeddingTable, node: &SceneNode, variant: ModelVariant, target_vec: &[f64]) -> Result<Vec<f64>> {
    if node.kind != NodeKind::Object {
        return Err(Error::Model(format!("{} is not an object", node.id)));
    }
    if node.removed {
        return Err(Error::Model(format!("{} has been removed", node.id)));
    }
    let p = node
        .placement
        .as_ref()
        .ok_or_else(|| Error::Model(format!("{} has no placement", node.id)))?;
    let bbox = [p.cx, p.cy, p.w, p.h];
    let label = emb.embed_phrase(&node.label)?;
    Ok(match variant {
        ModelVariant::Hms | ModelVariant::NoMessagePassing => label.into_iter().chain(bbox).collect(),
        ModelVariant::NoObjectLabel => std::iter::repeat_n(0.0, label.len()).chain(bbox).collect(),
        ModelVariant::ContextVector => {
            let cos = cosine_similarity(&label, target_vec)?;
            bbox.into_iter().chain([cos]).collect()
        }
    })
}

pub fn featurize_object(
    tape: &mut Tape,
    params: &ParamStore,
    emb: &EmbeddingTable,
    node: &SceneNode,
    variant: ModelVariant,
    target_vec: &[f64],
) -> Result<Var> {
    let x = tape.input(object_input(emb, node, variant, target_vec)?);
    mlp2(tape, params, "feat_object", x)
}

pub fn featurize_target(tape: &mut Tape, params: &ParamStore, emb: &EmbeddingTable, description: &str) -> Result<Var> {
    let x = tape.input(emb.embed_phrase(description)?);
    mlp2(tape, params, "feat_target", x)
}

fn message_child(tape: &mut Tape, params: &ParamStore, f_p: Var, f_c: Var) -> Result<Var> {
    let joined = tape.concat(f_p, f_c);
    mlp2(tape, params, "msg", joined)
}

/// Returns `(f'_p, [f'_c])`. With no children the parent is unchanged.
pub fn message_pass(tape: &mut Tape, params: &ParamStore, f_p: Var, children: &[Var]) -> Result<(Var, Vec<Var>)> {
    if children.is_empty() {
        return Ok((f_p, Vec::new()));
    }
    let updated: Vec<Var> = children
        .iter()
        .map(|&c| message_child(tape, params, f_p, c))
        .collect::<Result<_>>()?;
    let agg = tape.mean(&updated)?;
    let parent = tape.mean(&[f_p, agg])?;
    Ok((parent, updated))
}

/// `sigmoid(head(f_node ⊙ f_t))`.
pub fn score_node(tape: &mut Tape, params: &ParamStore, f_node: Var, f_t: Var, head: Head) -> Result<Var> {
    let prefix = head.prefix();
    let x = tape.mul(f_node, f_t)?;
    let h = tape.linear(params, &format!("{prefix}.0"), x)?;
    let h = tape.relu(h);
    let h = tape.linear(params, &format!("{prefix}.1"), h)?;
    let h = tape.relu(h);
    let z = tape.linear(params, &format!("{prefix}.2"), h)?;
    Ok(tape.sigmoid(z))
}

/// Forward state for one (graph, target) pair. Raw and starting vectors
/// are memoised, so scoring one level and then the next reuses the
/// vectors carried down from the parent.
pub struct GraphForward<'a> {
    model: &'a HmsModel,
    emb: &'a EmbeddingTable,
    tape: Tape,
    target_vec: Vec<f64>,
    f_t: Var,
    raw: HashMap<NodeId, Var>,
    start: HashMap<NodeId, Var>,
    detector: Detector,
}

impl<'a> GraphForward<'a> {
    pub fn new(model: &'a HmsModel, emb: &'a EmbeddingTable, target_description: &str) -> Result<Self> {
        let mut tape = Tape::new();
        let target_vec = emb.embed_phrase(target_description)?;
        let f_t = featurize_target(&mut tape, &model.params, emb, target_description)?;
        Ok(GraphForward {
            model,
            emb,
            tape,
            target_vec,
            f_t,
            raw: HashMap::new(),
            start: HashMap::new(),
            detector: Detector::default(),
        })
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn tape_mut(&mut self) -> &mut Tape {
        &mut self.tape
    }

    pub fn into_tape(self) -> Tape {
        self.tape
    }

    pub fn f_t(&self) -> Var {
        self.f_t
    }

    pub fn value(&self, v: Var) -> f64 {
        self.tape.value(v)[0]
    }

    pub fn raw(&mut self, graph: &SceneGraph, id: NodeId) -> Result<Var> {
        if let Some(&v) = self.raw.get(&id) {
            return Ok(v);
        }
        let node = graph.node(id)?;
        let params = &self.model.params;
        let v = match node.kind {
            NodeKind::Object => featurize_object(&mut self.tape, params, self.emb, node, self.model.variant, &self.target_vec)?,
            _ => featurize_container(&mut self.tape, params, self.emb, node)?,
        };
        self.raw.insert(id, v);
        Ok(v)
    }

    /// Vector a node enters its own scoring with.
    pub fn start(&mut self, graph: &SceneGraph, id: NodeId) -> Result<Var> {
        if !self.model.variant.uses_message_passing() {
            return self.raw(graph, id);
        }
        if let Some(&v) = self.start.get(&id) {
            return Ok(v);
        }
        let v = match graph.kind(id)? {
            NodeKind::House => return Err(Error::Model("the house is not scored".into())),
            NodeKind::Room => self.raw(graph, id)?,
            _ => {
                let parent = graph
                    .parent(id)
                    .ok_or_else(|| Error::Model(format!("{id} has no parent")))?;
                let f_p = self.start(graph, parent)?;
                let f_c = self.raw(graph, id)?;
                message_child(&mut self.tape, &self.model.params, f_p, f_c)?
            }
        };
        self.start.insert(id, v);
        Ok(v)
    }

    /// Children whose features are observable: the sub-containers of rooms
    /// and storage, and the detected objects of a shelf. Shelves are only
    /// scored once their storage is open, when their front is in view.
    pub fn known_children(&self, graph: &SceneGraph, id: NodeId) -> Result<Vec<NodeId>> {
        let node = graph.node(id)?;
        Ok(match node.kind {
            NodeKind::House | NodeKind::Room | NodeKind::Storage => node.children.clone(),
            NodeKind::Shelf => self.detector.visible_objects(graph, id)?,
            NodeKind::Object => Vec::new(),
        })
    }

    pub fn container_score(&mut self, graph: &SceneGraph, id: NodeId) -> Result<Var> {
        let kind = graph.kind(id)?;
        if !matches!(kind, NodeKind::Room | NodeKind::Storage | NodeKind::Shelf) {
            return Err(Error::Model(format!("{id} is a {kind:?}, not a scoreable container")));
        }
        let f = if self.model.variant.uses_message_passing() {
            let own = self.start(graph, id)?;
            let kids = self.known_children(graph, id)?;
            if kids.is_empty() {
                own
            } else {
                let carried: Vec<Var> = kids.iter().map(|&k| self.start(graph, k)).collect::<Result<_>>()?;
                let agg = self.tape.mean(&carried)?;
                self.tape.mean(&[own, agg])?
            }
        } else {
            self.raw(graph, id)?
        };
        score_node(&mut self.tape, &self.model.params, f, self.f_t, Head::Container)
    }

    pub fn object_score(&mut self, graph: &SceneGraph, id: NodeId) -> Result<Var> {
        if !self.detector.is_visible(graph, id)? {
            return Err(Error::Model(format!("{id} is not a detected object")));
        }
        let f = self.start(graph, id)?;
        score_node(&mut self.tape, &self.model.params, f, self.f_t, Head::Object)
    }

    pub fn score(&mut self, graph: &SceneGraph, id: NodeId) -> Result<Var> {
        match graph.kind(id)? {
            NodeKind::Object => self.object_score(graph, id),
            _ => self.container_score(graph, id),
        }
    }

    /// Scores of the observable children of `parent`, in child order. For a
    /// shelf these are its currently detected objects.
    pub fn evaluate_children(&mut self, graph: &SceneGraph, parent: NodeId) -> Result<Vec<(NodeId, f64)>> {
        let kids = match graph.kind(parent)? {
            NodeKind::Shelf => self.detector.visible_objects(graph, parent)?,
            NodeKind::Object => return Err(Error::Model(format!("{parent} has no children"))),
            _ => graph.children(parent)?.to_vec(),
        };
        kids.into_iter()
            .map(|k| {
                let v = self.score(graph, k)?;
                Ok((k, self.value(v)))
            })
            .collect()
    }
}
