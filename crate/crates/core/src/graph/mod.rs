//! Hierarchical scene graphs: house, rooms, storage locations, shelves and
//! the objects placed on those shelves.
//!
//! Node ids are dense indices assigned in insertion order, so the root house
//! is always [`NodeId::ROOT`]. Objects carry a front-view [`Placement`] used
//! by the occlusion model in [`occlusion`].

mod io;
pub mod occlusion;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{deserialize_graph, read_graphs, serialize_graph, write_graphs, GRAPH_FORMAT, GRAPH_FORMAT_VERSION};
pub use occlusion::{
    is_visible, occluders_of, occlusion_fraction, remove_object, visible_objects, Detector, Rect,
    MIN_UNOCCLUDED_FRACTION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {node} is a {found:?}, expected {expected:?}")]
    KindMismatch {
        node: NodeId,
        expected: NodeKind,
        found: NodeKind,
    },
    #[error("node {child} is not a child of {parent}")]
    NotChild { parent: NodeId, child: NodeId },
    #[error("object {0} has already been removed")]
    AlreadyRemoved(NodeId),
    #[error("object {0} is not visible and cannot be removed")]
    NotVisible(NodeId),
    #[error("a {child:?} cannot be placed under a {parent:?}")]
    InvalidEdge { parent: NodeKind, child: NodeKind },
    #[error("invalid scene graph: {0}")]
    Invalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    House,
    Room,
    Storage,
    Shelf,
    Object,
}

impl NodeKind {
    /// The only kind allowed directly below this one.
    pub fn child_kind(self) -> Option<NodeKind> {
        match self {
            NodeKind::House => Some(NodeKind::Room),
            NodeKind::Room => Some(NodeKind::Storage),
            NodeKind::Storage => Some(NodeKind::Shelf),
            NodeKind::Shelf => Some(NodeKind::Object),
            NodeKind::Object => None,
        }
    }

    /// Rooms, storage locations and shelves.
    pub fn is_container(self) -> bool {
        matches!(self, NodeKind::Room | NodeKind::Storage | NodeKind::Shelf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::House => "house",
            NodeKind::Room => "room",
            NodeKind::Storage => "storage",
            NodeKind::Shelf => "shelf",
            NodeKind::Object => "object",
        }
    }
}

/// Front-view placement of an object on its shelf, in normalized image
/// coordinates. `depth` 0 is the front of the shelf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub depth: f64,
    pub category: String,
}

impl Placement {
    pub fn rect(&self) -> Rect {
        Rect::centered(self.cx, self.cy, self.w, self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn check(&self) -> std::result::Result<(), String> {
        const EPS: f64 = 1e-9;
        let finite = [self.cx, self.cy, self.w, self.h, self.depth]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("non-finite placement".into());
        }
        if !(self.w > 0.0 && self.w <= 1.0 && self.h > 0.0 && self.h <= 1.0) {
            return Err(format!("extents ({}, {}) outside (0, 1]", self.w, self.h));
        }
        let r = self.rect();
        if r.x0 < -EPS || r.y0 < -EPS || r.x1 > 1.0 + EPS || r.y1 > 1.0 + EPS {
            return Err("rectangle leaves the unit front view".into());
        }
        if !(0.0..=1.0).contains(&self.depth) {
            return Err(format!("depth {} outside [0, 1]", self.depth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    pub description: String,
    pub volume: f64,
    pub placement: Option<Placement>,
    pub children: Vec<NodeId>,
    pub explored: bool,
    pub removed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    nodes: Vec<SceneNode>,
    parents: Vec<Option<NodeId>>,
}

impl SceneGraph {
    /// A graph holding only the root house.
    pub fn new(house_label: &str) -> Self {
        let root = SceneNode {
            id: NodeId::ROOT,
            kind: NodeKind::House,
            label: house_label.to_string(),
            description: String::new(),
            volume: 0.0,
            placement: None,
            children: Vec::new(),
            explored: false,
            removed: false,
        };
        SceneGraph {
            nodes: vec![root],
            parents: vec![None],
        }
    }

    pub(crate) fn from_nodes(nodes: Vec<SceneNode>) -> Result<Self> {
        let mut parents = vec![None; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if node.id.index() != i {
                return Err(GraphError::Invalid(format!(
                    "node at position {i} has id {}",
                    node.id.0
                )));
            }
            for &c in &node.children {
                let slot = parents
                    .get_mut(c.index())
                    .ok_or(GraphError::UnknownNode(c))?;
                if slot.is_some() {
                    return Err(GraphError::Invalid(format!("node {c} has two parents")));
                }
                *slot = Some(node.id);
            }
        }
        let graph = SceneGraph { nodes, parents };
        graph.validate()?;
        Ok(graph)
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SceneNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&SceneNode> {
        self.nodes.get(id.index()).ok_or(GraphError::UnknownNode(id))
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Result<&mut SceneNode> {
        self.nodes
            .get_mut(id.index())
            .ok_or(GraphError::UnknownNode(id))
    }

    /// Returns the node if it has the expected kind.
    pub fn expect_kind(&self, id: NodeId, expected: NodeKind) -> Result<&SceneNode> {
        let node = self.node(id)?;
        if node.kind != expected {
            return Err(GraphError::KindMismatch {
                node: id,
                expected,
                found: node.kind,
            });
        }
        Ok(node)
    }

    pub fn kind(&self, id: NodeId) -> Result<NodeKind> {
        Ok(self.node(id)?.kind)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parents.get(id.index()).copied().flatten()
    }

    pub fn children(&self, id: NodeId) -> Result<&[NodeId]> {
        Ok(&self.node(id)?.children)
    }

    /// Nearest ancestor (or the node itself) of the given kind.
    pub fn ancestor_of_kind(&self, id: NodeId, kind: NodeKind) -> Option<NodeId> {
        let mut cur = Some(id);
        while let Some(n) = cur {
            if self.nodes.get(n.index())?.kind == kind {
                return Some(n);
            }
            cur = self.parent(n);
        }
        None
    }

    /// True if `node` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn in_subtree(&self, ancestor: NodeId, node: NodeId) -> bool {
        let mut cur = Some(node);
        while let Some(n) = cur {
            if n == ancestor {
                return true;
            }
            cur = self.parent(n);
        }
        false
    }

    pub fn ids_of_kind(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.kind == kind)
            .map(|n| n.id)
            .collect()
    }

    fn push(&mut self, parent: NodeId, mut node: SceneNode) -> Result<NodeId> {
        let pkind = self.kind(parent)?;
        if pkind.child_kind() != Some(node.kind) {
            return Err(GraphError::InvalidEdge {
                parent: pkind,
                child: node.kind,
            });
        }
        if node.label.trim().is_empty() {
            return Err(GraphError::Invalid("empty label".into()));
        }
        let id = NodeId(self.nodes.len() as u32);
        node.id = id;
        self.nodes.push(node);
        self.parents.push(Some(parent));
        self.nodes[parent.index()].children.push(id);
        Ok(id)
    }

    fn container(kind: NodeKind, label: &str, volume: f64) -> SceneNode {
        SceneNode {
            id: NodeId::ROOT,
            kind,
            label: label.to_string(),
            description: String::new(),
            volume,
            placement: None,
            children: Vec::new(),
            explored: false,
            removed: false,
        }
    }

    pub fn add_room(&mut self, label: &str) -> Result<NodeId> {
        self.push(NodeId::ROOT, Self::container(NodeKind::Room, label, 0.0))
    }

    pub fn add_storage(&mut self, room: NodeId, label: &str, volume: f64) -> Result<NodeId> {
        if !(volume >= 0.0 && volume.is_finite()) {
            return Err(GraphError::Invalid(format!("storage volume {volume}")));
        }
        self.push(room, Self::container(NodeKind::Storage, label, volume))
    }

    pub fn add_shelf(&mut self, storage: NodeId, label: &str) -> Result<NodeId> {
        self.push(storage, Self::container(NodeKind::Shelf, label, 0.0))
    }

    pub fn add_object(
        &mut self,
        shelf: NodeId,
        label: &str,
        description: &str,
        placement: Placement,
    ) -> Result<NodeId> {
        if description.trim().is_empty() {
            return Err(GraphError::Invalid("object without description".into()));
        }
        placement.check().map_err(GraphError::Invalid)?;
        let node = SceneNode {
            id: NodeId::ROOT,
            kind: NodeKind::Object,
            label: label.to_string(),
            description: description.to_string(),
            volume: 0.0,
            placement: Some(placement),
            children: Vec::new(),
            explored: false,
            removed: false,
        };
        self.push(shelf, node)
    }

    pub fn placement(&self, obj: NodeId) -> Result<&Placement> {
        self.expect_kind(obj, NodeKind::Object)?
            .placement
            .as_ref()
            .ok_or_else(|| GraphError::Invalid(format!("object {obj} without placement")))
    }

    pub fn mark_explored(&mut self, container: NodeId) -> Result<()> {
        let node = self.node_mut(container)?;
        if !node.kind.is_container() {
            return Err(GraphError::Invalid(format!(
                "{container} is a {:?} and cannot be explored",
                node.kind
            )));
        }
        node.explored = true;
        Ok(())
    }

    /// Checks every structural invariant of the tree.
    pub fn validate(&self) -> Result<()> {
        let root = self.nodes.first().ok_or_else(|| GraphError::Invalid("no root".into()))?;
        if root.kind != NodeKind::House || self.parents[0].is_some() {
            return Err(GraphError::Invalid("node 0 must be a parentless house".into()));
        }
        for node in &self.nodes {
            if node.label.trim().is_empty() {
                return Err(GraphError::Invalid(format!("node {} has an empty label", node.id)));
            }
            if node.id != NodeId::ROOT && self.parent(node.id).is_none() {
                return Err(GraphError::Invalid(format!("node {} is unreachable", node.id)));
            }
            for &c in &node.children {
                let ck = self.kind(c)?;
                if node.kind.child_kind() != Some(ck) {
                    return Err(GraphError::InvalidEdge {
                        parent: node.kind,
                        child: ck,
                    });
                }
            }
            match node.kind {
                NodeKind::Object => {
                    if node.description.trim().is_empty() {
                        return Err(GraphError::Invalid(format!(
                            "object {} has no description",
                            node.id
                        )));
                    }
                    let p = node.placement.as_ref().ok_or_else(|| {
                        GraphError::Invalid(format!("object {} has no placement", node.id))
                    })?;
                    p.check()
                        .map_err(|m| GraphError::Invalid(format!("object {}: {m}", node.id)))?;
                    if node.explored {
                        return Err(GraphError::Invalid(format!("object {} marked explored", node.id)));
                    }
                }
                _ => {
                    if node.placement.is_some() || node.removed {
                        return Err(GraphError::Invalid(format!(
                            "container {} carries object-only fields",
                            node.id
                        )));
                    }
                    if node.kind != NodeKind::Storage && node.volume != 0.0 {
                        return Err(GraphError::Invalid(format!(
                            "only storage nodes have a volume ({})",
                            node.id
                        )));
                    }
                    if !(node.volume >= 0.0 && node.volume.is_finite()) {
                        return Err(GraphError::Invalid(format!("bad volume on {}", node.id)));
                    }
                }
            }
        }
        // Parent links follow the children lists, so a cycle would need a node
        // that is its own ancestor; node 0 has no parent so walking up must end.
        for node in &self.nodes {
            let mut steps = 0;
            let mut cur = self.parent(node.id);
            while let Some(p) = cur {
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(GraphError::Invalid("cycle detected".into()));
                }
                cur = self.parent(p);
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization.
    pub fn content_hash(&self) -> String {
        crate::util::sha256_hex(serialize_graph(self).as_bytes())
    }
}

/// The object an episode searches for. The description is what the agent is
/// told; the detector only ever reports labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub object_id: NodeId,
    pub description: String,
    pub category: String,
}
