//! Greedy depth-first search with per-list skip thresholds.
//!
//! Children of the current node are scored and visited best first. A child
//! scoring below its list's threshold is skipped and lowers the threshold
//! to its score, so every pass that does not find the target makes the
//! next pass more permissive. Thresholds and removals survive restarts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::policy::{OracleMode, Policy, PolicyEnv, PolicyRuntime, Role};
use crate::error::{Error, Result};
use crate::graph::{Detector, NodeId, NodeKind, SceneGraph, TargetSpec};
use crate::util::derive_seed;

pub const DEFAULT_T0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    EnterRoom,
    OpenStorage,
    LookShelf,
    RemoveObject,
}

impl ActionKind {
    pub fn for_kind(kind: NodeKind) -> Option<ActionKind> {
        match kind {
            NodeKind::Room => Some(ActionKind::EnterRoom),
            NodeKind::Storage => Some(ActionKind::OpenStorage),
            NodeKind::Shelf => Some(ActionKind::LookShelf),
            NodeKind::Object => Some(ActionKind::RemoveObject),
            NodeKind::House => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub node: NodeId,
    pub score: f64,
    /// Zero-based pass over the house this action happened in.
    pub pass: usize,
}

/// Threshold of every sibling list, keyed by the parent. Lists that were
/// never lowered sit at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub t0: f64,
    /// Every value each list's threshold has taken, starting with `t0`.
    pub history: BTreeMap<NodeId, Vec<f64>>,
}

impl ThresholdState {
    pub fn new(t0: f64) -> Self {
        ThresholdState {
            t0,
            history: BTreeMap::new(),
        }
    }

    pub fn get(&self, list: NodeId) -> f64 {
        self.history
            .get(&list)
            .and_then(|h| h.last().copied())
            .unwrap_or(self.t0)
    }

    fn lower(&mut self, list: NodeId, to: f64) {
        let t0 = self.t0;
        self.history.entry(list).or_insert_with(|| vec![t0]).push(to);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub graph_hash: String,
    pub target: TargetSpec,
    pub container_policy: String,
    pub object_policy: String,
    pub seed: u64,
    pub t0: f64,
    pub actions: Vec<Action>,
    pub restarts: usize,
    pub found: bool,
    pub total_actions: usize,
    pub thresholds: ThresholdState,
}

impl SearchTrace {
    pub fn removals(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| a.kind == ActionKind::RemoveObject)
            .count()
    }
}

/// Largest number of actions an episode may take on `graph`.
pub fn action_limit(graph: &SceneGraph) -> usize {
    graph.len() * graph.len() + 1
}

struct Episode<'g, 'a> {
    graph: SceneGraph,
    target: &'g TargetSpec,
    container: PolicyRuntime<'a>,
    object: PolicyRuntime<'a>,
    thresholds: ThresholdState,
    actions: Vec<Action>,
    exhausted: BTreeSet<NodeId>,
    detector: Detector,
    pass: usize,
    progress: bool,
    found: bool,
    limit: usize,
}

impl Episode<'_, '_> {
    fn act(&mut self, node: NodeId, score: f64) -> Result<()> {
        let kind = ActionKind::for_kind(self.graph.kind(node)?)
            .ok_or_else(|| Error::Invalid("the house is not an action target".into()))?;
        self.actions.push(Action {
            kind,
            node,
            score,
            pass: self.pass,
        });
        self.progress = true;
        if self.actions.len() > self.limit {
            return Err(Error::ActionGuard { limit: self.limit });
        }
        Ok(())
    }

    fn target_seen_on(&self, shelf: NodeId) -> Result<bool> {
        let t = self.target.object_id;
        Ok(self.graph.parent(t) == Some(shelf) && self.detector.is_visible(&self.graph, t)?)
    }

    /// Sorted (score desc, id asc) scores of `nodes`.
    fn ranked(&mut self, role: Role, nodes: &[NodeId]) -> Result<Vec<(NodeId, f64)>> {
        let scorer = match role {
            Role::Container => &mut self.container,
            Role::Object => &mut self.object,
        };
        let scores = scorer.score_all(&self.graph, nodes)?;
        let mut out: Vec<(NodeId, f64)> = nodes.iter().copied().zip(scores).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(out)
    }

    fn visit_container(&mut self, parent: NodeId) -> Result<()> {
        let children: Vec<NodeId> = self
            .graph
            .children(parent)?
            .iter()
            .copied()
            .filter(|c| !self.exhausted.contains(c))
            .collect();
        if children.is_empty() {
            return Ok(());
        }
        for (child, p) in self.ranked(Role::Container, &children)? {
            if p < self.thresholds.get(parent) {
                self.thresholds.lower(parent, p);
                self.progress = true;
                continue;
            }
            self.act(child, p)?;
            self.graph.mark_explored(child)?;
            if self.graph.kind(child)? == NodeKind::Shelf {
                self.look_shelf(child)?;
            } else {
                self.visit_container(child)?;
            }
            if self.found {
                return Ok(());
            }
            if self.is_exhausted(child)? {
                self.exhausted.insert(child);
            }
        }
        Ok(())
    }

    fn is_exhausted(&self, node: NodeId) -> Result<bool> {
        Ok(match self.graph.kind(node)? {
            // Nothing left that could be removed.
            NodeKind::Shelf => self.detector.visible_objects(&self.graph, node)?.is_empty(),
            _ => self
                .graph
                .children(node)?
                .iter()
                .all(|c| self.exhausted.contains(c)),
        })
    }

    fn look_shelf(&mut self, shelf: NodeId) -> Result<()> {
        if self.target_seen_on(shelf)? {
            self.found = true;
            return Ok(());
        }
        let mut skipped = BTreeSet::new();
        loop {
            let visible: Vec<NodeId> = self
                .detector
                .visible_objects(&self.graph, shelf)?
                .into_iter()
                .filter(|o| !skipped.contains(o))
                .collect();
            if visible.is_empty() {
                return Ok(());
            }
            let mut removed = None;
            for (obj, p) in self.ranked(Role::Object, &visible)? {
                if p < self.thresholds.get(shelf) {
                    self.thresholds.lower(shelf, p);
                    self.progress = true;
                    skipped.insert(obj);
                    continue;
                }
                removed = Some((obj, p));
                break;
            }
            let Some((obj, p)) = removed else {
                return Ok(());
            };
            self.act(obj, p)?;
            self.detector.remove_object(&mut self.graph, obj)?;
            if self.target_seen_on(shelf)? {
                self.found = true;
                return Ok(());
            }
        }
    }
}

/// Runs one search for `target` on a private copy of `graph`.
#[allow(clippy::too_many_arguments)]
pub fn search_episode(
    graph: &SceneGraph,
    target: &TargetSpec,
    container_policy: &Policy,
    object_policy: &Policy,
    env: &PolicyEnv<'_>,
    t0: f64,
    seed: u64,
) -> Result<SearchTrace> {
    if !(t0 > 0.0 && t0 <= 1.0) {
        return Err(Error::Invalid(format!("t0 {t0} is outside (0, 1]")));
    }
    container_policy.check_role(Role::Container)?;
    object_policy.check_role(Role::Object)?;
    let detector = Detector::default();
    graph.expect_kind(target.object_id, NodeKind::Object)?;
    let container = container_policy.runtime(env, target, OracleMode::Search, derive_seed(seed, &[0]))?;
    let object = object_policy.runtime(env, target, OracleMode::Search, derive_seed(seed, &[1]))?;
    let mut ep = Episode {
        graph: graph.clone(),
        target,
        container,
        object,
        thresholds: ThresholdState::new(t0),
        actions: Vec::new(),
        exhausted: BTreeSet::new(),
        detector,
        pass: 0,
        progress: false,
        found: false,
        limit: action_limit(graph),
    };
    let root = graph.root();
    loop {
        ep.progress = false;
        ep.visit_container(root)?;
        if ep.found {
            break;
        }
        if !ep.progress {
            return Err(Error::Stalled { pass: ep.pass });
        }
        ep.pass += 1;
    }
    log::debug!(
        "{}/{}: found {} after {} actions, {} restarts",
        container_policy,
        object_policy,
        target.object_id,
        ep.actions.len(),
        ep.pass
    );
    Ok(SearchTrace {
        graph_hash: graph.content_hash(),
        target: target.clone(),
        container_policy: container_policy.name.clone(),
        object_policy: object_policy.name.clone(),
        seed,
        t0,
        total_actions: ep.actions.len(),
        actions: ep.actions,
        restarts: ep.pass,
        found: true,
        thresholds: ep.thresholds,
    })
}
