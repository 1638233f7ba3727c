//! Scorers that drive the search: the learned model, the oracle and the
//! heuristic baselines.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{cosine_similarity, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{occluders_of, Detector, NodeId, NodeKind, SceneGraph, TargetSpec};
use crate::model::{GraphForward, HmsModel};
use crate::procgen::{container_prior, GenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Container,
    Object,
}

impl Role {
    pub fn of(kind: NodeKind) -> Option<Role> {
        match kind {
            NodeKind::Room | NodeKind::Storage | NodeKind::Shelf => Some(Role::Container),
            NodeKind::Object => Some(Role::Object),
            NodeKind::House => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Container => "container",
            Role::Object => "object",
        }
    }
}

/// What the oracle's object scores should express. In classification the
/// positives are exactly the occluders of the target; during search the
/// oracle marks a smallest set whose removal reveals the target, which is
/// what makes its action count optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleMode {
    Classification,
    Search,
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    Oracle,
    /// Uniform random score.
    Random,
    /// Rescaled cosine between label and target description vectors.
    WordVector,
    /// Generation-table prior of the container holding the target category.
    Prior,
    /// Nearness to the camera, rank-normalized over the detected objects.
    NearRank,
    /// Front-view area, rank-normalized over the detected objects.
    LargeRank,
    Model(Arc<HmsModel>),
}

#[derive(Debug, Clone)]
pub struct Policy {
    pub name: String,
    pub kind: PolicyKind,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Policy {
    pub fn new(name: &str, kind: PolicyKind) -> Self {
        Policy {
            name: name.to_string(),
            kind,
        }
    }

    pub fn oracle() -> Self {
        Self::new("oracle", PolicyKind::Oracle)
    }

    pub fn random() -> Self {
        Self::new("rnd", PolicyKind::Random)
    }

    pub fn word_vector() -> Self {
        Self::new("wv", PolicyKind::WordVector)
    }

    pub fn prior() -> Self {
        Self::new("ms", PolicyKind::Prior)
    }

    pub fn near_rank() -> Self {
        Self::new("nr", PolicyKind::NearRank)
    }

    pub fn large_rank() -> Self {
        Self::new("lr", PolicyKind::LargeRank)
    }

    pub fn model(name: &str, model: Arc<HmsModel>) -> Self {
        Self::new(name, PolicyKind::Model(model))
    }

    pub fn supports(&self, role: Role) -> bool {
        match self.kind {
            PolicyKind::Prior => role == Role::Container,
            PolicyKind::NearRank | PolicyKind::LargeRank => role == Role::Object,
            _ => true,
        }
    }

    pub fn check_role(&self, role: Role) -> Result<()> {
        if self.supports(role) {
            Ok(())
        } else {
            Err(Error::Policy(format!(
                "policy {} cannot be used as the {} scorer",
                self.name,
                role.as_str()
            )))
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.kind, PolicyKind::Random)
    }

    /// Per-episode scoring state.
    pub fn runtime<'a>(
        &'a self,
        env: &'a PolicyEnv<'a>,
        target: &TargetSpec,
        oracle_mode: OracleMode,
        seed: u64,
    ) -> Result<PolicyRuntime<'a>> {
        let state = match &self.kind {
            PolicyKind::Oracle => State::Oracle { mode: oracle_mode },
            PolicyKind::Random => State::Random(ChaCha8Rng::seed_from_u64(seed)),
            PolicyKind::WordVector => State::WordVector {
                target_vec: env.embeddings.embed_phrase(&target.description)?,
            },
            PolicyKind::Prior => State::Prior,
            PolicyKind::NearRank => State::NearRank,
            PolicyKind::LargeRank => State::LargeRank,
            PolicyKind::Model(model) => State::Model(Box::new(GraphForward::new(
                model,
                env.embeddings,
                &target.description,
            )?)),
        };
        Ok(PolicyRuntime {
            policy: self,
            env,
            target: target.clone(),
            state,
        })
    }
}

/// Shared read-only inputs of every policy.
#[derive(Clone, Copy)]
pub struct PolicyEnv<'a> {
    pub embeddings: &'a EmbeddingTable,
    /// Tables the evaluated graphs were generated from.
    pub config: &'a GenConfig,
}

enum State<'a> {
    Oracle { mode: OracleMode },
    Random(ChaCha8Rng),
    WordVector { target_vec: Vec<f64> },
    Prior,
    NearRank,
    LargeRank,
    Model(Box<GraphForward<'a>>),
}

pub struct PolicyRuntime<'a> {
    policy: &'a Policy,
    env: &'a PolicyEnv<'a>,
    target: TargetSpec,
    state: State<'a>,
}

/// Dense rank of each value among `values`, scaled to [0, 1]. A single
/// distinct value maps to 1.
pub fn rank_normalize(values: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return vec![1.0; values.len()];
    }
    let top = (distinct.len() - 1) as f64;
    values
        .iter()
        .map(|v| distinct.partition_point(|d| d < v) as f64 / top)
        .collect()
}

impl<'a> PolicyRuntime<'a> {
    pub fn policy(&self) -> &Policy {
        self.policy
    }

    /// Scores `nodes`, which must all be children of one parent. For
    /// objects, `nodes` is the list of detected objects the rank baselines
    /// normalize over.
    pub fn score_all(&mut self, graph: &SceneGraph, nodes: &[NodeId]) -> Result<Vec<f64>> {
        for &n in nodes {
            let kind = graph.kind(n)?;
            let role = Role::of(kind).ok_or_else(|| Error::Invalid(format!("{n} is not scoreable")))?;
            if !self.policy.supports(role) {
                return Err(Error::Role {
                    policy: self.policy.name.clone(),
                    kind,
                    node: n,
                });
            }
        }
        match &mut self.state {
            State::NearRank => {
                let v: Vec<f64> = nodes
                    .iter()
                    .map(|&n| graph.placement(n).map(|p| 1.0 - p.depth))
                    .collect::<std::result::Result<_, _>>()?;
                Ok(rank_normalize(&v))
            }
            State::LargeRank => {
                let v: Vec<f64> = nodes
                    .iter()
                    .map(|&n| graph.placement(n).map(|p| p.area()))
                    .collect::<std::result::Result<_, _>>()?;
                Ok(rank_normalize(&v))
            }
            _ => nodes.iter().map(|&n| self.score_one(graph, n)).collect(),
        }
    }

    fn score_one(&mut self, graph: &SceneGraph, node: NodeId) -> Result<f64> {
        let target = &self.target;
        match &mut self.state {
            State::Oracle { mode } => {
                let mode = *mode;
                oracle_score(graph, target, node, mode)
            }
            State::Random(rng) => Ok(rng.gen::<f64>()),
            State::WordVector { target_vec } => {
                let label = self.env.embeddings.embed_phrase(&graph.node(node)?.label)?;
                Ok((cosine_similarity(&label, target_vec)? + 1.0) / 2.0)
            }
            State::Prior => Ok(container_prior(self.env.config, graph, node, &target.category)?),
            State::Model(fwd) => {
                let v = fwd.score(graph, node)?;
                Ok(fwd.value(v))
            }
            State::NearRank | State::LargeRank => unreachable!("rank policies score whole lists"),
        }
    }
}

fn oracle_score(graph: &SceneGraph, target: &TargetSpec, node: NodeId, mode: OracleMode) -> Result<f64> {
    let kind = graph.kind(node)?;
    if kind != NodeKind::Object {
        return Ok(if graph.in_subtree(node, target.object_id) { 1.0 } else { 0.0 });
    }
    let shelf = graph.parent(target.object_id);
    if graph.parent(node) != shelf {
        return Ok(0.0);
    }
    let shelf = shelf.ok_or_else(|| Error::Invalid("target without shelf".into()))?;
    let positive = match mode {
        OracleMode::Classification => occluders_of(graph, shelf, target.object_id)?.contains(&node),
        OracleMode::Search => minimum_reveal_set(graph, target.object_id)?.contains(&node),
    };
    Ok(if positive { 1.0 } else { 0.0 })
}

/// Whether removing `set` (each member removable once the earlier ones are
/// gone) leaves `target` visible.
fn reveals(graph: &SceneGraph, target: NodeId, set: &[NodeId], detector: &Detector) -> Result<bool> {
    let mut g = graph.clone();
    let mut left: Vec<NodeId> = set.to_vec();
    while !left.is_empty() {
        let Some(pos) = left
            .iter()
            .position(|&o| detector.is_visible(&g, o).unwrap_or(false))
        else {
            return Ok(false);
        };
        detector.remove_object(&mut g, left.remove(pos))?;
    }
    Ok(detector.is_visible(&g, target)?)
}

/// The smallest set of objects whose removal reveals `target`, choosing
/// the lexicographically first (by id) among sets of that size. Only
/// objects nearer than the target can matter. Empty when the target is
/// already visible.
pub fn minimum_reveal_set(graph: &SceneGraph, target: NodeId) -> Result<BTreeSet<NodeId>> {
    let detector = Detector::default();
    if detector.is_visible(graph, target)? {
        return Ok(BTreeSet::new());
    }
    let shelf = graph
        .parent(target)
        .ok_or_else(|| Error::Invalid("target without shelf".into()))?;
    let depth = graph.placement(target)?.depth;
    let mut candidates = Vec::new();
    for &c in graph.children(shelf)? {
        let n = graph.node(c)?;
        if c != target && !n.removed && graph.placement(c)?.depth < depth {
            candidates.push(c);
        }
    }
    candidates.sort();
    for k in 1..=candidates.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let set: Vec<NodeId> = idx.iter().map(|&i| candidates[i]).collect();
            if reveals(graph, target, &set, &detector)? {
                return Ok(set.into_iter().collect());
            }
            // next combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] < candidates.len() - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    Err(Error::Invalid(format!("no set of removals reveals {target}")))
}
