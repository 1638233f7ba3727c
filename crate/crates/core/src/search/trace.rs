//! JSON-lines traces and their independent replay.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::{Action, ActionKind, SearchTrace, ThresholdState};
use crate::error::{Error, Result};
use crate::graph::{Detector, NodeId, NodeKind, SceneGraph, TargetSpec};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        graph_hash: String,
        target: TargetSpec,
        container_policy: String,
        object_policy: String,
        seed: u64,
        t0: f64,
        restarts: usize,
        found: bool,
        total_actions: usize,
        thresholds: ThresholdState,
    },
    Action {
        index: usize,
        #[serde(flatten)]
        action: Action,
    },
}

pub fn trace_to_jsonl(trace: &SearchTrace) -> String {
    let header = Line::Header {
        graph_hash: trace.graph_hash.clone(),
        target: trace.target.clone(),
        container_policy: trace.container_policy.clone(),
        object_policy: trace.object_policy.clone(),
        seed: trace.seed,
        t0: trace.t0,
        restarts: trace.restarts,
        found: trace.found,
        total_actions: trace.total_actions,
        thresholds: trace.thresholds.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("trace header serializes");
    out.push('\n');
    for (index, action) in trace.actions.iter().enumerate() {
        let line = Line::Action {
            index,
            action: action.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("action serializes"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<SearchTrace> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |n: usize, e: serde_json::Error| Error::Invalid(format!("trace line {}: {e}", n + 1));
    let (n, first) = lines.next().ok_or_else(|| Error::Invalid("empty trace".into()))?;
    let Line::Header {
        graph_hash,
        target,
        container_policy,
        object_policy,
        seed,
        t0,
        restarts,
        found,
        total_actions,
        thresholds,
    } = serde_json::from_str(first).map_err(|e| bad(n, e))?
    else {
        return Err(Error::Invalid("trace does not start with a header".into()));
    };
    let mut actions = Vec::new();
    for (n, line) in lines {
        match serde_json::from_str(line).map_err(|e| bad(n, e))? {
            Line::Action { index, action } if index == actions.len() => actions.push(action),
            Line::Action { index, .. } => {
                return Err(Error::Invalid(format!("trace line {}: action index {index} out of order", n + 1)))
            }
            Line::Header { .. } => return Err(Error::Invalid(format!("trace line {}: second header", n + 1))),
        }
    }
    Ok(SearchTrace {
        graph_hash,
        target,
        container_policy,
        object_policy,
        seed,
        t0,
        actions,
        restarts,
        found,
        total_actions,
        thresholds,
    })
}

pub fn write_trace(path: &Path, trace: &SearchTrace) -> Result<()> {
    std::fs::write(path, trace_to_jsonl(trace)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<SearchTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trace_from_jsonl(&text)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("trace was recorded on graph {recorded}, replaying on {actual}")]
    GraphMismatch { recorded: String, actual: String },
    #[error("action {index}: {kind:?} on {node}, which is a {found:?}")]
    WrongKind {
        index: usize,
        kind: ActionKind,
        node: NodeId,
        found: NodeKind,
    },
    #[error("action {index}: {node} is not inside the current {expected:?}")]
    NotReachable {
        index: usize,
        node: NodeId,
        expected: NodeKind,
    },
    #[error("action {index}: {node} is not a detected object")]
    NotVisible { index: usize, node: NodeId },
    #[error("target became visible at action {index}, before the trace ended")]
    FoundEarly { index: usize },
    #[error("trace claims found={claimed} but replay gives {actual}")]
    Outcome { claimed: bool, actual: bool },
    #[error("trace counts {claimed} actions but logs {logged}")]
    Count { claimed: usize, logged: usize },
    #[error("action {index}: {message}")]
    Graph { index: usize, message: String },
}

/// Re-executes the actions of `trace` on a fresh copy of the episode graph,
/// checking that each one is physically possible from where the agent is.
pub fn verify_trace(graph: &SceneGraph, trace: &SearchTrace) -> std::result::Result<(), ReplayError> {
    let actual = graph.content_hash();
    if actual != trace.graph_hash {
        return Err(ReplayError::GraphMismatch {
            recorded: trace.graph_hash.clone(),
            actual,
        });
    }
    if trace.total_actions != trace.actions.len() {
        return Err(ReplayError::Count {
            claimed: trace.total_actions,
            logged: trace.actions.len(),
        });
    }
    let mut g = graph.clone();
    let detector = Detector::default();
    let target = trace.target.object_id;
    let gerr = |index: usize, e: &dyn std::fmt::Display| ReplayError::Graph {
        index,
        message: e.to_string(),
    };
    let (mut room, mut storage, mut shelf) = (None, None, None);
    let mut found = false;
    for (index, a) in trace.actions.iter().enumerate() {
        if found {
            return Err(ReplayError::FoundEarly { index: index - 1 });
        }
        let kind = g.kind(a.node).map_err(|e| gerr(index, &e))?;
        let (expected_kind, inside, inside_kind) = match a.kind {
            ActionKind::EnterRoom => (NodeKind::Room, Some(g.root()), NodeKind::House),
            ActionKind::OpenStorage => (NodeKind::Storage, room, NodeKind::Room),
            ActionKind::LookShelf => (NodeKind::Shelf, storage, NodeKind::Storage),
            ActionKind::RemoveObject => (NodeKind::Object, shelf, NodeKind::Shelf),
        };
        if kind != expected_kind {
            return Err(ReplayError::WrongKind {
                index,
                kind: a.kind,
                node: a.node,
                found: kind,
            });
        }
        if inside.is_none() || g.parent(a.node) != inside {
            return Err(ReplayError::NotReachable {
                index,
                node: a.node,
                expected: inside_kind,
            });
        }
        match a.kind {
            ActionKind::EnterRoom => {
                room = Some(a.node);
                storage = None;
                shelf = None;
            }
            ActionKind::OpenStorage => {
                storage = Some(a.node);
                shelf = None;
            }
            ActionKind::LookShelf => {
                shelf = Some(a.node);
                g.mark_explored(a.node).map_err(|e| gerr(index, &e))?;
            }
            ActionKind::RemoveObject => {
                if !detector.is_visible(&g, a.node).map_err(|e| gerr(index, &e))? {
                    return Err(ReplayError::NotVisible { index, node: a.node });
                }
                detector.remove_object(&mut g, a.node).map_err(|e| gerr(index, &e))?;
            }
        }
        found = shelf.is_some()
            && g.parent(target) == shelf
            && detector.is_visible(&g, target).map_err(|e| gerr(index, &e))?;
    }
    if found != trace.found {
        return Err(ReplayError::Outcome {
            claimed: trace.found,
            actual: found,
        });
    }
    Ok(())
}

pub fn replay_trace(graph: &SceneGraph, trace: &SearchTrace) -> bool {
    match verify_trace(graph, trace) {
        Ok(()) => true,
        Err(e) => {
            log::debug!("replay failed: {e}");
            false
        }
    }
}
