//! Front-projection occlusion and the simulated object detector.
//!
//! An object is covered by every non-removed sibling on its shelf that sits
//! strictly nearer to the camera and whose front-view rectangle overlaps it.
//! The detector reports objects whose unoccluded fraction is at least
//! [`MIN_UNOCCLUDED_FRACTION`].

use std::collections::BTreeSet;

use super::{GraphError, NodeId, NodeKind, Result, SceneGraph};

/// Fraction of an object's front view that must be unoccluded for the
/// detector to report it.
pub const MIN_UNOCCLUDED_FRACTION: f64 = 0.7;

const FRACTION_EPS: f64 = 1e-12;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect {
            x0: cx - w / 2.0,
            y0: cy - h / 2.0,
            x1: cx + w / 2.0,
            y1: cy + h / 2.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Exact area of a union of rectangles by slab decomposition along x.
pub fn union_area(rects: &[Rect]) -> f64 {
    if rects.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.x0, r.x1]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(rects.len());
    for pair in xs.windows(2) {
        let (xa, xb) = (pair[0], pair[1]);
        let mid = 0.5 * (xa + xb);
        spans.clear();
        spans.extend(
            rects
                .iter()
                .filter(|r| r.x0 <= mid && mid <= r.x1)
                .map(|r| (r.y0, r.y1)),
        );
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0;
        let (mut lo, mut hi) = spans[0];
        for &(a, b) in &spans[1..] {
            if a > hi {
                covered += hi - lo;
                lo = a;
                hi = b;
            } else if b > hi {
                hi = b;
            }
        }
        covered += hi - lo;
        total += covered * (xb - xa);
    }
    total
}

/// Simulated detector with a configurable visibility threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub min_unoccluded: f64,
}

impl Default for Detector {
    fn default() -> Self {
        Detector {
            min_unoccluded: MIN_UNOCCLUDED_FRACTION,
        }
    }
}

impl Detector {
    pub fn is_visible_fraction(&self, occlusion: f64) -> bool {
        1.0 - occlusion >= self.min_unoccluded - FRACTION_EPS
    }

    /// Non-removed children of `shelf` the detector reports, by id.
    pub fn visible_objects(&self, graph: &SceneGraph, shelf: NodeId) -> Result<Vec<NodeId>> {
        let node = graph.expect_kind(shelf, NodeKind::Shelf)?;
        let mut out = Vec::new();
        for &c in &node.children {
            if graph.node(c)?.removed {
                continue;
            }
            if self.is_visible_fraction(occlusion_fraction(graph, shelf, c)?) {
                out.push(c);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn is_visible(&self, graph: &SceneGraph, obj: NodeId) -> Result<bool> {
        let node = graph.expect_kind(obj, NodeKind::Object)?;
        if node.removed {
            return Ok(false);
        }
        let shelf = graph
            .parent(obj)
            .ok_or_else(|| GraphError::Invalid(format!("object {obj} has no shelf")))?;
        Ok(self.is_visible_fraction(occlusion_fraction(graph, shelf, obj)?))
    }

    pub fn remove_object(&self, graph: &mut SceneGraph, obj: NodeId) -> Result<Vec<NodeId>> {
        let node = graph.expect_kind(obj, NodeKind::Object)?;
        if node.removed {
            return Err(GraphError::AlreadyRemoved(obj));
        }
        let shelf = graph
            .parent(obj)
            .ok_or_else(|| GraphError::Invalid(format!("object {obj} has no shelf")))?;
        let before = self.visible_objects(graph, shelf)?;
        if before.binary_search(&obj).is_err() {
            return Err(GraphError::NotVisible(obj));
        }
        graph.node_mut(obj)?.removed = true;
        let after = self.visible_objects(graph, shelf)?;
        Ok(after
            .into_iter()
            .filter(|c| before.binary_search(c).is_err())
            .collect())
    }
}

fn check_member(graph: &SceneGraph, shelf: NodeId, obj: NodeId) -> Result<()> {
    graph.expect_kind(shelf, NodeKind::Shelf)?;
    let node = graph.expect_kind(obj, NodeKind::Object)?;
    if graph.parent(obj) != Some(shelf) {
        return Err(GraphError::NotChild { parent: shelf, child: obj });
    }
    if node.removed {
        return Err(GraphError::AlreadyRemoved(obj));
    }
    Ok(())
}

/// Non-removed siblings strictly nearer than `obj`, with the part of their
/// rectangle that overlaps `obj` (positive area only).
fn nearer_overlaps(graph: &SceneGraph, shelf: NodeId, obj: NodeId) -> Result<Vec<(NodeId, Rect)>> {
    let target = graph.placement(obj)?;
    let trect = target.rect();
    let mut out = Vec::new();
    for &c in graph.children(shelf)? {
        if c == obj {
            continue;
        }
        let node = graph.node(c)?;
        if node.removed {
            continue;
        }
        let p = graph.placement(c)?;
        if p.depth < target.depth {
            if let Some(r) = p.rect().intersect(&trect) {
                out.push((c, r));
            }
        }
    }
    Ok(out)
}

/// Covered fraction of `obj`'s front-view rectangle.
pub fn occlusion_fraction(graph: &SceneGraph, shelf: NodeId, obj: NodeId) -> Result<f64> {
    check_member(graph, shelf, obj)?;
    let area = graph.placement(obj)?.rect().area();
    let clipped: Vec<Rect> = nearer_overlaps(graph, shelf, obj)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    let frac = union_area(&clipped) / area;
    // Rectangle edges are recomputed from centers, so a full cover can
    // come out a few ulps short of 1.
    Ok(if frac > 1.0 - 1e-12 { 1.0 } else { frac.max(0.0) })
}

/// Objects the default detector reports on `shelf`, sorted by id.
pub fn visible_objects(graph: &SceneGraph, shelf: NodeId) -> Result<Vec<NodeId>> {
    Detector::default().visible_objects(graph, shelf)
}

pub fn is_visible(graph: &SceneGraph, obj: NodeId) -> Result<bool> {
    Detector::default().is_visible(graph, obj)
}

/// Nearer non-removed siblings overlapping `target` with positive area.
pub fn occluders_of(graph: &SceneGraph, shelf: NodeId, target: NodeId) -> Result<BTreeSet<NodeId>> {
    check_member(graph, shelf, target)?;
    Ok(nearer_overlaps(graph, shelf, target)?
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

/// Removes a visible object and returns the objects it uncovered.
pub fn remove_object(graph: &mut SceneGraph, obj: NodeId) -> Result<Vec<NodeId>> {
    Detector::default().remove_object(graph, obj)
}
