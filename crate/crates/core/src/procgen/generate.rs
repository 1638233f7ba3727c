use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AssetSpec, GenConfig};
use super::ProcgenError;
use crate::graph::{Detector, NodeId, NodeKind, Placement, SceneGraph, TargetSpec};

pub const DEPTH_BANDS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const PLACEMENT_RETRIES: usize = 200;

/// Horizontal sub-ranges used when a shelf holds two categories, so that
/// each category forms a cluster while the two overlap in the middle.
const TWO_CATEGORY_REGIONS: [(f64, f64); 2] = [(0.0, 0.55), (0.45, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Any hidden instance of a non-held-out asset.
    Train,
    /// Hidden instances of held-out assets only.
    Test,
}

/// One instance to place: its extents and the horizontal range its
/// rectangle must stay inside.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementRequest {
    pub w: f64,
    pub h: f64,
    pub category: String,
    pub x_range: (f64, f64),
}

impl PlacementRequest {
    pub fn anywhere(w: f64, h: f64, category: &str) -> Self {
        PlacementRequest {
            w,
            h,
            category: category.to_string(),
            x_range: (0.0, 1.0),
        }
    }
}

/// Places instances in order. Each gets a uniform depth band and a uniform
/// center; draws are rejected until the rectangle is disjoint from every
/// earlier one in the same band.
pub fn place_objects<R: Rng>(requests: &[PlacementRequest], rng: &mut R) -> Result<Vec<Placement>, ProcgenError> {
    let mut placed: Vec<Placement> = Vec::with_capacity(requests.len());
    for (i, req) in requests.iter().enumerate() {
        let (lo, hi) = (req.x_range.0 + req.w / 2.0, req.x_range.1 - req.w / 2.0);
        if !(req.w > 0.0 && req.w <= 1.0 && req.h > 0.0 && req.h <= 1.0 && lo <= hi) {
            return Err(ProcgenError::InvalidConfig(format!(
                "instance {i} ({} x {}) does not fit {:?}",
                req.w, req.h, req.x_range
            )));
        }
        let (wide_lo, wide_hi) = (req.w / 2.0, 1.0 - req.w / 2.0);
        let mut done = None;
        for attempt in 0..PLACEMENT_RETRIES {
            let depth = DEPTH_BANDS[rng.gen_range(0..DEPTH_BANDS.len())];
            // A crowded range falls back to the whole shelf for the second
            // half of the budget.
            let (lo, hi) = if attempt < PLACEMENT_RETRIES / 2 { (lo, hi) } else { (wide_lo, wide_hi) };
            let cx = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
            let candidate = Placement {
                cx,
                cy: req.h / 2.0,
                w: req.w,
                h: req.h,
                depth,
                category: req.category.clone(),
            };
            let rect = candidate.rect();
            let clash = placed
                .iter()
                .filter(|p| p.depth == depth)
                .any(|p| p.rect().intersect(&rect).is_some());
            if !clash {
                done = Some(candidate);
                break;
            }
        }
        match done {
            Some(p) => placed.push(p),
            None => {
                return Err(ProcgenError::Placement {
                    shelf: None,
                    instance: i,
                    retries: PLACEMENT_RETRIES,
                })
            }
        }
    }
    Ok(placed)
}

fn weighted_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).expect("some weight is positive")
}

/// Splits the categories present in one storage over its shelves. Every
/// shelf gets between the configured minimum and maximum number of
/// categories and every present category lands on at least one shelf,
/// unless there are more categories than slots.
fn assign_shelf_categories<R: Rng>(
    present: &[String],
    shelves: usize,
    per_shelf: [u32; 2],
    rng: &mut R,
) -> Vec<Vec<String>> {
    if present.is_empty() {
        return vec![Vec::new(); shelves];
    }
    let (lo, hi) = (per_shelf[0] as usize, per_shelf[1] as usize);
    let mut cats = present.to_vec();
    cats.shuffle(rng);
    cats.truncate(shelves * hi);
    let mut slots: Vec<usize> = (0..shelves).map(|_| rng.gen_range(lo..=hi)).collect();
    while slots.iter().sum::<usize>() < cats.len() {
        let open: Vec<usize> = (0..shelves).filter(|&i| slots[i] < hi).collect();
        let pick = open[rng.gen_range(0..open.len())];
        slots[pick] += 1;
    }
    let mut out: Vec<Vec<String>> = vec![Vec::new(); shelves];
    // Round-robin the required categories first, one per shelf per round.
    let mut next = 0;
    'rounds: for _ in 0..hi {
        for (s, shelf) in out.iter_mut().enumerate() {
            if next == cats.len() {
                break 'rounds;
            }
            if shelf.len() < slots[s] {
                shelf.push(cats[next].clone());
                next += 1;
            }
        }
    }
    for (s, shelf) in out.iter_mut().enumerate() {
        while shelf.len() < slots[s] {
            let free: Vec<&String> = cats.iter().filter(|c| !shelf.contains(c)).collect();
            if free.is_empty() {
                break;
            }
            let c = free[rng.gen_range(0..free.len())].clone();
            shelf.push(c);
        }
    }
    out
}

fn fill_shelf<R: Rng>(
    graph: &mut SceneGraph,
    config: &GenConfig,
    shelf: NodeId,
    categories: &[String],
    rng: &mut R,
) -> Result<(), ProcgenError> {
    if categories.is_empty() {
        return Ok(());
    }
    let [lo, hi] = config.objects_per_shelf;
    let n = (rng.gen_range(lo..=hi) as usize).max(categories.len());
    let mut chosen: Vec<usize> = (0..categories.len()).collect();
    chosen.extend((categories.len()..n).map(|_| rng.gen_range(0..categories.len())));
    chosen.shuffle(rng);

    let mut picks: Vec<&AssetSpec> = Vec::with_capacity(n);
    let mut requests = Vec::with_capacity(n);
    for &k in &chosen {
        let assets = config.assets_of(&categories[k]);
        let asset = assets[rng.gen_range(0..assets.len())];
        let x_range = if categories.len() == 2 {
            TWO_CATEGORY_REGIONS[k]
        } else {
            (0.0, 1.0)
        };
        requests.push(PlacementRequest {
            w: asset.w,
            h: asset.h,
            category: asset.category.clone(),
            x_range,
        });
        picks.push(asset);
    }
    let placements = place_objects(&requests, rng).map_err(|e| match e {
        ProcgenError::Placement { instance, retries, .. } => ProcgenError::Placement {
            shelf: Some(shelf),
            instance,
            retries,
        },
        other => other,
    })?;
    for (asset, placement) in picks.into_iter().zip(placements) {
        graph.add_object(shelf, &asset.category, &asset.description, placement)?;
    }
    Ok(())
}

/// Builds one house. A pure function of `(config, seed)`.
pub fn generate_graph(config: &GenConfig, seed: u64) -> Result<SceneGraph, ProcgenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = SceneGraph::new("house");
    let rooms: Vec<NodeId> = config
        .room_types
        .iter()
        .map(|r| graph.add_room(r))
        .collect::<Result<_, _>>()?;

    for st in &config.storage_types {
        let weights: Vec<f64> = config
            .room_types
            .iter()
            .map(|r| config.storage_room(&st.label, r))
            .collect();
        let room = rooms[weighted_index(&weights, &mut rng)];
        let [vlo, vhi] = st.volume_liters;
        let volume = if vlo < vhi { rng.gen_range(vlo..=vhi) } else { vlo };
        let volume = (volume * 10.0).round() / 10.0;
        let shelves = rng.gen_range(st.shelf_count[0]..=st.shelf_count[1]) as usize;

        let present: Vec<String> = config
            .categories
            .iter()
            .filter(|c| {
                let p = config.category_storage(c, &st.label);
                // one draw per category keeps the stream layout fixed
                let u: f64 = rng.gen();
                u < p
            })
            .cloned()
            .collect();

        let storage = graph.add_storage(room, &st.label, volume)?;
        let assignment = assign_shelf_categories(&present, shelves, config.categories_per_shelf, &mut rng);
        for cats in assignment {
            let shelf = graph.add_shelf(storage, "shelf")?;
            fill_shelf(&mut graph, config, shelf, &cats, &mut rng)?;
        }
    }
    graph.validate()?;
    Ok(graph)
}

/// Hidden objects that may serve as a target in `mode`, by id.
pub fn eligible_targets(graph: &SceneGraph, config: &GenConfig, mode: TargetMode) -> Result<Vec<NodeId>, ProcgenError> {
    let detector = Detector::default();
    let mut out = Vec::new();
    for id in graph.ids_of_kind(NodeKind::Object) {
        let node = graph.node(id)?;
        if node.removed || detector.is_visible(graph, id)? {
            continue;
        }
        let held_out = config
            .asset_by_description(&node.description)
            .is_some_and(|a| a.held_out);
        let ok = match mode {
            TargetMode::Train => !held_out,
            TargetMode::Test => held_out,
        };
        if ok {
            out.push(id);
        }
    }
    Ok(out)
}

/// Uniform draw over [`eligible_targets`].
pub fn sample_target<R: Rng>(
    graph: &SceneGraph,
    config: &GenConfig,
    mode: TargetMode,
    rng: &mut R,
) -> Result<TargetSpec, ProcgenError> {
    let eligible = eligible_targets(graph, config, mode)?;
    if eligible.is_empty() {
        return Err(ProcgenError::NoEligibleTarget(mode));
    }
    let id = eligible[rng.gen_range(0..eligible.len())];
    let node = graph.node(id)?;
    Ok(TargetSpec {
        object_id: id,
        description: node.description.clone(),
        category: node.label.clone(),
    })
}

/// Probability, under the generating tables, that `node` holds an instance
/// of `category`.
pub fn container_prior(config: &GenConfig, graph: &SceneGraph, node: NodeId, category: &str) -> Result<f64, ProcgenError> {
    if !config.categories.iter().any(|c| c == category) {
        return Err(ProcgenError::UnknownCategory(category.to_string()));
    }
    let n = graph.node(node)?;
    match n.kind {
        NodeKind::Storage => Ok(config.category_storage(category, &n.label)),
        NodeKind::Room => {
            let miss: f64 = config
                .storage_types
                .iter()
                .map(|s| {
                    1.0 - config.storage_room_normalized(&s.label, &n.label)
                        * config.category_storage(category, &s.label)
                })
                .product();
            Ok(1.0 - miss)
        }
        NodeKind::Shelf => {
            let storage = graph.parent(node).ok_or(ProcgenError::NotContainer(node))?;
            let shelves = graph.children(storage)?.len().max(1) as f64;
            let s = graph.node(storage)?;
            Ok(config.category_storage(category, &s.label) / shelves)
        }
        _ => Err(ProcgenError::NotContainer(node)),
    }
}
