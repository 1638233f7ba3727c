//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use hms_core::eval::{classification_accuracy, efficiency_matrix, AccuracyReport, EfficiencyReport};
use hms_core::graph::{occlusion_fraction, NodeId, Placement, SceneGraph};
use hms_core::procgen::{generate_dataset, Dataset, TargetMode};
use hms_core::search::{action_limit, search_episode, Policy, PolicyEnv, DEFAULT_T0};
use hms_core::train::{example_loss, prepare_example, sample_batch, train, train_step, TrainConfig};
use hms_core::{EmbeddingTable, GenConfig, HmsModel, ModelVariant, NodeKind, TargetSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// desk-scale pipeline shared by the directional criteria

struct Pipeline {
    test: Dataset,
    accuracy: BTreeMap<String, AccuracyReport>,
    matrix: EfficiencyReport,
    elapsed: Duration,
}

const ACCURACY_SAMPLES_PER_GRAPH: usize = 4;

fn run_pipeline(emb: &EmbeddingTable) -> Pipeline {
    let start = Instant::now();
    let train_ds = generate_dataset(&GenConfig::default_train(), 200, 0).unwrap();
    let test = generate_dataset(&GenConfig::default_test(), 100, 1).unwrap();
    let mut models = Vec::new();
    for (name, variant) in [("hms", ModelVariant::Hms), ("nomp", ModelVariant::NoMessagePassing)] {
        let t = Instant::now();
        let config = TrainConfig {
            epochs: 10,
            batches_per_epoch: 50,
            graphs_per_batch: 10,
            variant,
            validation_graphs: 20,
            ..TrainConfig::default()
        };
        let mut model = HmsModel::new(emb.dim(), variant, 0).unwrap();
        let report = train(&mut model, emb, &train_ds, None, &config, None).unwrap();
        let last = report.metrics.last().unwrap();
        eprintln!(
            "  trained {name} in {:.0?}: loss {:.3}, held-out container {:.3} object {:.3}",
            t.elapsed(),
            last.mean_loss,
            last.container_acc,
            last.object_acc
        );
        models.push(Policy::model(name, Arc::new(model)));
    }
    let env = PolicyEnv {
        embeddings: emb,
        config: &test.config,
    };
    let mut all = vec![
        Policy::oracle(),
        Policy::random(),
        Policy::word_vector(),
        Policy::prior(),
        Policy::near_rank(),
        Policy::large_rank(),
    ];
    all.extend(models);
    let mut accuracy = BTreeMap::new();
    for p in &all {
        let r = classification_accuracy(p, &env, &test.graphs, TargetMode::Test, ACCURACY_SAMPLES_PER_GRAPH, 0).unwrap();
        eprintln!(
            "  accuracy {:>6}: container {} object {}",
            p.name,
            pct(r.container_accuracy),
            pct(r.object_accuracy)
        );
        accuracy.insert(p.name.clone(), r);
    }
    let containers: Vec<Policy> = all.iter().filter(|p| p.supports(hms_core::search::Role::Container)).cloned().collect();
    let objects: Vec<Policy> = all.iter().filter(|p| p.supports(hms_core::search::Role::Object)).cloned().collect();
    let matrix = efficiency_matrix(&containers, &objects, &env, &test.graphs, DEFAULT_T0, 0, true).unwrap();
    Pipeline {
        test,
        accuracy,
        matrix,
        elapsed: start.elapsed(),
    }
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.1}%", 100.0 * v)).unwrap_or_else(|| "-".into())
}

// ---------------------------------------------------------------------------
// criteria

fn gradient_check(emb: &EmbeddingTable) -> Verdict {
    let start = Instant::now();
    let cfg = GenConfig::default_train();
    let ds = generate_dataset(&cfg, 10, 7).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (i, graph) in ds.graphs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let ex = prepare_example(graph, &cfg, TargetMode::Train, &mut rng).unwrap();
        let mut model = HmsModel::glorot(emb.dim(), ModelVariant::Hms, i as u64).unwrap();
        let (tape, loss, _) = example_loss(&model, emb, graph, &ex).unwrap();
        model.params.zero_grad();
        tape.backward(loss, &mut model.params).unwrap();
        let h = 1e-5;
        for name in model.params.names().to_vec() {
            let id = model.params.id(&name).unwrap();
            let n = model.params.value(id).len();
            for _ in 0..3 {
                let k = rng.gen_range(0..n);
                let analytic = model.params.grad(id).data()[k];
                let orig = model.params.value(id).data()[k];
                let mut at = |v: f64| {
                    model.params.value_mut(id).data_mut()[k] = v;
                    let (t, l, _) = example_loss(&model, emb, graph, &ex).unwrap();
                    t.scalar(l).unwrap()
                };
                let numeric = (at(orig + h) - at(orig - h)) / (2.0 * h);
                model.params.value_mut(id).data_mut()[k] = orig;
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(err);
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-3 && elapsed < Duration::from_secs(120),
        format!("max relative error {worst:.2e} over {checked} coordinates, {elapsed:.1?}"),
    )
}

fn init_loss(emb: &EmbeddingTable) -> Verdict {
    let cfg = GenConfig::default_train();
    let ds = generate_dataset(&cfg, 10, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = sample_batch(&ds.graphs, &cfg, TargetMode::Train, 10, &mut rng).unwrap();
    let refs: Vec<_> = batch.iter().map(|(g, e)| (*g, e)).collect();
    let mut model = HmsModel::new(emb.dim(), ModelVariant::Hms, 3).unwrap();
    let loss = train_step(&mut model, emb, &refs).unwrap().mean_loss;
    let gap = (loss - std::f64::consts::LN_2).abs();
    verdict(gap < 1e-9, format!("first-batch BCE {loss:.12}, |gap| {gap:.1e}"))
}

fn balanced_accuracy(scored: &[hms_core::train::ScoredSample]) -> f64 {
    let (mut tp, mut pos, mut tn, mut neg) = (0, 0, 0, 0);
    for s in scored {
        if s.label > 0.5 {
            pos += 1;
            tp += (s.p >= 0.5) as usize;
        } else {
            neg += 1;
            tn += (s.p < 0.5) as usize;
        }
    }
    0.5 * (tp as f64 / pos.max(1) as f64 + tn as f64 / neg.max(1) as f64)
}

fn overfit(emb: &EmbeddingTable) -> Verdict {
    let cfg = GenConfig::default_train();
    let ds = generate_dataset(&cfg, 20, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = sample_batch(&ds.graphs, &cfg, TargetMode::Train, 20, &mut rng).unwrap();
    let refs: Vec<_> = batch.iter().map(|(g, e)| (*g, e)).collect();
    let mut model = HmsModel::new(emb.dim(), ModelVariant::Hms, 5).unwrap();
    let mut best = 0.0;
    for step in 0..500 {
        // scores are taken before the update, so they belong to the model after `step` updates
        let acc = balanced_accuracy(&train_step(&mut model, emb, &refs).unwrap().scored);
        best = f64::max(best, acc);
        if acc >= 0.95 {
            return verdict(true, format!("balanced accuracy {:.1}% after {step} updates", 100.0 * acc));
        }
    }
    let scored: Vec<_> = refs
        .iter()
        .flat_map(|(g, e)| example_loss(&model, emb, g, e).unwrap().2)
        .collect();
    let acc = balanced_accuracy(&scored);
    verdict(
        acc >= 0.95,
        format!("balanced accuracy {:.1}% after 500 updates (best {:.1}%)", 100.0 * acc, 100.0 * best),
    )
}

fn table_one(p: &Pipeline) -> Verdict {
    let a = |name: &str| &p.accuracy[name];
    let hms_c = a("hms").container_accuracy.unwrap();
    let nomp_c = a("nomp").container_accuracy.unwrap();
    let hms_o = a("hms").object_accuracy.unwrap();
    let wv_o = a("wv").object_accuracy.unwrap();
    let oracle = (a("oracle").container_accuracy, a("oracle").object_accuracy);
    let rnd_c = a("rnd").container_accuracy.unwrap();
    let rnd_o = a("rnd").object_accuracy.unwrap();
    let coin = |x: f64| (x - 0.5).abs() <= 0.05;
    let checks = [
        hms_c > nomp_c,
        hms_o > wv_o,
        oracle == (Some(1.0), Some(1.0)),
        coin(rnd_c) && coin(rnd_o),
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "HMS/NoMP container {:.1}/{:.1}, HMS/WV object {:.1}/{:.1}, Oracle {}/{}, RND {:.1}/{:.1}",
            100.0 * hms_c,
            100.0 * nomp_c,
            100.0 * hms_o,
            100.0 * wv_o,
            pct(oracle.0),
            pct(oracle.1),
            100.0 * rnd_c,
            100.0 * rnd_o
        ),
    )
}

fn table_two(p: &Pipeline) -> Verdict {
    let cell = |c: &str, o: &str| p.matrix.cell(c, o).unwrap();
    let (oracle, hms, rnd) = (cell("oracle", "oracle"), cell("hms", "hms"), cell("rnd", "rnd"));
    let wv_rnd = cell("wv", "rnd");
    let fast = p.elapsed < Duration::from_secs(30 * 60);
    let pass = oracle.mean <= hms.mean && hms.mean < rnd.mean && hms.median < wv_rnd.median && fast;
    verdict(
        pass,
        format!(
            "mean Oracle {:.2} HMS {:.2} RND {:.2}; median HMS {:.1} WV/RND {:.1}; pipeline {:.0?}",
            oracle.mean, hms.mean, rnd.mean, hms.median, wv_rnd.median, p.elapsed
        ),
    )
}

fn termination(p: &Pipeline) -> Verdict {
    let traces = p.matrix.traces.as_ref().unwrap();
    let mut episodes = 0;
    let mut not_found = 0;
    let mut over_limit = 0;
    let mut rising = 0;
    for cell_traces in traces {
        for (g, t) in p.test.graphs.iter().zip(cell_traces) {
            episodes += 1;
            not_found += !t.found as usize;
            over_limit += (t.total_actions > action_limit(g)) as usize;
            for h in t.thresholds.history.values() {
                let starts_at_t0 = h.first() == Some(&t.t0);
                if !starts_at_t0 || h.windows(2).any(|w| w[1] > w[0]) {
                    rising += 1;
                }
            }
        }
    }
    verdict(
        episodes >= 1000 && not_found == 0 && over_limit == 0 && rising == 0,
        format!(
            "{episodes} episodes over {} policy pairs: {not_found} not found, {over_limit} over the guard, {rising} bad threshold sequences",
            p.matrix.cells.len()
        ),
    )
}

// -- exhaustive search on small houses

fn rnd_placement(rng: &mut ChaCha8Rng, depth: f64) -> Placement {
    let w = rng.gen_range(0.1..0.35);
    let h = rng.gen_range(0.2..0.6);
    Placement {
        cx: rng.gen_range(w / 2.0..1.0 - w / 2.0),
        cy: h / 2.0,
        w,
        h,
        depth,
        category: "dairy".into(),
    }
}

/// A house of at most 12 nodes with a target behind at most 3 occluders.
fn small_house(rng: &mut ChaCha8Rng) -> Option<(SceneGraph, TargetSpec)> {
    let mut g = SceneGraph::new("house");
    let rooms: Vec<NodeId> = (0..rng.gen_range(1..=2)).map(|i| g.add_room(&format!("room{i}")).unwrap()).collect();
    let mut shelves = Vec::new();
    for &r in &rooms {
        let s = g.add_storage(r, "fridge", 400.0).unwrap();
        shelves.push(g.add_shelf(s, "shelf").unwrap());
    }
    if rng.gen_bool(0.5) {
        let s = g.add_storage(rooms[0], "pantry", 600.0).unwrap();
        shelves.push(g.add_shelf(s, "shelf").unwrap());
    }
    let target_shelf = shelves[rng.gen_range(0..shelves.len())];
    let budget = 12 - g.len();
    let t_place = Placement {
        cx: rng.gen_range(0.3..0.7),
        cy: 0.2,
        w: 0.2,
        h: 0.4,
        depth: 0.9,
        category: "dairy".into(),
    };
    let target = g.add_object(target_shelf, "dairy", "Swiss Cheese Slices", t_place.clone()).unwrap();
    let n_front = rng.gen_range(1..=budget.min(4) - 1);
    for i in 0..n_front {
        // mostly in front of the target, at staggered depths so occluders can hide one another
        let depth = rng.gen_range(0.0..0.8);
        let mut p = rnd_placement(rng, depth);
        if rng.gen_bool(0.7) {
            p.cx = (t_place.cx + rng.gen_range(-0.15..0.15)).clamp(p.w / 2.0, 1.0 - p.w / 2.0);
        }
        g.add_object(target_shelf, "dairy", &format!("Item {i}"), p).unwrap();
    }
    while g.len() < 12 && rng.gen_bool(0.5) {
        let shelf = shelves[rng.gen_range(0..shelves.len())];
        let d = rng.gen_range(0.0..1.0);
        g.add_object(shelf, "dairy", "Filler", rnd_placement(rng, d)).unwrap();
    }
    let occluders = hms_core::graph::occluders_of(&g, target_shelf, target).unwrap();
    if occluders.len() > 3 || g.len() > 12 {
        return None;
    }
    Some((
        g,
        TargetSpec {
            object_id: target,
            description: "Swiss Cheese Slices".into(),
            category: "dairy".into(),
        },
    ))
}

/// Covered fraction of `obj` by nearer, present siblings, by coordinate compression.
fn coverage(graph: &SceneGraph, obj: NodeId, removed: &BTreeSet<NodeId>) -> f64 {
    let shelf = graph.parent(obj).unwrap();
    let me = graph.node(obj).unwrap().placement.clone().unwrap();
    let rect = |p: &Placement| (p.cx - p.w / 2.0, p.cy - p.h / 2.0, p.cx + p.w / 2.0, p.cy + p.h / 2.0);
    let (x0, y0, x1, y1) = rect(&me);
    let mut clipped = Vec::new();
    for &c in graph.children(shelf).unwrap() {
        if c == obj || removed.contains(&c) {
            continue;
        }
        let p = graph.node(c).unwrap().placement.clone().unwrap();
        if p.depth >= me.depth {
            continue;
        }
        let (a0, b0, a1, b1) = rect(&p);
        let r = (a0.max(x0), b0.max(y0), a1.min(x1), b1.min(y1));
        if r.0 < r.2 && r.1 < r.3 {
            clipped.push(r);
        }
    }
    let mut xs: Vec<f64> = clipped.iter().flat_map(|r| [r.0, r.2]).collect();
    let mut ys: Vec<f64> = clipped.iter().flat_map(|r| [r.1, r.3]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut covered = 0.0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (mx, my) = ((xw[0] + xw[1]) / 2.0, (yw[0] + yw[1]) / 2.0);
            if clipped.iter().any(|r| r.0 <= mx && mx <= r.2 && r.1 <= my && my <= r.3) {
                covered += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    covered / ((x1 - x0) * (y1 - y0))
}

fn seen(graph: &SceneGraph, obj: NodeId, removed: &BTreeSet<NodeId>) -> bool {
    !removed.contains(&obj) && 1.0 - coverage(graph, obj, removed) >= 0.7 - 1e-9
}

/// Fewest actions that end with the target in view on a looked-at shelf,
/// by breadth-first search over (room, storage, shelf, removed set).
fn exhaustive_minimum(graph: &SceneGraph, target: NodeId) -> usize {
    type State = (Option<NodeId>, Option<NodeId>, Option<NodeId>, BTreeSet<NodeId>);
    let target_shelf = graph.parent(target).unwrap();
    let start: State = (None, None, None, BTreeSet::new());
    let mut queue = VecDeque::from([(start.clone(), 0usize)]);
    let mut visited = HashSet::from([start]);
    while let Some(((room, storage, shelf, removed), d)) = queue.pop_front() {
        if shelf == Some(target_shelf) && seen(graph, target, &removed) {
            return d;
        }
        let mut next: Vec<State> = Vec::new();
        for r in graph.ids_of_kind(NodeKind::Room) {
            next.push((Some(r), None, None, removed.clone()));
        }
        if let Some(r) = room {
            for &s in graph.children(r).unwrap() {
                next.push((room, Some(s), None, removed.clone()));
            }
        }
        if let Some(s) = storage {
            for &sh in graph.children(s).unwrap() {
                next.push((room, storage, Some(sh), removed.clone()));
            }
        }
        if let Some(sh) = shelf {
            for &o in graph.children(sh).unwrap() {
                if seen(graph, o, &removed) {
                    let mut r2 = removed.clone();
                    r2.insert(o);
                    next.push((room, storage, shelf, r2));
                }
            }
        }
        for s in next {
            if visited.insert(s.clone()) {
                queue.push_back((s, d + 1));
            }
        }
    }
    usize::MAX
}

fn optimal_oracle(emb: &EmbeddingTable) -> Verdict {
    let cfg = GenConfig::default_test();
    let env = PolicyEnv {
        embeddings: emb,
        config: &cfg,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut houses = Vec::new();
    while houses.len() < 50 {
        if let Some(h) = small_house(&mut rng) {
            houses.push(h);
        }
    }
    let mut mismatches = Vec::new();
    let mut removals = 0;
    for (i, (g, t)) in houses.iter().enumerate() {
        let trace = search_episode(g, t, &Policy::oracle(), &Policy::oracle(), &env, DEFAULT_T0, i as u64).unwrap();
        let best = exhaustive_minimum(g, t.object_id);
        removals += trace.removals();
        if trace.actions.len() != best {
            mismatches.push(format!("#{i}: {} vs {best}", trace.actions.len()));
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "50 houses, {removals} removals in total, {} mismatches {}",
            mismatches.len(),
            mismatches.join(" ")
        ),
    )
}

fn occlusion_monte_carlo() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut g = SceneGraph::new("house");
        let r = g.add_room("kitchen").unwrap();
        let s = g.add_storage(r, "fridge", 400.0).unwrap();
        let sh = g.add_shelf(s, "shelf").unwrap();
        let n = rng.gen_range(2..=6);
        let mut objs = Vec::new();
        for i in 0..n {
            let d = rng.gen_range(0.0..1.0);
            let mut p = rnd_placement(&mut rng, d);
            p.cy = rng.gen_range(p.h / 2.0..1.0 - p.h / 2.0);
            objs.push((g.add_object(sh, "dairy", &format!("Item {i}"), p.clone()).unwrap(), p));
        }
        let (obj, me) = objs.iter().max_by(|a, b| a.1.depth.total_cmp(&b.1.depth)).unwrap().clone();
        let inside = |p: &Placement, x: f64, y: f64| (x - p.cx).abs() <= p.w / 2.0 && (y - p.cy).abs() <= p.h / 2.0;
        let samples = 100_000;
        let mut hit = 0;
        for _ in 0..samples {
            let x = me.cx + me.w * (rng.gen::<f64>() - 0.5);
            let y = me.cy + me.h * (rng.gen::<f64>() - 0.5);
            if objs.iter().any(|(id, p)| *id != obj && p.depth < me.depth && inside(p, x, y)) {
                hit += 1;
            }
        }
        let mc = hit as f64 / samples as f64;
        worst = worst.max((mc - occlusion_fraction(&g, sh, obj).unwrap()).abs());
    }
    verdict(worst < 0.02, format!("max |closed form - Monte Carlo| {worst:.4} over 100 shelves"))
}

// -- command line reruns

fn hms(args: &[&str]) -> i32 {
    hms_cli::run(std::iter::once("hms").chain(args.iter().copied()))
}

fn tree_digest(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), hex::encode(Sha256::digest(&bytes)));
            }
        }
    }
    out
}

struct CliRun {
    _dir: tempfile::TempDir,
    report: PathBuf,
}

fn cli_runs() -> (Verdict, Option<CliRun>) {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let mut codes = Vec::new();
    for tag in ["a", "b"] {
        codes.push(hms(&["gen", "--count", "30", "--seed", "0", "--out", &d(&format!("train_{tag}"))]));
    }
    codes.push(hms(&["gen", "--config", "default-test", "--count", "10", "--seed", "1", "--out", &d("test")]));
    for tag in ["a", "b"] {
        codes.push(hms(&[
            "train", "--dataset", &d("train_a"), "--epochs", "2", "--batches", "5", "--graphs-per-batch", "5",
            "--validation-graphs", "5", "--out", &d(&format!("model_{tag}")),
        ]));
    }
    let ck = format!("hms={}", d("model_a/checkpoint.json"));
    for tag in ["a", "b"] {
        codes.push(hms(&[
            "eval", "--dataset", &d("test"), "--checkpoint", &ck, "--samples-per-graph", "2", "--out",
            &d(&format!("report_{tag}")),
        ]));
    }
    if codes.iter().any(|&c| c != 0) {
        return (verdict(false, format!("exit codes {codes:?}")), None);
    }
    let mut files = 0;
    let mut differing = Vec::new();
    for stem in ["train", "model", "report"] {
        let a = tree_digest(&dir.path().join(format!("{stem}_a")));
        let b = tree_digest(&dir.path().join(format!("{stem}_b")));
        files += a.len();
        if a.keys().ne(b.keys()) {
            differing.push(format!("{stem}: file sets differ"));
        }
        for (k, v) in &a {
            if b.get(k) != Some(v) {
                differing.push(format!("{stem}/{}", k.display()));
            }
        }
    }
    let v = verdict(
        differing.is_empty(),
        format!("{files} files from gen/train/eval reruns, {} differ {}", differing.len(), differing.join(" ")),
    );
    let report = dir.path().join("report_a");
    (v, Some(CliRun { _dir: dir, report }))
}

fn cdf_valid(points: &[(usize, f64)]) -> bool {
    !points.is_empty()
        && points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1)
        && points.last().unwrap().1 == 1.0
}

fn cdfs(p: Option<&Pipeline>, cli: Option<&CliRun>) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    if let Some(p) = p {
        for c in &p.matrix.cells {
            checked += 1;
            if !cdf_valid(&c.cdf) {
                bad.push(format!("{}/{}", c.container, c.object));
            }
        }
    }
    if let Some(run) = cli {
        for entry in std::fs::read_dir(run.report.join("cdf")).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let points: Vec<(usize, f64)> = text
                .lines()
                .skip(1)
                .map(|l| {
                    let (a, f) = l.split_once(',').unwrap();
                    (a.parse().unwrap(), f.parse().unwrap())
                })
                .collect();
            checked += 1;
            if !cdf_valid(&points) {
                bad.push(path.display().to_string());
            }
        }
    }
    verdict(
        checked > 0 && bad.is_empty() && p.is_some() && cli.is_some(),
        format!("{checked} CDFs checked, {} invalid {}", bad.len(), bad.join(" ")),
    )
}

// ---------------------------------------------------------------------------

fn guarded<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())
    })
}

fn main() {
    let emb = EmbeddingTable::bundled();
    let mut failures = 0;
    let mut record = |id: &str, name: &str, v: Result<Verdict, String>| {
        let v = v.unwrap_or_else(|e| verdict(false, format!("panicked: {e}")));
        failures += !v.pass as usize;
        println!("{id:<5} {:<4} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail.trim_end());
    };
    record("AC1", "gradient check", guarded(|| gradient_check(&emb)));
    record("AC2", "initial loss", guarded(|| init_loss(&emb)));
    record("AC3", "overfit sanity", guarded(|| overfit(&emb)));
    let pipeline = guarded(|| run_pipeline(&emb));
    let with_pipeline = |f: fn(&Pipeline) -> Verdict| match &pipeline {
        Ok(p) => guarded(|| f(p)),
        Err(e) => Err(format!("pipeline failed: {e}")),
    };
    record("AC4", "directional accuracy table", with_pipeline(table_one));
    record("AC5", "directional action counts", with_pipeline(table_two));
    record("AC6", "search termination", with_pipeline(termination));
    record("AC7", "oracle matches exhaustive search", guarded(|| optimal_oracle(&emb)));
    record("AC8", "occlusion geometry", guarded(occlusion_monte_carlo));
    let (det, cli) = match guarded(cli_runs) {
        Ok((v, run)) => (Ok(v), run),
        Err(e) => (Err(e), None),
    };
    record("AC9", "determinism", det);
    record("AC10", "CDF validity", guarded(|| cdfs(pipeline.as_ref().ok(), cli.as_ref())));
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
