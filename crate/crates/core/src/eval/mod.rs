//! Classification accuracy and action-count reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Detector, NodeKind, SceneGraph, TargetSpec};
use crate::procgen::{sample_target, TargetMode};
use crate::search::{search_episode, OracleMode, Policy, PolicyEnv, Role, SearchTrace};
use crate::train::{prepare_example, Layer};
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn add(&mut self, other: Tally) {
        self.correct += other.correct;
        self.total += other.total;
    }

    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub policy: String,
    /// Fraction correct in [0, 1]; `None` when the policy cannot score
    /// that role.
    pub container_accuracy: Option<f64>,
    pub object_accuracy: Option<f64>,
    pub per_layer: BTreeMap<Layer, Tally>,
    pub container_samples: usize,
    pub object_samples: usize,
}

/// Prediction is `score >= 0.5` on balanced positive/negative samples
/// drawn as in training, with held-out targets in `mode`.
pub fn classification_accuracy(
    policy: &Policy,
    env: &PolicyEnv<'_>,
    graphs: &[SceneGraph],
    mode: TargetMode,
    samples_per_graph: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    if graphs.is_empty() {
        return Err(Error::Invalid("no graphs to evaluate".into()));
    }
    let detector = Detector::default();
    let per_graph: Vec<BTreeMap<Layer, Tally>> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| -> Result<BTreeMap<Layer, Tally>> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            let mut tallies = BTreeMap::new();
            for s in 0..samples_per_graph {
                let ex = match prepare_example(g, env.config, mode, &mut rng) {
                    Ok(ex) => ex,
                    Err(e) => {
                        log::warn!("graph {i}: no accuracy sample ({e})");
                        break;
                    }
                };
                let mut rt = policy.runtime(env, &ex.target, OracleMode::Classification, derive_seed(seed, &[i as u64, s as u64]))?;
                for (layer, node, label) in ex.labeled_nodes() {
                    let role = if layer.is_container() { Role::Container } else { Role::Object };
                    if !policy.supports(role) {
                        continue;
                    }
                    let score = if layer == Layer::Object {
                        let shelf = g
                            .ancestor_of_kind(node, NodeKind::Shelf)
                            .ok_or_else(|| Error::Invalid(format!("{node} is not on a shelf")))?;
                        let visible = detector.visible_objects(g, shelf)?;
                        let idx = visible
                            .iter()
                            .position(|&v| v == node)
                            .ok_or_else(|| Error::Invalid(format!("{node} is not detected")))?;
                        rt.score_all(g, &visible)?[idx]
                    } else {
                        rt.score_all(g, &[node])?[0]
                    };
                    let t: &mut Tally = tallies.entry(layer).or_default();
                    t.total += 1;
                    if (score >= 0.5) == (label == 1.0) {
                        t.correct += 1;
                    }
                }
            }
            Ok(tallies)
        })
        .collect::<Result<_>>()?;
    let mut per_layer: BTreeMap<Layer, Tally> = BTreeMap::new();
    for t in per_graph {
        for (layer, tally) in t {
            per_layer.entry(layer).or_default().add(tally);
        }
    }
    let mut containers = Tally::default();
    let mut objects = Tally::default();
    for (layer, t) in &per_layer {
        if layer.is_container() {
            containers.add(*t);
        } else {
            objects.add(*t);
        }
    }
    Ok(AccuracyReport {
        policy: policy.name.clone(),
        container_accuracy: containers.fraction(),
        object_accuracy: objects.fraction(),
        per_layer,
        container_samples: containers.total,
        object_samples: objects.total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub container: String,
    pub object: String,
    /// Action count of each episode, in graph order.
    pub actions: Vec<usize>,
    pub mean: f64,
    pub median: f64,
    pub cdf: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub container_policies: Vec<String>,
    pub object_policies: Vec<String>,
    /// Row-major over (container, object).
    pub cells: Vec<CellStats>,
    pub episodes: usize,
    pub targets: Vec<TargetSpec>,
    /// Per cell, per graph; only kept on request.
    pub traces: Option<Vec<Vec<SearchTrace>>>,
}

impl EfficiencyReport {
    pub fn cell(&self, container: &str, object: &str) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.container == container && c.object == object)
    }
}

pub fn mean(values: &[usize]) -> f64 {
    values.iter().sum::<usize>() as f64 / values.len() as f64
}

pub fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Fraction of episodes that found the target within `x` actions, at every
/// distinct action count.
pub fn cdf_points(actions: &[usize]) -> Vec<(usize, f64)> {
    let mut v = actions.to_vec();
    v.sort_unstable();
    let n = v.len();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if i + 1 == n || v[i + 1] != x {
            out.push((x, (i + 1) as f64 / n as f64));
        }
    }
    out
}

/// Held-out target of each graph, shared by every cell.
pub fn evaluation_targets(graphs: &[SceneGraph], env: &PolicyEnv<'_>, seed: u64) -> Result<Vec<TargetSpec>> {
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            Ok(sample_target(g, env.config, TargetMode::Test, &mut rng)?)
        })
        .collect()
}

pub fn efficiency_matrix(
    container_policies: &[Policy],
    object_policies: &[Policy],
    env: &PolicyEnv<'_>,
    graphs: &[SceneGraph],
    t0: f64,
    seed: u64,
    keep_traces: bool,
) -> Result<EfficiencyReport> {
    if graphs.is_empty() {
        return Err(Error::Invalid("no graphs to evaluate".into()));
    }
    for p in container_policies {
        p.check_role(Role::Container)?;
    }
    for p in object_policies {
        p.check_role(Role::Object)?;
    }
    let targets = evaluation_targets(graphs, env, seed)?;
    let n_obj = object_policies.len();
    let n_cells = container_policies.len() * n_obj;
    let jobs: Vec<(usize, usize)> = (0..n_cells)
        .flat_map(|c| (0..graphs.len()).map(move |g| (c, g)))
        .collect();
    let traces: Vec<SearchTrace> = jobs
        .par_iter()
        .map(|&(cell, gi)| {
            let (ci, oi) = (cell / n_obj, cell % n_obj);
            search_episode(
                &graphs[gi],
                &targets[gi],
                &container_policies[ci],
                &object_policies[oi],
                env,
                t0,
                derive_seed(seed, &[gi as u64, cell as u64, 1]),
            )
            .map_err(|e| {
                Error::Invalid(format!(
                    "graph {gi}, {}/{}: {e}",
                    container_policies[ci], object_policies[oi]
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(n_cells);
    let mut kept = Vec::new();
    for (cell, chunk) in traces.chunks(graphs.len()).enumerate() {
        let actions: Vec<usize> = chunk.iter().map(|t| t.total_actions).collect();
        cells.push(CellStats {
            container: container_policies[cell / n_obj].name.clone(),
            object: object_policies[cell % n_obj].name.clone(),
            mean: mean(&actions),
            median: median(&actions),
            cdf: cdf_points(&actions),
            actions,
        });
        if keep_traces {
            kept.push(chunk.to_vec());
        }
    }
    Ok(EfficiencyReport {
        container_policies: container_policies.iter().map(|p| p.name.clone()).collect(),
        object_policies: object_policies.iter().map(|p| p.name.clone()).collect(),
        cells,
        episodes: traces.len(),
        targets,
        traces: keep_traces.then_some(kept),
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x))
}

pub fn accuracy_csv(reports: &[AccuracyReport]) -> String {
    let mut out = String::from("policy,container_accuracy_pct,object_accuracy_pct,container_samples,object_samples");
    for l in Layer::ALL {
        write!(out, ",{}_pct", serde_json::to_value(l).expect("layer").as_str().expect("string")).unwrap();
    }
    out.push('\n');
    for r in reports {
        write!(
            out,
            "{},{},{},{},{}",
            r.policy,
            pct(r.container_accuracy),
            pct(r.object_accuracy),
            r.container_samples,
            r.object_samples
        )
        .unwrap();
        for l in Layer::ALL {
            write!(out, ",{}", pct(r.per_layer.get(&l).and_then(Tally::fraction))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn matrix_csv(report: &EfficiencyReport, stat: impl Fn(&CellStats) -> f64) -> String {
    let mut out = String::from("container\\object");
    for o in &report.object_policies {
        write!(out, ",{o}").unwrap();
    }
    out.push('\n');
    for (ci, c) in report.container_policies.iter().enumerate() {
        out.push_str(c);
        for oi in 0..report.object_policies.len() {
            write!(out, ",{:.3}", stat(&report.cells[ci * report.object_policies.len() + oi])).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn cdf_csv(cell: &CellStats) -> String {
    let mut out = String::from("actions,fraction_found\n");
    for (x, y) in &cell.cdf {
        writeln!(out, "{x},{y}").unwrap();
    }
    out
}

fn write(path: &Path, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

/// Writes the CSV tables, one CDF file per policy pair and `manifest` into
/// `out_dir`. Returns the written paths.
pub fn write_report(
    out_dir: &Path,
    accuracy: &[AccuracyReport],
    efficiency: Option<&EfficiencyReport>,
    manifest: &serde_json::Value,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if !accuracy.is_empty() {
        write(&out_dir.join("accuracy.csv"), &accuracy_csv(accuracy), &mut written)?;
    }
    if let Some(eff) = efficiency {
        write(&out_dir.join("matrix_mean.csv"), &matrix_csv(eff, |c| c.mean), &mut written)?;
        write(&out_dir.join("matrix_median.csv"), &matrix_csv(eff, |c| c.median), &mut written)?;
        let cdf_dir = out_dir.join("cdf");
        std::fs::create_dir_all(&cdf_dir).map_err(|e| Error::io(&cdf_dir, e))?;
        for cell in &eff.cells {
            let name = format!("{}__{}.csv", cell.container, cell.object);
            write(&cdf_dir.join(name), &cdf_csv(cell), &mut written)?;
        }
    }
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write(&out_dir.join("manifest.json"), &text, &mut written)?;
    Ok(written)
}
