use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hms_core::embeddings::{EmbeddingError, BUNDLED_FIXTURE, BUNDLED_FIXTURE_NAME};
use hms_core::eval::{classification_accuracy, efficiency_matrix, write_report};
use hms_core::graph::{read_graphs, GraphError};
use hms_core::nn::AdamConfig;
use hms_core::procgen::{generate_dataset, read_dataset, sample_target, write_dataset, Dataset, ProcgenError};
use hms_core::search::{search_episode, trace_to_jsonl, write_trace, Policy, Role};
use hms_core::train::train;
use hms_core::util::{derive_seed, sha256_hex};
use hms_core::{EmbeddingTable, Error, GenConfig, HmsModel, NodeId, NodeKind, PolicyEnv, TargetMode, TargetSpec, TrainConfig};
use serde_json::json;

use crate::{Command, EvalArgs, GenArgs, SearchArgs, TrainArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub code: ExitCode,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: ExitCode::Usage,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: ExitCode::Data,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Policy(_) | Error::Role { .. } => ExitCode::Usage,
            Error::ActionGuard { .. } | Error::Stalled { .. } => ExitCode::Internal,
            _ => ExitCode::Data,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ProcgenError> for Failure {
    fn from(e: ProcgenError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<EmbeddingError> for Failure {
    fn from(e: EmbeddingError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::data(e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => with_jobs(a.jobs, || train_cmd(&a)),
        Command::Eval(a) => with_jobs(a.jobs, || eval(&a)),
        Command::Search(a) => search(a),
    }
}

/// Runs `f` on a private pool of `jobs` threads, or on the global pool.
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Outcome<T> + Send) -> Outcome<T> {
    match jobs {
        None => f(),
        Some(0) => Err(Failure::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure {
                code: ExitCode::Internal,
                message: format!("thread pool: {e}"),
            })?
            .install(f),
    }
}

fn load_config(spec: &str) -> Outcome<GenConfig> {
    match spec {
        "default-train" => Ok(GenConfig::default_train()),
        "default-test" => Ok(GenConfig::default_test()),
        path => Ok(GenConfig::load(Path::new(path))?),
    }
}

struct Embeddings {
    table: EmbeddingTable,
    name: String,
    sha256: String,
}

fn load_embeddings(spec: &str) -> Outcome<Embeddings> {
    if spec == "builtin" || spec == BUNDLED_FIXTURE_NAME {
        return Ok(Embeddings {
            table: EmbeddingTable::bundled(),
            name: BUNDLED_FIXTURE_NAME.to_string(),
            sha256: sha256_hex(BUNDLED_FIXTURE.as_bytes()),
        });
    }
    let path = Path::new(spec);
    let bytes = fs::read(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(Embeddings {
        table: EmbeddingTable::load(path)?,
        name: spec.to_string(),
        sha256: sha256_hex(&bytes),
    })
}

fn file_sha(path: &Path) -> Outcome<String> {
    let bytes = fs::read(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
    fs::write(path, text).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn gen(a: GenArgs) -> Outcome {
    let config = load_config(&a.config)?;
    log::info!("generating {} graphs from {:?} with seed {}", a.count, config.name, a.seed);
    let ds = generate_dataset(&config, a.count, a.seed)?;
    write_dataset(&a.out, &ds)?;
    log::info!("wrote {} ({})", a.out.display(), ds.manifest.graphs_sha256);
    Ok(())
}

fn dataset_json(path: &Path, ds: &Dataset) -> serde_json::Value {
    json!({
        "path": path.display().to_string(),
        "graphs_sha256": ds.manifest.graphs_sha256,
        "config_name": ds.manifest.config_name,
        "config_hash": ds.manifest.config_hash,
        "count": ds.manifest.count,
        "seed": ds.manifest.seed,
    })
}

fn train_cmd(a: &TrainArgs) -> Outcome {
    let ds = read_dataset(&a.dataset)?;
    let validation = a.validation.as_deref().map(read_dataset).transpose()?;
    let emb = load_embeddings(&a.embeddings)?;
    let config = TrainConfig {
        epochs: a.epochs,
        batches_per_epoch: a.batches,
        graphs_per_batch: a.graphs_per_batch,
        seed: a.seed,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        variant: a.variant,
        validation_graphs: a.validation_graphs,
        validation_samples_per_graph: 1,
    };
    config.validate()?;
    let mut model = HmsModel::new(emb.table.dim(), a.variant, a.seed)?;
    log::info!(
        "training {} for {} epochs x {} batches x {} graphs on {} graphs",
        a.variant,
        a.epochs,
        a.batches,
        a.graphs_per_batch,
        ds.graphs.len()
    );
    let report = train(&mut model, &emb.table, &ds, validation.as_ref(), &config, Some(&a.out))?;
    if let Some(last) = report.metrics.last() {
        log::info!("final epoch mean loss {:.4}", last.mean_loss);
    }
    let ck_path = a.out.join("checkpoint.json");
    model.save(&ck_path)?;
    let manifest = json!({
        "command": "train",
        "version": env!("CARGO_PKG_VERSION"),
        "dataset": dataset_json(&a.dataset, &ds),
        "validation": match (&a.validation, &validation) {
            (Some(p), Some(v)) => dataset_json(p, v),
            _ => serde_json::Value::Null,
        },
        "embeddings": { "name": emb.name, "sha256": emb.sha256, "dim": emb.table.dim() },
        "variant": a.variant.as_str(),
        "architecture_hash": model.arch.hash(),
        "train_config": config,
        "init_seed": a.seed,
        "jobs": a.jobs,
        "steps": report.steps,
        "checkpoint_sha256": file_sha(&ck_path)?,
    });
    write_json(&a.out.join("manifest.json"), &manifest)
}

/// A loaded checkpoint under the name it is listed as.
struct NamedCheckpoint {
    name: String,
    path: PathBuf,
    sha256: String,
    model: Arc<HmsModel>,
}

fn load_checkpoints(specs: &[String]) -> Outcome<Vec<NamedCheckpoint>> {
    let mut out: Vec<NamedCheckpoint> = Vec::new();
    for spec in specs {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) if !n.is_empty() => (Some(n.to_string()), PathBuf::from(p)),
            _ => (None, PathBuf::from(spec)),
        };
        let model = HmsModel::load(&path)?;
        let name = name.unwrap_or_else(|| model.variant.as_str().to_string());
        if BASELINES.contains(&name.as_str()) || out.iter().any(|c| c.name == name) {
            return Err(Failure::usage(format!(
                "policy name {name:?} is already taken; pass the checkpoint as NAME=PATH"
            )));
        }
        out.push(NamedCheckpoint {
            name,
            sha256: file_sha(&path)?,
            path,
            model: Arc::new(model),
        });
    }
    Ok(out)
}

const BASELINES: [&str; 6] = ["oracle", "rnd", "wv", "ms", "nr", "lr"];

fn baseline(name: &str) -> Option<Policy> {
    Some(match name {
        "oracle" => Policy::oracle(),
        "rnd" => Policy::random(),
        "wv" => Policy::word_vector(),
        "ms" => Policy::prior(),
        "nr" => Policy::near_rank(),
        "lr" => Policy::large_rank(),
        _ => return None,
    })
}

fn resolve_policy(name: &str, checkpoints: &[NamedCheckpoint]) -> Outcome<Policy> {
    if let Some(p) = baseline(name) {
        return Ok(p);
    }
    checkpoints
        .iter()
        .find(|c| c.name == name)
        .map(|c| Policy::model(&c.name, c.model.clone()))
        .ok_or_else(|| {
            Failure::usage(format!(
                "unknown policy {name:?}; known: {}",
                BASELINES
                    .iter()
                    .copied()
                    .chain(checkpoints.iter().map(|c| c.name.as_str()))
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

fn policy_list(list: &str, checkpoints: &[NamedCheckpoint]) -> Outcome<Vec<Policy>> {
    let mut names: Vec<String> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            names.extend(BASELINES.iter().map(|s| s.to_string()));
            names.extend(checkpoints.iter().map(|c| c.name.clone()));
        } else {
            names.push(item.to_string());
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    names.retain(|n| seen.insert(n.clone()));
    if names.is_empty() {
        return Err(Failure::usage("empty policy list"));
    }
    names.iter().map(|n| resolve_policy(n, checkpoints)).collect()
}

/// Every listed policy must fill `role`.
fn strict_axis(list: &str, role: Role, checkpoints: &[NamedCheckpoint]) -> Outcome<Vec<Policy>> {
    let policies = policy_list(list, checkpoints)?;
    for p in &policies {
        p.check_role(role)?;
    }
    Ok(policies)
}

fn eval(a: &EvalArgs) -> Outcome {
    if !(a.t0 > 0.0 && a.t0 <= 1.0) {
        return Err(Failure::usage(format!("--t0 {} is outside (0, 1]", a.t0)));
    }
    if a.samples_per_graph == 0 {
        return Err(Failure::usage("--samples-per-graph must be at least 1"));
    }
    let checkpoints = load_checkpoints(&a.checkpoints)?;
    let shared = policy_list(&a.policies, &checkpoints)?;
    let containers = match &a.container_policies {
        Some(list) => strict_axis(list, Role::Container, &checkpoints)?,
        None => shared.iter().filter(|p| p.supports(Role::Container)).cloned().collect(),
    };
    let objects = match &a.object_policies {
        Some(list) => strict_axis(list, Role::Object, &checkpoints)?,
        None => shared.iter().filter(|p| p.supports(Role::Object)).cloned().collect(),
    };
    if containers.is_empty() || objects.is_empty() {
        return Err(Failure::usage("both matrix axes need at least one policy"));
    }
    let ds = read_dataset(&a.dataset)?;
    let emb = load_embeddings(&a.embeddings)?;
    let env = PolicyEnv {
        embeddings: &emb.table,
        config: &ds.config,
    };

    let mut scored: Vec<&Policy> = Vec::new();
    for p in containers.iter().chain(&objects) {
        if !scored.iter().any(|q| q.name == p.name) {
            scored.push(p);
        }
    }
    let mut accuracy = Vec::new();
    if !a.no_accuracy {
        for p in &scored {
            log::info!("accuracy: {}", p.name);
            accuracy.push(classification_accuracy(
                p,
                &env,
                &ds.graphs,
                TargetMode::Test,
                a.samples_per_graph,
                a.seed,
            )?);
        }
    }
    log::info!(
        "search: {} x {} policies on {} graphs",
        containers.len(),
        objects.len(),
        ds.graphs.len()
    );
    let eff = efficiency_matrix(&containers, &objects, &env, &ds.graphs, a.t0, a.seed, a.traces)?;

    let names = |ps: &[Policy]| ps.iter().map(|p| p.name.clone()).collect::<Vec<_>>();
    let manifest = json!({
        "command": "eval",
        "version": env!("CARGO_PKG_VERSION"),
        "dataset": dataset_json(&a.dataset, &ds),
        "embeddings": { "name": emb.name, "sha256": emb.sha256, "dim": emb.table.dim() },
        "checkpoints": checkpoints.iter().map(|c| json!({
            "name": c.name,
            "path": c.path.display().to_string(),
            "sha256": c.sha256,
            "variant": c.model.variant.as_str(),
        })).collect::<Vec<_>>(),
        "container_policies": names(&containers),
        "object_policies": names(&objects),
        "accuracy": !a.no_accuracy,
        "accuracy_mode": "test",
        "samples_per_graph": a.samples_per_graph,
        "t0": a.t0,
        "seed": a.seed,
        "jobs": a.jobs,
        "episodes": eff.episodes,
    });
    write_report(&a.out, &accuracy, Some(&eff), &manifest)?;
    if let Some(traces) = &eff.traces {
        for (cell, cell_traces) in eff.cells.iter().zip(traces) {
            let dir = a.out.join("traces").join(format!("{}__{}", cell.container, cell.object));
            fs::create_dir_all(&dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
            for (gi, t) in cell_traces.iter().enumerate() {
                write_trace(&dir.join(format!("{gi:04}.jsonl")), t)?;
            }
        }
    }
    for cell in &eff.cells {
        log::info!("{:>8} / {:<8} mean {:.2} median {:.1}", cell.container, cell.object, cell.mean, cell.median);
    }
    Ok(())
}

fn search(a: SearchArgs) -> Outcome {
    let (graphs_path, dir_config) = if a.graph_file.is_dir() {
        let cfg = a.graph_file.join("config.json");
        (a.graph_file.join("graphs.jsonl"), cfg.exists().then_some(cfg))
    } else {
        let cfg = a.graph_file.parent().map(|p| p.join("config.json")).filter(|p| p.exists());
        (a.graph_file.clone(), cfg)
    };
    let config = match (&a.config, &dir_config) {
        (Some(spec), _) => load_config(spec)?,
        (None, Some(path)) => GenConfig::load(path)?,
        (None, None) => GenConfig::default_test(),
    };
    let graphs = read_graphs(&graphs_path)?;
    let n_graphs = graphs.len();
    let graph = graphs
        .into_iter()
        .nth(a.graph_index)
        .ok_or_else(|| Failure::data(format!("graph index {} out of range ({} graphs)", a.graph_index, n_graphs)))?;
    let target = match a.target {
        Some(id) => {
            let node = graph.expect_kind(NodeId(id), NodeKind::Object)?;
            TargetSpec {
                object_id: NodeId(id),
                description: node.description.clone(),
                category: node.label.clone(),
            }
        }
        None => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(a.seed, &[a.graph_index as u64]));
            sample_target(&graph, &config, TargetMode::Test, &mut rng)?
        }
    };
    let checkpoints = load_checkpoints(&a.checkpoint)?;
    let container = resolve_policy(&a.container_policy, &checkpoints)?;
    let object = resolve_policy(&a.object_policy, &checkpoints)?;
    container.check_role(Role::Container)?;
    object.check_role(Role::Object)?;
    let emb = load_embeddings(&a.embeddings)?;
    let env = PolicyEnv {
        embeddings: &emb.table,
        config: &config,
    };
    let trace = search_episode(&graph, &target, &container, &object, &env, a.t0, a.seed)?;
    write_trace(&a.trace_out, &trace)?;
    log::info!(
        "target {} ({}): {} after {} actions, {} restarts",
        target.object_id,
        target.description,
        if trace.found { "found" } else { "not found" },
        trace.actions.len(),
        trace.restarts
    );
    let mut manifest_path = a.trace_out.clone().into_os_string();
    manifest_path.push(".manifest.json");
    let manifest = json!({
        "command": "search",
        "version": env!("CARGO_PKG_VERSION"),
        "graph_file": graphs_path.display().to_string(),
        "graphs_sha256": file_sha(&graphs_path)?,
        "graph_index": a.graph_index,
        "graph_hash": graph.content_hash(),
        "config_name": config.name,
        "config_hash": config.hash(),
        "target": target,
        "target_given": a.target.is_some(),
        "embeddings": { "name": emb.name, "sha256": emb.sha256, "dim": emb.table.dim() },
        "checkpoints": checkpoints.iter().map(|c| json!({
            "name": c.name,
            "path": c.path.display().to_string(),
            "sha256": c.sha256,
        })).collect::<Vec<_>>(),
        "container_policy": container.name,
        "object_policy": object.name,
        "t0": a.t0,
        "seed": a.seed,
        "trace_sha256": sha256_hex(trace_to_jsonl(&trace).as_bytes()),
    });
    write_json(Path::new(&manifest_path), &manifest)
}
