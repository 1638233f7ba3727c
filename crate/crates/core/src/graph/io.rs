//! JSON-lines records for scene graphs.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GraphError, NodeId, Result, SceneGraph, SceneNode};

pub const GRAPH_FORMAT: &str = "hms-scene-graph";
pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    format: String,
    version: u32,
    root: NodeId,
    nodes: Vec<SceneNode>,
}

#[derive(Serialize)]
struct GraphRecordRef<'a> {
    format: &'a str,
    version: u32,
    root: NodeId,
    nodes: &'a [SceneNode],
}

/// One-line canonical JSON record. Equal graphs give identical bytes.
pub fn serialize_graph(graph: &SceneGraph) -> String {
    serde_json::to_string(&GraphRecordRef {
        format: GRAPH_FORMAT,
        version: GRAPH_FORMAT_VERSION,
        root: graph.root(),
        nodes: graph.nodes(),
    })
    .expect("scene graph serialization cannot fail")
}

pub fn deserialize_graph(text: &str) -> Result<SceneGraph> {
    let record: GraphRecord = serde_json::from_str(text).map_err(|e| GraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if record.format != GRAPH_FORMAT {
        return Err(GraphError::Invalid(format!("unexpected format {:?}", record.format)));
    }
    if record.version != GRAPH_FORMAT_VERSION {
        return Err(GraphError::Invalid(format!(
            "unsupported graph format version {}",
            record.version
        )));
    }
    if record.root != NodeId::ROOT {
        return Err(GraphError::Invalid(format!("root must be node 0, got {}", record.root)));
    }
    SceneGraph::from_nodes(record.nodes)
}

pub fn write_graphs(path: &Path, graphs: &[SceneGraph]) -> Result<()> {
    let io_err = |e: std::io::Error| GraphError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for g in graphs {
        file.write_all(serialize_graph(g).as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
    }
    file.flush().map_err(io_err)
}

/// Reads every non-blank line of a JSON-lines file; parse errors report the
/// file line.
pub fn read_graphs(path: &Path) -> Result<Vec<SceneGraph>> {
    let io_err = |e: std::io::Error| GraphError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let g = deserialize_graph(&line).map_err(|e| match e {
            GraphError::Parse { column, message, .. } => GraphError::Parse {
                line: i + 1,
                column,
                message,
            },
            GraphError::Invalid(m) => GraphError::Invalid(format!("line {}: {m}", i + 1)),
            other => other,
        })?;
        out.push(g);
    }
    Ok(out)
}
