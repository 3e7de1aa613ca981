//! DAG files: versioned JSON for round trips, DOT for looking at them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use taosched_core::graph::Work;
use taosched_core::{DagBuilder, TaoDag, TaskType};

use crate::error::{BenchError, Result};

pub const DAG_FORMAT: &str = "taosched-dag";
pub const DAG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: u32,
    #[serde(rename = "type")]
    task_type: TaskType,
    hint: usize,
    #[serde(default)]
    work: Work,
}

#[derive(Debug, Serialize, Deserialize)]
struct DagFile {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    nodes: Vec<NodeRecord>,
    edges: Vec<(u32, u32)>,
}

pub fn write_dag_json<W: Write>(dag: &TaoDag, w: W) -> Result<()> {
    let file = DagFile {
        format: DAG_FORMAT.into(),
        version: DAG_VERSION,
        seed: dag.seed(),
        nodes: dag
            .nodes()
            .iter()
            .map(|n| NodeRecord { id: n.id, task_type: n.task_type, hint: n.resource_hint, work: n.work })
            .collect(),
        edges: dag.edges().collect(),
    };
    serde_json::to_writer_pretty(w, &file)?;
    Ok(())
}

/// Reads a DAG written by [`write_dag_json`]. Node ids must be `0..n` in order.
pub fn read_dag_json<R: Read>(r: R) -> Result<TaoDag> {
    let file: DagFile = serde_json::from_reader(r)?;
    if file.format != DAG_FORMAT {
        return Err(BenchError::format(format!("not a DAG file (format `{}`)", file.format)));
    }
    if file.version != DAG_VERSION {
        return Err(BenchError::format(format!("unsupported DAG file version {}", file.version)));
    }
    let mut b = DagBuilder::with_capacity(file.nodes.len());
    for (i, n) in file.nodes.iter().enumerate() {
        if n.id as usize != i {
            return Err(BenchError::format(format!("node {i} has id {}; ids must be dense and ordered", n.id)));
        }
        b.add_node(n.task_type, n.hint, n.work);
    }
    for &(u, v) in &file.edges {
        b.add_edge(u, v)?;
    }
    let mut dag = b.build()?;
    dag.set_seed(file.seed);
    Ok(dag)
}

pub fn type_color(t: TaskType) -> &'static str {
    match t {
        TaskType::MatMul => "red",
        TaskType::Sort => "blue",
        TaskType::Copy => "green",
        TaskType::Synthetic => "gray",
    }
}

/// Graphviz rendering, nodes coloured by task type. `limit` keeps only the
/// first nodes (and edges among them).
pub fn write_dot<W: Write>(dag: &TaoDag, limit: Option<usize>, mut w: W) -> Result<()> {
    let n = limit.unwrap_or(usize::MAX).min(dag.node_count());
    writeln!(w, "digraph taos {{")?;
    writeln!(w, "  node [style=filled, fontcolor=white];")?;
    for node in &dag.nodes()[..n] {
        writeln!(
            w,
            "  {} [label=\"{} {} w{} c{}\", fillcolor={}];",
            node.id,
            node.id,
            node.task_type,
            node.resource_hint,
            node.criticality,
            type_color(node.task_type)
        )?;
    }
    for (u, v) in dag.edges().filter(|&(u, v)| (u as usize) < n && (v as usize) < n) {
        writeln!(w, "  {u} -> {v};")?;
    }
    writeln!(w, "}}")?;
    Ok(())
}
