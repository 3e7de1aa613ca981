//! CSV outputs. Every file starts with one comment line naming its kind and
//! version, e.g. `#format=taosched-trace,version=1`, then a fixed header.
//!
//! | kind | columns |
//! |------|---------|
//! | `taosched-trace` | `tao_id,type,leader,width,start_us,end_us,participants,committer,policy` |
//! | `taosched-runs` | `dag,dop,policy,hint,rep,seed,nodes,makespan_us,throughput` |
//! | `taosched-summary` | `dag,dop,policy,hint,reps,makespan_us,throughput` |
//! | `taosched-ablation` | `dag,dop,hint,placement,throughput_without,throughput_with,delta_pct` |
//! | `taosched-ptt` | `type,core,width,ewma_us` |
//! | `taosched-plot` | `dag,dop,policy,hint,throughput` with `NA` for a missing bar |

use std::io::{BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use taosched_core::{PttSet, RunMetrics, TaskType};

use crate::error::{BenchError, Result};

pub const TABLE_VERSION: u32 = 1;
pub const NA: &str = "NA";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tao_id: u32,
    #[serde(rename = "type")]
    pub task_type: TaskType,
    pub leader: usize,
    pub width: usize,
    pub start_us: f64,
    pub end_us: f64,
    pub participants: usize,
    pub committer: usize,
    pub policy: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dag: String,
    pub dop: f64,
    pub policy: String,
    pub hint: usize,
    pub rep: usize,
    pub seed: u64,
    pub nodes: usize,
    pub makespan_us: f64,
    pub throughput: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dag: String,
    pub dop: f64,
    pub policy: String,
    pub hint: usize,
    pub reps: usize,
    pub makespan_us: f64,
    pub throughput: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub dag: String,
    pub dop: f64,
    pub hint: usize,
    pub placement: String,
    pub throughput_without: f64,
    pub throughput_with: f64,
    pub delta_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PttRow {
    #[serde(rename = "type")]
    pub task_type: TaskType,
    pub core: usize,
    pub width: usize,
    pub ewma_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub dag: String,
    pub dop: f64,
    pub policy: String,
    pub hint: usize,
    /// A number, or [`NA`] when no run produced this bar.
    pub throughput: String,
}

/// A CSV table kind with its fixed name.
pub trait Table: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Table for TraceRow {
    const KIND: &'static str = "taosched-trace";
}
impl Table for RunRow {
    const KIND: &'static str = "taosched-runs";
}
impl Table for SummaryRow {
    const KIND: &'static str = "taosched-summary";
}
impl Table for AblationRow {
    const KIND: &'static str = "taosched-ablation";
}
impl Table for PttRow {
    const KIND: &'static str = "taosched-ptt";
}
impl Table for PlotRow {
    const KIND: &'static str = "taosched-plot";
}

fn version_line(kind: &str) -> String {
    format!("#format={kind},version={TABLE_VERSION}")
}

pub fn write_table<T: Table, W: Write>(rows: &[T], mut w: W) -> Result<()> {
    writeln!(w, "{}", version_line(T::KIND))?;
    let mut csv = csv::Writer::from_writer(w);
    if rows.is_empty() {
        // serde only knows the header once it sees a row
        csv.write_record(header_of::<T>())?;
    }
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn header_of<T: Table>() -> Vec<&'static str> {
    match T::KIND {
        "taosched-trace" => vec!["tao_id", "type", "leader", "width", "start_us", "end_us", "participants", "committer", "policy"],
        "taosched-runs" => vec!["dag", "dop", "policy", "hint", "rep", "seed", "nodes", "makespan_us", "throughput"],
        "taosched-summary" => vec!["dag", "dop", "policy", "hint", "reps", "makespan_us", "throughput"],
        "taosched-ablation" => {
            vec!["dag", "dop", "hint", "placement", "throughput_without", "throughput_with", "delta_pct"]
        }
        "taosched-ptt" => vec!["type", "core", "width", "ewma_us"],
        _ => vec!["dag", "dop", "policy", "hint", "throughput"],
    }
}

pub fn read_table<T: Table, R: Read>(r: R) -> Result<Vec<T>> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let expect = version_line(T::KIND);
    if first.trim_end() != expect {
        return Err(BenchError::format(format!("expected `{expect}`, found `{}`", first.trim_end())));
    }
    let mut csv = csv::Reader::from_reader(r);
    Ok(csv.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn trace_rows(m: &RunMetrics) -> Vec<TraceRow> {
    m.trace
        .iter()
        .map(|e| TraceRow {
            tao_id: e.tao,
            task_type: e.task_type,
            leader: e.leader,
            width: e.width,
            start_us: e.start_ns as f64 / 1000.0,
            end_us: e.end_ns as f64 / 1000.0,
            participants: e.participants,
            committer: e.committer,
            policy: m.policy.clone(),
        })
        .collect()
}

pub fn ptt_rows(ptt: &PttSet) -> Vec<PttRow> {
    TaskType::ALL
        .iter()
        .flat_map(|&t| {
            ptt.table(t)
                .measured()
                .into_iter()
                .map(move |(core, width, ewma_us)| PttRow { task_type: t, core, width, ewma_us })
        })
        .collect()
}

/// Warm-starts `ptt` from a dump.
pub fn preload_ptt(ptt: &PttSet, rows: &[PttRow]) -> Result<()> {
    for r in rows {
        ptt.table(r.task_type).preload(r.core, r.width, r.ewma_us)?;
    }
    Ok(())
}
