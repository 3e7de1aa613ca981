//! Mixed-mode task DAGs.
//!
//! Node ids are dense (`0..node_count`), so the id → node map is a plain
//! slice. A [`TaoDag`] is immutable once built; the only state that changes
//! during a run is the per-node count of unfinished predecessors, which lives
//! in [`PendingCounters`] so that several workers can release successors
//! concurrently.

mod generate;

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::sync::atomic::{AtomicU32, Ordering};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generate::{generate_random_dag, GeneratedDag, GeneratorParams, ShapeParams, TypeMix};

pub type TaoId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum TaskType {
    Copy,
    Sort,
    #[cfg_attr(feature = "serde", serde(rename = "MATMUL"))]
    MatMul,
    Synthetic,
}

impl TaskType {
    pub const ALL: [TaskType; 4] = [TaskType::Copy, TaskType::Sort, TaskType::MatMul, TaskType::Synthetic];

    pub const fn index(self) -> usize {
        match self {
            TaskType::Copy => 0,
            TaskType::Sort => 1,
            TaskType::MatMul => 2,
            TaskType::Synthetic => 3,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            TaskType::Copy => "COPY",
            TaskType::Sort => "SORT",
            TaskType::MatMul => "MATMUL",
            TaskType::Synthetic => "SYNTHETIC",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTaskType(s.into()))
    }
}

/// Payload descriptor handed to a kernel. `size == 0` means the kernel's
/// default working set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Work {
    pub size: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaoNode {
    pub id: TaoId,
    pub task_type: TaskType,
    pub work: Work,
    /// Requested place width; a power of two.
    pub resource_hint: usize,
    /// Number of nodes on the longest path from this node to an exit node.
    pub criticality: u32,
    pub successors: Vec<TaoId>,
    /// In-degree; the initial value of this node's pending counter.
    pub predecessors: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaoDag {
    nodes: Vec<TaoNode>,
    roots: Vec<TaoId>,
    topo_order: Vec<TaoId>,
    seed: Option<u64>,
}

impl TaoDag {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TaoNode] {
        &self.nodes
    }

    pub fn node(&self, id: TaoId) -> &TaoNode {
        &self.nodes[id as usize]
    }

    pub fn roots(&self) -> &[TaoId] {
        &self.roots
    }

    /// A topological order (every node precedes its successors).
    pub fn topological_order(&self) -> &[TaoId] {
        &self.topo_order
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.successors.len()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (TaoId, TaoId)> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| n.successors.iter().map(move |&s| (n.id, s)))
    }

    /// Seed of the generator that produced this DAG, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn set_seed(&mut self, seed: Option<u64>) {
        self.seed = seed;
    }

    /// Length (in nodes) of the longest root-to-exit path.
    pub fn critical_path_len(&self) -> u32 {
        self.roots
            .iter()
            .map(|&r| self.nodes[r as usize].criticality)
            .max()
            .unwrap_or(0)
    }

    /// `node_count / critical_path_len`.
    pub fn degree_of_parallelism(&self) -> Result<f64> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyDag);
        }
        Ok(self.nodes.len() as f64 / self.critical_path_len() as f64)
    }

    /// Sets every node's resource hint to `hint`.
    pub fn set_uniform_hint(&mut self, hint: usize) -> Result<()> {
        if hint == 0 || !hint.is_power_of_two() {
            return Err(Error::UnsupportedWidth(hint));
        }
        for n in &mut self.nodes {
            n.resource_hint = hint;
        }
        Ok(())
    }

    pub fn with_uniform_hint(mut self, hint: usize) -> Result<Self> {
        self.set_uniform_hint(hint)?;
        Ok(self)
    }

    pub fn pending_counters(&self) -> PendingCounters {
        PendingCounters {
            counts: self
                .nodes
                .iter()
                .map(|n| AtomicU32::new(n.predecessors))
                .collect(),
        }
    }
}

/// Incremental construction of a [`TaoDag`].
#[derive(Default, Debug, Clone)]
pub struct DagBuilder {
    nodes: Vec<TaoNode>,
    seed: Option<u64>,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { nodes: Vec::with_capacity(n), seed: None }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn add_node(&mut self, task_type: TaskType, resource_hint: usize, work: Work) -> TaoId {
        let id = self.nodes.len() as TaoId;
        self.nodes.push(TaoNode {
            id,
            task_type,
            work,
            resource_hint,
            criticality: 0,
            successors: Vec::new(),
            predecessors: 0,
        });
        id
    }

    /// Adds `from → to`. Duplicate edges are ignored.
    pub fn add_edge(&mut self, from: TaoId, to: TaoId) -> Result<()> {
        let n = self.nodes.len() as TaoId;
        if from >= n {
            return Err(Error::UnknownNode(from));
        }
        if to >= n {
            return Err(Error::UnknownNode(to));
        }
        if from == to {
            return Err(Error::SelfLoop(from));
        }
        let succ = &mut self.nodes[from as usize].successors;
        if !succ.contains(&to) {
            succ.push(to);
            self.nodes[to as usize].predecessors += 1;
        }
        Ok(())
    }

    /// Validates acyclicity and hints, then assigns criticality.
    pub fn build(mut self) -> Result<TaoDag> {
        for n in &self.nodes {
            if n.resource_hint == 0 || !n.resource_hint.is_power_of_two() {
                return Err(Error::UnsupportedWidth(n.resource_hint));
            }
        }
        let topo_order = topological_order(&self.nodes)?;
        let crit = criticality_in_order(&self.nodes, &topo_order);
        for (n, c) in self.nodes.iter_mut().zip(crit) {
            n.criticality = c;
        }
        let roots = self
            .nodes
            .iter()
            .filter(|n| n.predecessors == 0)
            .map(|n| n.id)
            .collect();
        Ok(TaoDag { nodes: self.nodes, roots, topo_order, seed: self.seed })
    }
}

/// Kahn's algorithm; ties resolved by ascending id so the order is stable.
fn topological_order(nodes: &[TaoNode]) -> Result<Vec<TaoId>> {
    let mut indeg: Vec<u32> = nodes.iter().map(|n| n.predecessors).collect();
    let mut queue: VecDeque<TaoId> = nodes
        .iter()
        .filter(|n| n.predecessors == 0)
        .map(|n| n.id)
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(id) = queue.pop_front() {
        order.push(id);
        for &s in &nodes[id as usize].successors {
            let d = &mut indeg[s as usize];
            *d -= 1;
            if *d == 0 {
                queue.push_back(s);
            }
        }
    }
    if order.len() != nodes.len() {
        let node = indeg
            .iter()
            .position(|&d| d > 0)
            .map(|i| i as TaoId)
            .unwrap_or(0);
        return Err(Error::Cycle { node });
    }
    Ok(order)
}

fn criticality_in_order(nodes: &[TaoNode], topo: &[TaoId]) -> Vec<u32> {
    let mut crit = vec![0u32; nodes.len()];
    for &id in topo.iter().rev() {
        let n = &nodes[id as usize];
        let below = n.successors.iter().map(|&s| crit[s as usize]).max().unwrap_or(0);
        crit[id as usize] = below + 1;
    }
    crit
}

/// Criticality of every node: the number of nodes on the longest path from
/// it to an exit node, so exit nodes get 1 and the head of the longest path
/// gets the largest value.
pub fn assign_criticality(nodes: &[TaoNode]) -> Result<Vec<u32>> {
    let topo = topological_order(nodes)?;
    Ok(criticality_in_order(nodes, &topo))
}

/// Per-node count of unfinished predecessors.
#[derive(Debug)]
pub struct PendingCounters {
    counts: Vec<AtomicU32>,
}

impl PendingCounters {
    /// Marks one predecessor of `id` as finished. Returns `Ok(true)` for the
    /// single caller that brings the count to zero.
    pub fn release(&self, id: TaoId) -> Result<bool> {
        let slot = &self.counts[id as usize];
        let prev = slot
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |c| c.checked_sub(1))
            .map_err(|_| Error::DoubleCommit(id))?;
        Ok(prev == 1)
    }

    pub fn get(&self, id: TaoId) -> u32 {
        self.counts[id as usize].load(Ordering::Acquire)
    }
}
