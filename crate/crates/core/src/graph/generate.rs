//! Seeded layered DAG generator.
//!
//! Nodes are laid out in layers. Every node below the first layer gets one
//! parent in the layer directly above it, plus a few extra parents drawn
//! from up to `max_jump` layers above. Because every node hangs off the
//! previous layer, the critical path has exactly as many nodes as there are
//! layers, so the layer count is what targets the degree of parallelism.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DagBuilder, TaoDag, TaskType, Work};
use crate::{Error, Result};

/// Share of each task type among the generated nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeMix(Vec<(TaskType, f64)>);

impl TypeMix {
    pub fn new(shares: Vec<(TaskType, f64)>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::config("type mix is empty"));
        }
        if shares.iter().any(|&(_, p)| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::config("type mix proportions must be finite and non-negative"));
        }
        let total: f64 = shares.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::config("type mix proportions must sum to 1"));
        }
        Ok(Self(shares))
    }

    /// COPY, SORT and MATMUL in equal parts.
    pub fn equal_thirds() -> Self {
        let third = 1.0 / 3.0;
        Self(alloc::vec![(TaskType::Copy, third), (TaskType::Sort, third), (TaskType::MatMul, third)])
    }

    pub fn single(t: TaskType) -> Self {
        Self(alloc::vec![(t, 1.0)])
    }

    pub fn shares(&self) -> &[(TaskType, f64)] {
        &self.0
    }

    /// Node count per type for `n` nodes, by largest remainder.
    pub fn counts(&self, n: usize) -> Vec<(TaskType, usize)> {
        let mut out: Vec<(TaskType, usize, f64)> = self
            .0
            .iter()
            .map(|&(t, p)| {
                let exact = p * n as f64;
                let floor = exact as usize;
                (t, floor, exact - floor as f64)
            })
            .collect();
        let assigned: usize = out.iter().map(|e| e.1).sum();
        let mut order: Vec<usize> = (0..out.len()).collect();
        // stable sort keeps declaration order among equal remainders
        order.sort_by(|&a, &b| out[b].2.partial_cmp(&out[a].2).unwrap_or(core::cmp::Ordering::Equal));
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            out[i].1 += 1;
        }
        out.into_iter().map(|(t, c, _)| (t, c)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeParams {
    /// Desired `nodes / critical path`; sets the number of layers.
    pub target_dop: f64,
    /// Probability that a node beyond the first per layer lands in a random
    /// layer instead of round-robin. 0 gives near-uniform layer widths.
    pub width_jitter: f64,
    /// Upper bound on extra parents per node, drawn uniformly from `0..=max`.
    pub max_extra_parents: usize,
    /// How many layers up an extra parent may come from.
    pub max_jump: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self { target_dop: 3.0, width_jitter: 0.5, max_extra_parents: 2, max_jump: 2 }
    }
}

impl ShapeParams {
    pub fn with_dop(target_dop: f64) -> Self {
        Self { target_dop, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub n_nodes: usize,
    pub type_mix: TypeMix,
    pub shape: ShapeParams,
    pub resource_hint: usize,
}

impl GeneratorParams {
    /// 3000 nodes, equal thirds of COPY/SORT/MATMUL, hint 1.
    pub fn benchmark(target_dop: f64) -> Self {
        Self {
            n_nodes: 3000,
            type_mix: TypeMix::equal_thirds(),
            shape: ShapeParams::with_dop(target_dop),
            resource_hint: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDag {
    pub dag: TaoDag,
    /// Measured on the built DAG, not the target.
    pub degree_of_parallelism: f64,
}

pub fn generate_random_dag(params: &GeneratorParams, seed: u64) -> Result<GeneratedDag> {
    let n = params.n_nodes;
    let shape = &params.shape;
    if n == 0 {
        return Err(Error::config("n_nodes must be at least 1"));
    }
    if !shape.target_dop.is_finite() || shape.target_dop < 1.0 || shape.target_dop > n as f64 {
        return Err(Error::config("target_dop must lie in [1, n_nodes]"));
    }
    if !(0.0..=1.0).contains(&shape.width_jitter) {
        return Err(Error::config("width_jitter must lie in [0, 1]"));
    }
    if shape.max_jump == 0 {
        return Err(Error::config("max_jump must be at least 1"));
    }
    if params.resource_hint == 0 || !params.resource_hint.is_power_of_two() {
        return Err(Error::UnsupportedWidth(params.resource_hint));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = ((n as f64 / shape.target_dop) + 0.5) as usize;
    let layers = layers.clamp(1, n);

    let mut widths = alloc::vec![1usize; layers];
    for i in 0..n - layers {
        let l = if rng.gen_bool(shape.width_jitter) { rng.gen_range(0..layers) } else { i % layers };
        widths[l] += 1;
    }

    let mut types: Vec<TaskType> = params
        .type_mix
        .counts(n)
        .into_iter()
        .flat_map(|(t, c)| core::iter::repeat_n(t, c))
        .collect();
    types.shuffle(&mut rng);

    let mut b = DagBuilder::with_capacity(n).seed(seed);
    let mut layer_start = Vec::with_capacity(layers + 1);
    let mut next = 0u32;
    for &w in &widths {
        layer_start.push(next);
        for _ in 0..w {
            let t = types[next as usize];
            b.add_node(t, params.resource_hint, Work { size: 0, seed: rng.gen() });
            next += 1;
        }
    }
    layer_start.push(next);

    let pick = |rng: &mut ChaCha8Rng, layer: usize| -> u32 {
        rng.gen_range(layer_start[layer]..layer_start[layer + 1])
    };
    for layer in 1..layers {
        for id in layer_start[layer]..layer_start[layer + 1] {
            let parent = pick(&mut rng, layer - 1);
            b.add_edge(parent, id)?;
            let extra = rng.gen_range(0..=shape.max_extra_parents);
            let lowest = layer.saturating_sub(shape.max_jump);
            for _ in 0..extra {
                let from = rng.gen_range(lowest..layer);
                let parent = pick(&mut rng, from);
                b.add_edge(parent, id)?;
            }
        }
    }

    let dag = b.build()?;
    let degree_of_parallelism = dag.degree_of_parallelism()?;
    Ok(GeneratedDag { dag, degree_of_parallelism })
}
