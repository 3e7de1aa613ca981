//! Clustered heterogeneous machine model.
//!
//! Cores are numbered densely and grouped into clusters of power-of-two
//! size, aligned so that every place of width up to the cluster size falls
//! inside one cluster. Each task type carries a profile: its time on a
//! speed-1 core, a per-cluster speed factor, a per-cluster efficiency curve
//! over the number of active cores, and the bytes it streams from memory.
//! Streaming types share a single memory bandwidth cap.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::graph::TaskType;
use crate::place::Place;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Cluster {
    pub name: String,
    pub first_core: usize,
    pub n_cores: usize,
    /// Marks the high-performance cluster(s) for the policies that are told
    /// about core types.
    pub big: bool,
    /// Shared cache capacity, used only by the optional interference model.
    #[cfg_attr(feature = "serde", serde(default))]
    pub l2_bytes: f64,
}

impl Cluster {
    pub fn cores(&self) -> Range<usize> {
        self.first_core..self.first_core + self.n_cores
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KernelProfile {
    pub task_type: TaskType,
    /// Solo time at width 1 on a core of speed 1, in microseconds.
    pub base_us: f64,
    /// Speed factor per cluster.
    pub speed: Vec<f64>,
    /// Per cluster, per-core efficiency with `k` active cores at index `k - 1`.
    pub efficiency: Vec<Vec<f64>>,
    /// Bytes read plus written per execution. Non-zero makes the type
    /// bandwidth-bound.
    #[cfg_attr(feature = "serde", serde(default))]
    pub bytes_streamed: f64,
    /// Cache footprint; only consulted by the interference model.
    #[cfg_attr(feature = "serde", serde(default))]
    pub working_set_bytes: f64,
}

/// Slowdown applied to non-streaming TAOs of a cluster while the summed
/// working sets of that cluster's running TAOs exceed its cache.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CacheInterference {
    pub penalty: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MachineModel {
    pub name: String,
    pub clusters: Vec<Cluster>,
    /// Shared memory bandwidth in bytes per microsecond (= MB/s).
    pub memory_bandwidth_cap: f64,
    pub kernel_profiles: Vec<KernelProfile>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub cache_interference: Option<CacheInterference>,
}

impl MachineModel {
    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::config("machine model has no clusters"));
        }
        let mut next = 0;
        for c in &self.clusters {
            if c.first_core != next {
                return Err(Error::config("cluster core ids must be dense and in order"));
            }
            if c.n_cores == 0 || !c.n_cores.is_power_of_two() || c.first_core % c.n_cores != 0 {
                return Err(Error::config(
                    "cluster sizes must be powers of two aligned to their size",
                ));
            }
            next += c.n_cores;
        }
        if !(self.memory_bandwidth_cap > 0.0) {
            return Err(Error::config("memory_bandwidth_cap must be positive"));
        }
        for (i, p) in self.kernel_profiles.iter().enumerate() {
            if self.kernel_profiles[..i].iter().any(|q| q.task_type == p.task_type) {
                return Err(Error::config("duplicate kernel profile"));
            }
            if !(p.base_us > 0.0) || p.bytes_streamed < 0.0 {
                return Err(Error::config("kernel base time must be positive"));
            }
            if p.speed.len() != self.clusters.len() || p.efficiency.len() != self.clusters.len() {
                return Err(Error::config("kernel profiles need one speed and curve per cluster"));
            }
            if p.speed.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(Error::config("speed factors must be positive"));
            }
            for (curve, c) in p.efficiency.iter().zip(&self.clusters) {
                if curve.len() != c.n_cores || curve.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    return Err(Error::config(
                        "efficiency curves need one value in (0, 1] per core of the cluster",
                    ));
                }
            }
        }
        if let Some(ci) = self.cache_interference {
            if !(ci.penalty >= 1.0) {
                return Err(Error::config("cache interference penalty must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn n_cores(&self) -> usize {
        self.clusters.iter().map(|c| c.n_cores).sum()
    }

    pub fn cluster_of(&self, core: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.cores().contains(&core))
    }

    /// Widest place a TAO targeting `core` can get.
    pub fn max_width_at(&self, core: usize) -> usize {
        self.cluster_of(core).map_or(1, |c| self.clusters[c].n_cores)
    }

    pub fn big_cores(&self) -> Vec<usize> {
        self.clusters.iter().filter(|c| c.big).flat_map(|c| c.cores()).collect()
    }

    pub fn little_cores(&self) -> Vec<usize> {
        self.clusters.iter().filter(|c| !c.big).flat_map(|c| c.cores()).collect()
    }

    pub fn profile(&self, t: TaskType) -> Result<&KernelProfile> {
        self.kernel_profiles
            .iter()
            .find(|p| p.task_type == t)
            .ok_or_else(|| Error::UnknownTaskType(t.name().to_string()))
    }

    /// Uncontended time with `active` cores of `cluster` working on one TAO.
    pub fn solo_time_us(&self, t: TaskType, cluster: usize, active: usize) -> Result<f64> {
        let p = self.profile(t)?;
        let curve = &p.efficiency[cluster];
        let k = active.clamp(1, curve.len());
        Ok(p.base_us / (p.speed[cluster] * k as f64 * curve[k - 1]))
    }

    /// Memory traffic rate of an uncontended TAO, bytes per microsecond.
    pub fn bandwidth_demand(&self, t: TaskType, cluster: usize, active: usize) -> Result<f64> {
        let p = self.profile(t)?;
        if p.bytes_streamed == 0.0 {
            return Ok(0.0);
        }
        Ok(p.bytes_streamed / self.solo_time_us(t, cluster, active)?)
    }

    /// A copy with at most `n_workers` cores that keeps the cluster layout:
    /// clusters are halved until they fit, and trailing clusters are dropped
    /// if even single-core clusters do not.
    pub fn scaled_to(&self, n_workers: usize) -> Result<MachineModel> {
        if n_workers == 0 {
            return Err(Error::config("need at least one worker"));
        }
        if n_workers >= self.n_cores() {
            return Ok(self.clone());
        }
        let mut sizes: Vec<usize> = self.clusters.iter().map(|c| c.n_cores).collect();
        while sizes.iter().sum::<usize>() > n_workers && sizes.iter().any(|&s| s > 1) {
            let widest = (0..sizes.len()).max_by_key(|&i| (sizes[i], usize::MAX - i)).unwrap();
            sizes[widest] /= 2;
        }
        let mut keep = sizes.len();
        while sizes[..keep].iter().sum::<usize>() > n_workers {
            keep -= 1;
        }
        // Biggest first so alignment holds for the dense renumbering.
        let mut order: Vec<usize> = (0..keep).collect();
        order.sort_by_key(|&i| core::cmp::Reverse(sizes[i]));
        let mut clusters = Vec::with_capacity(keep);
        let mut first = 0;
        for &i in &order {
            let mut c = self.clusters[i].clone();
            c.first_core = first;
            c.n_cores = sizes[i];
            first += sizes[i];
            clusters.push(c);
        }
        let kernel_profiles = self
            .kernel_profiles
            .iter()
            .map(|p| KernelProfile {
                speed: order.iter().map(|&i| p.speed[i]).collect(),
                efficiency: order
                    .iter()
                    .map(|&i| p.efficiency[i][..sizes[i]].to_vec())
                    .collect(),
                ..p.clone()
            })
            .collect();
        let scaled = MachineModel {
            name: alloc::format!("{} (scaled to {} cores)", self.name, first),
            clusters,
            kernel_profiles,
            ..self.clone()
        };
        scaled.validate()?;
        Ok(scaled)
    }

    /// Two clusters of four cores: LITTLE cores 0..=3 and big cores 4..=7.
    ///
    /// Calibration targets: MATMUL runs 2.4x faster on a big core and scales
    /// linearly; SORT is only 1.1x faster on big cores and loses efficiency
    /// as its merge stages narrow; COPY streams 33.6 MB per run, one big
    /// core alone uses 60% of the memory bandwidth and a full LITTLE cluster
    /// stays well below the cap because the LITTLE cluster's own path to
    /// memory flattens out. All three take about 10 ms on one LITTLE core.
    pub fn hikey960_like() -> MachineModel {
        let flat = vec![1.0; 4];
        let sort_curve = vec![1.0, 0.8, 0.65, 0.55];
        let little_copy = vec![1.0, 0.75, 0.55, 0.42];
        let profile = |t, base_us, big: f64, little: &Vec<f64>, bytes, ws| KernelProfile {
            task_type: t,
            base_us,
            speed: vec![1.0, big],
            efficiency: vec![little.clone(), if t == TaskType::Copy { flat.clone() } else { little.clone() }],
            bytes_streamed: bytes,
            working_set_bytes: ws,
        };
        MachineModel {
            name: "hikey960-like".to_string(),
            clusters: vec![
                Cluster { name: "LITTLE".into(), first_core: 0, n_cores: 4, big: false, l2_bytes: 1.0e6 },
                Cluster { name: "big".into(), first_core: 4, n_cores: 4, big: true, l2_bytes: 2.0e6 },
            ],
            memory_bandwidth_cap: 14_000.0,
            kernel_profiles: vec![
                profile(TaskType::Copy, 10_000.0, 2.5, &little_copy, 33.6e6, 33.6e6),
                profile(TaskType::Sort, 10_000.0, 1.1, &sort_curve, 0.0, 524.0e3),
                profile(TaskType::MatMul, 10_000.0, 2.4, &flat, 0.0, 98_304.0),
                profile(TaskType::Synthetic, 1_000.0, 1.0, &flat, 0.0, 0.0),
            ],
            cache_interference: None,
        }
    }
}

/// Time of one TAO on `place` while other TAOs stream
/// `concurrent_bw_demand` bytes/µs: the uncontended time stretched by
/// `max(1, total demand / cap)` for streaming types.
pub fn simulate_task_time(
    t: TaskType,
    place: &Place,
    concurrent_bw_demand: f64,
    model: &MachineModel,
) -> Result<f64> {
    let cluster = model
        .cluster_of(place.leader)
        .ok_or(Error::UnknownCore(place.leader))?;
    if !model.clusters[cluster].cores().contains(&(place.leader + place.width - 1)) {
        return Err(Error::PlaceOutOfCluster { leader: place.leader, width: place.width });
    }
    let solo = model.solo_time_us(t, cluster, place.width)?;
    let own = model.bandwidth_demand(t, cluster, place.width)?;
    if own == 0.0 {
        return Ok(solo);
    }
    let factor = ((own + concurrent_bw_demand) / model.memory_bandwidth_cap).max(1.0);
    Ok(solo * factor)
}
