//! TOML configuration: machine model, policy tunables, simulator and kernel
//! settings. Every section is optional; missing keys keep the defaults.
//!
//! ```toml
//! [policy]
//! initial_threshold = 1.5
//! threshold_history_weight = 6.0
//! ptt_history_weight = 4.0
//! comparator = "literal"          # or "cost-symmetric"
//!
//! [sim]
//! steal_latency_ns = 2000
//!
//! [model]
//! name = "custom"
//! memory_bandwidth_cap = 14000.0
//! # clusters, kernel_profiles ... (see `taosched show-model`)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use taosched_core::policies::HistoryComparator;
use taosched_core::sim::SimConfig;
use taosched_core::{MachineModel, Placement, PolicyConfig};

use crate::error::{BenchError, Result};
use crate::kernels::KernelSizes;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyTunables {
    pub initial_threshold: Option<f64>,
    pub threshold_history_weight: Option<f64>,
    pub ptt_history_weight: Option<f64>,
    pub comparator: Option<HistoryComparator>,
    pub big_cores: Option<Vec<usize>>,
    pub little_cores: Option<Vec<usize>>,
}

impl PolicyTunables {
    pub fn apply(&self, cfg: &mut PolicyConfig) {
        if let Some(v) = self.initial_threshold {
            cfg.initial_threshold = v;
        }
        if let Some(v) = self.threshold_history_weight {
            cfg.threshold_history_weight = v;
        }
        if let Some(v) = self.ptt_history_weight {
            cfg.ptt_history_weight = v;
        }
        if let Some(v) = self.comparator {
            cfg.comparator = v;
        }
        if let Some(v) = &self.big_cores {
            cfg.big_cores = v.clone();
        }
        if let Some(v) = &self.little_cores {
            cfg.little_cores = v.clone();
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTunables {
    pub steal_latency_ns: Option<u64>,
    pub wake_latency_ns: Option<u64>,
}

impl SimTunables {
    pub fn sim_config(&self, seed: u64) -> SimConfig {
        let mut c = SimConfig::with_seed(seed);
        if let Some(v) = self.steal_latency_ns {
            c.steal_latency_ns = v;
        }
        if let Some(v) = self.wake_latency_ns {
            c.wake_latency_ns = v;
        }
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<MachineModel>,
    #[serde(default)]
    pub policy: PolicyTunables,
    #[serde(default)]
    pub sim: SimTunables,
    pub kernels: Option<KernelSizes>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text)?;
        if let Some(m) = &cfg.model {
            m.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn model(&self) -> MachineModel {
        self.model.clone().unwrap_or_else(MachineModel::hikey960_like)
    }

    /// A policy from its label (`crit-ptt`, `weight+mold`, ...) with this
    /// file's tunables applied.
    pub fn policy(&self, label: &str, model: &MachineModel) -> Result<PolicyConfig> {
        let mut cfg = parse_policy(label, model)?;
        self.policy.apply(&mut cfg);
        cfg.validate(model.n_cores())?;
        Ok(cfg)
    }
}

/// A file holding only a machine model at top level.
pub fn load_model(path: &Path) -> Result<MachineModel> {
    let m: MachineModel = toml::from_str(&std::fs::read_to_string(path)?)?;
    m.validate()?;
    Ok(m)
}

pub fn model_to_toml(m: &MachineModel) -> Result<String> {
    toml::to_string_pretty(m).map_err(|e| BenchError::format(e.to_string()))
}

/// `<placement>` or `<placement>+mold`.
pub fn parse_policy(label: &str, model: &MachineModel) -> Result<PolicyConfig> {
    let (name, molding) = match label.strip_suffix("+mold") {
        Some(n) => (n, true),
        None => (label, false),
    };
    let placement: Placement = name.parse()?;
    Ok(PolicyConfig::new(placement, molding, model))
}

/// The policy set of the throughput comparison.
pub const DEFAULT_POLICIES: [&str; 5] = ["homogeneous", "crit-aware", "crit-ptt", "crit-ptt+mold", "weight+mold"];
