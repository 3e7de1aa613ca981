//! Placement and molding decisions taken when a TAO is woken.
//!
//! Every ready TAO passes through [`PolicyEngine::on_wakeup`], which picks
//! the core whose ready queue receives it and, with molding enabled, the
//! width it will run at. The shared state (weight threshold, system load and
//! the running-criticality tracker) is made of atomics so the threaded
//! backend can call in from any worker; stale reads are acceptable.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::graph::TaoNode;
use crate::machine::MachineModel;
use crate::ptt::{leader_core, weight, PttSet, PttTable, EWMA_OLD_WEIGHT};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 1.5;
/// Weight of the old threshold in `(w + 6 * old) / 7`.
pub const DEFAULT_THRESHOLD_HISTORY: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Placement {
    /// Woken TAOs stay on the committing core; extras go to random cores.
    Homogeneous,
    /// Critical TAOs to a random big core, the rest to a random LITTLE core.
    CritAware,
    /// Critical TAOs to the PTT's fastest leader, the rest to a random core.
    CritPtt,
    /// LITTLE/big time ratio against an adaptive threshold.
    Weight,
}

impl Placement {
    pub const ALL: [Placement; 4] =
        [Placement::Homogeneous, Placement::CritAware, Placement::CritPtt, Placement::Weight];

    pub const fn name(self) -> &'static str {
        match self {
            Placement::Homogeneous => "homogeneous",
            Placement::CritAware => "crit-aware",
            Placement::CritPtt => "crit-ptt",
            Placement::Weight => "weight",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Placement::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(alloc::format!("unknown placement policy `{s}`")))
    }
}

/// How history-based molding compares a candidate width with the current one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum HistoryComparator {
    /// `time(w) * w < time(current)`.
    #[default]
    Literal,
    /// `time(w) * w < time(current) * current`.
    CostSymmetric,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PolicyConfig {
    pub placement: Placement,
    pub molding: bool,
    pub initial_threshold: f64,
    pub threshold_history_weight: f64,
    /// Weight of the old value in the PTT update.
    pub ptt_history_weight: f64,
    pub comparator: HistoryComparator,
    pub big_cores: Vec<usize>,
    pub little_cores: Vec<usize>,
}

impl PolicyConfig {
    /// Defaults with the core split taken from the machine model.
    pub fn new(placement: Placement, molding: bool, model: &MachineModel) -> Self {
        Self {
            placement,
            molding,
            initial_threshold: DEFAULT_THRESHOLD,
            threshold_history_weight: DEFAULT_THRESHOLD_HISTORY,
            ptt_history_weight: EWMA_OLD_WEIGHT,
            comparator: HistoryComparator::Literal,
            big_cores: model.big_cores(),
            little_cores: model.little_cores(),
        }
    }

    /// `crit-ptt`, `weight+mold`, ...
    pub fn label(&self) -> String {
        if self.molding {
            alloc::format!("{}+mold", self.placement)
        } else {
            String::from(self.placement.name())
        }
    }

    pub fn validate(&self, n_cores: usize) -> Result<()> {
        if !(self.initial_threshold > 0.0 && self.initial_threshold.is_finite()) {
            return Err(Error::config("threshold must be positive"));
        }
        if !(self.threshold_history_weight >= 0.0) {
            return Err(Error::config("threshold history weight must be non-negative"));
        }
        if !(self.ptt_history_weight >= 0.0 && self.ptt_history_weight.is_finite()) {
            return Err(Error::config("PTT history weight must be non-negative"));
        }
        let mut seen = alloc::vec![false; n_cores];
        for &c in self.big_cores.iter().chain(&self.little_cores) {
            match seen.get_mut(c) {
                None => return Err(Error::UnknownCore(c)),
                Some(true) => return Err(Error::config("big and LITTLE core sets overlap")),
                Some(s) => *s = true,
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::config("big and LITTLE core sets must cover every core"));
        }
        if matches!(self.placement, Placement::CritAware | Placement::Weight)
            && (self.big_cores.is_empty() || self.little_cores.is_empty())
        {
            return Err(Error::config("this policy needs non-empty big and LITTLE core sets"));
        }
        Ok(())
    }
}

/// `(weight + history * old) / (history + 1)`.
pub fn threshold_update(weight: f64, old: f64, history: f64) -> f64 {
    (weight + history * old) / (history + 1.0)
}

/// Adaptive weight threshold, stored as `f64` bits.
#[derive(Debug)]
pub struct Threshold(AtomicU64);

impl Threshold {
    pub fn new(v: f64) -> Self {
        Self(AtomicU64::new(v.to_bits()))
    }

    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    /// Folds `weight` in and returns `(old, new)`.
    pub fn update(&self, weight: f64, history: f64) -> (f64, f64) {
        let prev = self
            .0
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |bits| {
                Some(threshold_update(weight, f64::from_bits(bits), history).to_bits())
            })
            .unwrap();
        let old = f64::from_bits(prev);
        (old, threshold_update(weight, old, history))
    }
}

/// Multiset of the criticalities of scheduled-or-running TAOs, with its max.
#[derive(Debug)]
pub struct CritTracker {
    counts: Vec<AtomicU32>,
    max: AtomicU32,
}

impl CritTracker {
    pub fn new(max_criticality: u32) -> Self {
        Self {
            counts: (0..=max_criticality).map(|_| AtomicU32::new(0)).collect(),
            max: AtomicU32::new(0),
        }
    }

    /// 0 when nothing is in flight.
    pub fn max(&self) -> u32 {
        self.max.load(Ordering::Acquire)
    }

    pub fn schedule(&self, crit: u32) {
        self.counts[crit as usize].fetch_add(1, Ordering::AcqRel);
        self.max.fetch_max(crit, Ordering::AcqRel);
    }

    pub fn complete(&self, crit: u32) {
        let before = self.counts[crit as usize].fetch_sub(1, Ordering::AcqRel);
        debug_assert!(before > 0, "completing criticality {crit} that was never scheduled");
        if before == 1 && self.max() == crit {
            let lower = (0..crit as usize)
                .rev()
                .find(|&c| self.counts[c].load(Ordering::Acquire) > 0)
                .unwrap_or(0) as u32;
            // Lose the race quietly if a higher value was scheduled meanwhile.
            let _ = self.max.compare_exchange(crit, lower, Ordering::AcqRel, Ordering::Acquire);
        }
    }
}

/// What the runtime can tell a molding decision about current occupancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadView {
    /// Sum of the widths of scheduled-or-running TAOs.
    pub system_load: usize,
    pub n_cores: usize,
    /// Unreserved cores in the target core's cluster.
    pub cluster_idle: usize,
    pub cluster_size: usize,
}

fn random_of<R: Rng + ?Sized>(cores: &[usize], rng: &mut R) -> Result<usize> {
    cores
        .choose(rng)
        .copied()
        .ok_or_else(|| Error::config("empty core set"))
}

/// Critical (`crit >= max_running`) → random big core, else random LITTLE core.
pub fn place_crit_aware<R: Rng + ?Sized>(
    criticality: u32,
    max_running: u32,
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<usize> {
    if criticality >= max_running {
        random_of(&cfg.big_cores, rng)
    } else {
        random_of(&cfg.little_cores, rng)
    }
}

/// Critical → fastest measured leader at `width`, random core while the
/// column is cold; non-critical → random core.
pub fn place_crit_ptt<R: Rng + ?Sized>(
    criticality: u32,
    max_running: u32,
    width: usize,
    ptt: &PttTable,
    rng: &mut R,
) -> usize {
    let best = if criticality >= max_running { ptt.best_core_for_width(width) } else { None };
    best.unwrap_or_else(|| rng.gen_range(0..ptt.n_cores()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightDecision {
    pub core: usize,
    pub weight: Option<f64>,
    /// Threshold after this decision.
    pub threshold: f64,
}

/// Mean LITTLE time over mean big time at `width`, falling back to width 1.
pub fn measured_weight(ptt: &PttTable, cfg: &PolicyConfig, width: usize) -> Option<f64> {
    let at = |w| {
        let big = ptt.mean_time(&cfg.big_cores, w).unwrap_or(0.0);
        let little = ptt.mean_time(&cfg.little_cores, w).unwrap_or(0.0);
        weight(big, little)
    };
    at(width).or_else(|| if width != 1 { at(1) } else { None })
}

/// `weight > threshold` → random big core, else random LITTLE core; the
/// threshold then moves toward the weight. Cold tables explore uniformly
/// and leave the threshold alone.
pub fn place_weight<R: Rng + ?Sized>(
    width: usize,
    ptt: &PttTable,
    cfg: &PolicyConfig,
    threshold: &Threshold,
    rng: &mut R,
) -> Result<WeightDecision> {
    match measured_weight(ptt, cfg, width) {
        None => Ok(WeightDecision {
            core: rng.gen_range(0..ptt.n_cores()),
            weight: None,
            threshold: threshold.get(),
        }),
        Some(w) => {
            let current = threshold.get();
            let core = if w > current {
                random_of(&cfg.big_cores, rng)?
            } else {
                random_of(&cfg.little_cores, rng)?
            };
            let (_, new) = threshold.update(w, cfg.threshold_history_weight);
            Ok(WeightDecision { core, weight: Some(w), threshold: new })
        }
    }
}

fn largest_pow2_at_most(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

/// New width for a TAO about to be queued on `target_core`.
///
/// With spare capacity (`system_load < n_cores`) the width grows to the
/// largest power of two that fits the idle cores of the target cluster.
/// Otherwise the PTT decides: the candidate width with the smallest
/// `time(w) * w` wins if that beats the current width's time (or cost, with
/// [`HistoryComparator::CostSymmetric`]). Unmeasured cells never win, so a
/// cold table under full load leaves the width unchanged.
pub fn mold_width(
    width: usize,
    load: &LoadView,
    ptt: &PttTable,
    target_core: usize,
    comparator: HistoryComparator,
) -> usize {
    let max_w = largest_pow2_at_most(load.cluster_size.max(1));
    let width = width.min(max_w);
    if load.system_load < load.n_cores {
        let slack = (load.n_cores - load.system_load)
            .min(load.cluster_idle)
            .min(load.cluster_size);
        return width.max(largest_pow2_at_most(slack));
    }
    let time_at = |w: usize| leader_core(target_core, w).map_or(0.0, |l| ptt.get(l, w));
    let current = time_at(width);
    if current == 0.0 {
        return width;
    }
    let bound = match comparator {
        HistoryComparator::Literal => current,
        HistoryComparator::CostSymmetric => current * width as f64,
    };
    let mut best: Option<(usize, f64)> = None;
    let mut w = 1;
    while w <= max_w {
        let t = time_at(w);
        let cost = t * w as f64;
        if w != width && t > 0.0 && cost < bound && best.is_none_or(|(_, b)| cost < b) {
            best = Some((w, cost));
        }
        w *= 2;
    }
    best.map_or(width, |(w, _)| w)
}

/// Outcome of one wakeup, kept in the run log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WakeupDecision {
    pub tao: u32,
    pub target_core: usize,
    pub width: usize,
    pub criticality: u32,
    pub max_running_crit: u32,
    /// Set by the criticality policies.
    pub critical: Option<bool>,
    pub weight: Option<f64>,
}

/// Policy configuration plus the state it shares across workers.
#[derive(Debug)]
pub struct PolicyEngine {
    cfg: PolicyConfig,
    threshold: Threshold,
    load: AtomicUsize,
    crit: CritTracker,
    n_cores: usize,
    cluster_size_of: Vec<usize>,
}

impl PolicyEngine {
    pub fn new(cfg: PolicyConfig, model: &MachineModel, max_criticality: u32) -> Result<Self> {
        let n_cores = model.n_cores();
        cfg.validate(n_cores)?;
        Ok(Self {
            threshold: Threshold::new(cfg.initial_threshold),
            load: AtomicUsize::new(0),
            crit: CritTracker::new(max_criticality),
            n_cores,
            cluster_size_of: (0..n_cores).map(|c| model.max_width_at(c)).collect(),
            cfg,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.get()
    }

    pub fn system_load(&self) -> usize {
        self.load.load(Ordering::Acquire)
    }

    pub fn max_running_crit(&self) -> u32 {
        self.crit.max()
    }

    /// Widest width a TAO may run at when dispatched from `core`.
    pub fn clamp_width(&self, width: usize, core: usize) -> usize {
        width.min(self.cluster_size_of[core])
    }

    /// Accounts for a root queued at startup; roots run at their hint.
    pub fn schedule_root(&self, node: &TaoNode, core: usize) -> usize {
        let width = self.clamp_width(node.resource_hint, core);
        self.crit.schedule(node.criticality);
        self.load.fetch_add(width, Ordering::AcqRel);
        width
    }

    /// Picks the target queue and width for a TAO whose last predecessor
    /// just committed on `committer`. `ordinal` counts the TAOs woken by
    /// this commit so far; `cluster_idle` reports unreserved cores in the
    /// cluster of a core.
    pub fn on_wakeup<R: Rng + ?Sized>(
        &self,
        node: &TaoNode,
        ordinal: usize,
        committer: usize,
        ptt: &PttSet,
        cluster_idle: impl Fn(usize) -> usize,
        rng: &mut R,
    ) -> Result<WakeupDecision> {
        let max_running = self.crit.max();
        let crit = node.criticality;
        let table = ptt.table(node.task_type);
        let mut critical = None;
        let mut weight = None;
        let target = match self.cfg.placement {
            Placement::Homogeneous => {
                if ordinal == 0 {
                    committer
                } else {
                    rng.gen_range(0..self.n_cores)
                }
            }
            Placement::CritAware => {
                critical = Some(crit >= max_running);
                place_crit_aware(crit, max_running, &self.cfg, rng)?
            }
            Placement::CritPtt => {
                critical = Some(crit >= max_running);
                place_crit_ptt(crit, max_running, node.resource_hint, table, rng)
            }
            Placement::Weight => {
                let d = place_weight(node.resource_hint, table, &self.cfg, &self.threshold, rng)?;
                weight = d.weight;
                d.core
            }
        };
        let mut width = self.clamp_width(node.resource_hint, target);
        if self.cfg.molding {
            let view = LoadView {
                system_load: self.system_load(),
                n_cores: self.n_cores,
                cluster_idle: cluster_idle(target),
                cluster_size: self.cluster_size_of[target],
            };
            width = mold_width(width, &view, table, target, self.cfg.comparator);
        }
        self.crit.schedule(crit);
        self.load.fetch_add(width, Ordering::AcqRel);
        Ok(WakeupDecision {
            tao: node.id,
            target_core: target,
            width,
            criticality: crit,
            max_running_crit: max_running,
            critical,
            weight,
        })
    }

    /// Removes a finished TAO (that ran at `width`) from load and criticality.
    pub fn on_complete(&self, node: &TaoNode, width: usize) {
        self.crit.complete(node.criticality);
        let before = self.load.fetch_sub(width, Ordering::AcqRel);
        debug_assert!(before >= width, "load underflow");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(placement: Placement) -> PolicyConfig {
        PolicyConfig::new(placement, false, &MachineModel::hikey960_like())
    }

    fn full_load() -> LoadView {
        LoadView { system_load: 8, n_cores: 8, cluster_idle: 0, cluster_size: 4 }
    }

    #[test]
    fn crit_aware_rule() {
        let c = cfg(Placement::CritAware);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(c.big_cores.contains(&place_crit_aware(9, 7, &c, &mut rng).unwrap()));
            assert!(c.little_cores.contains(&place_crit_aware(2, 7, &c, &mut rng).unwrap()));
            assert!(c.big_cores.contains(&place_crit_aware(7, 7, &c, &mut rng).unwrap()));
        }
        let mut empty = c.clone();
        empty.big_cores.clear();
        assert!(place_crit_aware(9, 7, &empty, &mut rng).is_err());
    }

    #[test]
    fn crit_ptt_uses_table_when_warm() {
        let t = PttTable::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c in 0..8 {
            t.record_time(c, 1, 100.0 + c as f64).unwrap();
        }
        t.record_time(1, 1, 10.0).unwrap();
        t.record_time(1, 1, 10.0).unwrap();
        assert_eq!(place_crit_ptt(5, 5, 1, &t, &mut rng), 1);
        let cold = PttTable::new(8);
        assert!(place_crit_ptt(5, 5, 1, &cold, &mut rng) < 8);
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold_update(2.4, 1.5, 6.0) - 11.4 / 7.0).abs() < 1e-15);
        assert!((threshold_update(1.0, 1.5, 6.0) - 10.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn weight_examples() {
        let c = cfg(Placement::Weight);
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        let t = PttTable::new(8);
        t.record_time(4, 1, 100.0).unwrap();
        t.record_time(0, 1, 240.0).unwrap();
        let th = Threshold::new(1.5);
        let d = place_weight(1, &t, &c, &th, &mut rng).unwrap();
        assert!(c.big_cores.contains(&d.core));
        assert!((d.weight.unwrap() - 2.4).abs() < 1e-12);
        assert!((d.threshold - (2.4 + 9.0) / 7.0).abs() < 1e-12);

        let t = PttTable::new(8);
        t.record_time(4, 1, 100.0).unwrap();
        t.record_time(0, 1, 100.0).unwrap();
        let th = Threshold::new(1.5);
        let d = place_weight(1, &t, &c, &th, &mut rng).unwrap();
        assert!(c.little_cores.contains(&d.core));
        assert!((th.get() - 10.0 / 7.0).abs() < 1e-12);

        let th = Threshold::new(1.5);
        let d = place_weight(1, &PttTable::new(8), &c, &th, &mut rng).unwrap();
        assert_eq!((d.weight, th.get()), (None, 1.5));
    }

    #[test]
    fn weight_falls_back_to_width_one() {
        let c = cfg(Placement::Weight);
        let t = PttTable::new(8);
        t.record_time(4, 1, 100.0).unwrap();
        t.record_time(0, 1, 200.0).unwrap();
        assert_eq!(measured_weight(&t, &c, 4), Some(2.0));
        t.record_time(4, 4, 50.0).unwrap();
        t.record_time(0, 4, 60.0).unwrap();
        assert_eq!(measured_weight(&t, &c, 4), Some(1.2));
    }

    #[test]
    fn load_based_molding_fills_idle_cluster() {
        let t = PttTable::new(8);
        let view = LoadView { system_load: 2, n_cores: 8, cluster_idle: 4, cluster_size: 4 };
        assert_eq!(mold_width(1, &view, &t, 5, HistoryComparator::Literal), 4);
        let view = LoadView { system_load: 5, n_cores: 8, cluster_idle: 3, cluster_size: 4 };
        assert_eq!(mold_width(1, &view, &t, 5, HistoryComparator::Literal), 2);
        // never shrinks
        assert_eq!(mold_width(4, &view, &t, 5, HistoryComparator::Literal), 4);
    }

    #[test]
    fn history_molding_examples() {
        let t = PttTable::new(8);
        t.record_time(4, 1, 100.0).unwrap();
        t.record_time(4, 4, 20.0).unwrap();
        assert_eq!(mold_width(1, &full_load(), &t, 4, HistoryComparator::Literal), 4);

        let t = PttTable::new(8);
        t.record_time(4, 1, 100.0).unwrap();
        t.record_time(4, 4, 30.0).unwrap();
        assert_eq!(mold_width(1, &full_load(), &t, 4, HistoryComparator::Literal), 1);
    }

    #[test]
    fn comparators_differ_when_shrinking() {
        // time(1) = 90 vs time(4) = 30: literal needs 90 < 30, symmetric 90 < 120
        let t = PttTable::new(8);
        t.record_time(4, 1, 90.0).unwrap();
        t.record_time(4, 4, 30.0).unwrap();
        assert_eq!(mold_width(4, &full_load(), &t, 4, HistoryComparator::Literal), 4);
        assert_eq!(mold_width(4, &full_load(), &t, 4, HistoryComparator::CostSymmetric), 1);
    }

    #[test]
    fn cold_table_full_load_is_identity() {
        let t = PttTable::new(8);
        for w in [1, 2, 4] {
            assert_eq!(mold_width(w, &full_load(), &t, 6, HistoryComparator::Literal), w);
        }
    }

    #[test]
    fn crit_tracker_max() {
        let tr = CritTracker::new(10);
        assert_eq!(tr.max(), 0);
        tr.schedule(3);
        tr.schedule(7);
        tr.schedule(7);
        assert_eq!(tr.max(), 7);
        tr.complete(7);
        assert_eq!(tr.max(), 7);
        tr.complete(7);
        assert_eq!(tr.max(), 3);
        tr.complete(3);
        assert_eq!(tr.max(), 0);
    }

    #[test]
    fn config_validation() {
        let m = MachineModel::hikey960_like();
        let mut c = PolicyConfig::new(Placement::Weight, true, &m);
        c.validate(8).unwrap();
        assert_eq!(c.label(), "weight+mold");
        c.big_cores.push(0);
        assert!(c.validate(8).is_err());
        let mut c = PolicyConfig::new(Placement::Weight, true, &m);
        c.little_cores.pop();
        assert!(c.validate(8).is_err());
        let mut c = PolicyConfig::new(Placement::Homogeneous, false, &m);
        c.initial_threshold = 0.0;
        assert!(c.validate(8).is_err());
        assert_eq!("crit-ptt".parse::<Placement>().unwrap(), Placement::CritPtt);
        assert!("random".parse::<Placement>().is_err());
    }

    #[test]
    fn homogeneous_keeps_first_wakeup_local() {
        let m = MachineModel::hikey960_like();
        let engine = PolicyEngine::new(PolicyConfig::new(Placement::Homogeneous, false, &m), &m, 4).unwrap();
        let ptt = PttSet::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let node = TaoNode {
            id: 0,
            task_type: crate::TaskType::Sort,
            work: Default::default(),
            resource_hint: 4,
            criticality: 2,
            successors: Vec::new(),
            predecessors: 1,
        };
        let d = engine.on_wakeup(&node, 0, 6, &ptt, |_| 4, &mut rng).unwrap();
        assert_eq!((d.target_core, d.width), (6, 4));
        assert_eq!(engine.system_load(), 4);
        assert_eq!(engine.max_running_crit(), 2);
        engine.on_complete(&node, 4);
        assert_eq!((engine.system_load(), engine.max_running_crit()), (0, 0));
    }
}
