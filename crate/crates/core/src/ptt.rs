//! Performance trace table.
//!
//! One table per task type, one row per core, one column per power-of-two
//! width. A cell holds the EWMA of measured execution times in microseconds;
//! `0.0` means the configuration has never been measured. Only the leader
//! of a place writes, and it writes its own row, so each row has a single
//! writer. Every row sits in its own cache line and every cell is one atomic
//! word, so concurrent readers see a possibly stale but never torn value.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::graph::TaskType;
use crate::{Error, Result};

/// Widths 1, 2, 4, ..., 128.
pub const MAX_COLUMNS: usize = 8;

/// Weight of the old value in the EWMA: `(4 * old + new) / 5`.
pub const EWMA_OLD_WEIGHT: f64 = 4.0;

/// Column index of a width (`log2(width)`).
pub fn width_index(width: usize) -> Result<usize> {
    if width == 0 || !width.is_power_of_two() {
        return Err(Error::UnsupportedWidth(width));
    }
    let idx = width.trailing_zeros() as usize;
    if idx >= MAX_COLUMNS {
        return Err(Error::UnsupportedWidth(width));
    }
    Ok(idx)
}

/// Leader of the place of `width` cores containing `core`:
/// `floor(core / width) * width`.
pub fn leader_core(core: usize, width: usize) -> Result<usize> {
    width_index(width)?;
    Ok(core / width * width)
}

/// The table's update rule. An unmeasured (zero) cell takes the first
/// measurement as is.
pub fn ewma(old: f64, new: f64) -> f64 {
    ewma_with(old, new, EWMA_OLD_WEIGHT)
}

/// `(history * old + new) / (history + 1)`, with the same zero rule.
pub fn ewma_with(old: f64, new: f64, history: f64) -> f64 {
    if old == 0.0 {
        new
    } else {
        (history * old + new) / (history + 1.0)
    }
}

/// LITTLE time over big time; `None` while either side is unmeasured.
pub fn weight(big_time: f64, little_time: f64) -> Option<f64> {
    if big_time > 0.0 && little_time > 0.0 {
        Some(little_time / big_time)
    } else {
        None
    }
}

#[cfg_attr(target_arch = "aarch64", repr(align(128)))]
#[cfg_attr(not(target_arch = "aarch64"), repr(align(64)))]
#[derive(Debug, Default)]
struct Row([AtomicU64; MAX_COLUMNS]);

#[derive(Debug)]
pub struct PttTable {
    rows: Vec<Row>,
    columns: usize,
    history: f64,
}

impl PttTable {
    /// `floor(log2(n_cores)) + 1` columns, so 8 cores get widths 1..=8.
    pub fn new(n_cores: usize) -> Self {
        Self::with_history(n_cores, EWMA_OLD_WEIGHT)
    }

    /// A table whose update rule weighs the old value by `history`.
    pub fn with_history(n_cores: usize, history: f64) -> Self {
        assert!(n_cores > 0, "a PTT needs at least one core");
        let columns = ((usize::BITS - n_cores.leading_zeros()) as usize).min(MAX_COLUMNS);
        Self { rows: (0..n_cores).map(|_| Row::default()).collect(), columns, history }
    }

    pub fn n_cores(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn widths(&self) -> impl Iterator<Item = usize> {
        (0..self.columns).map(|i| 1usize << i)
    }

    fn cell(&self, core: usize, width: usize) -> Option<&AtomicU64> {
        let col = width_index(width).ok().filter(|&c| c < self.columns)?;
        self.rows.get(core).map(|r| &r.0[col])
    }

    fn check_leader(&self, core: usize, width: usize) -> Result<&AtomicU64> {
        let cell = self.cell(core, width).ok_or({
            if core >= self.rows.len() {
                Error::UnknownCore(core)
            } else {
                Error::UnsupportedWidth(width)
            }
        })?;
        if !core.is_multiple_of(width) {
            return Err(Error::NotLeader { core, width });
        }
        Ok(cell)
    }

    /// Recorded time for `(core, width)`, `0.0` when unmeasured or when the
    /// coordinates are outside the table.
    pub fn get(&self, core: usize, width: usize) -> f64 {
        self.cell(core, width)
            .map(|c| f64::from_bits(c.load(Ordering::Relaxed)))
            .unwrap_or(0.0)
    }

    /// Folds a measurement into the leader's cell and returns the new value.
    pub fn record_time(&self, leader: usize, width: usize, measured_us: f64) -> Result<f64> {
        if !(measured_us > 0.0 && measured_us.is_finite()) {
            return Err(Error::InvalidMeasurement);
        }
        let cell = self.check_leader(leader, width)?;
        let old = f64::from_bits(cell.load(Ordering::Relaxed));
        let new = ewma_with(old, measured_us, self.history);
        cell.store(new.to_bits(), Ordering::Relaxed);
        Ok(new)
    }

    /// Overwrites a cell, e.g. when warm-starting from a previous dump.
    pub fn preload(&self, leader: usize, width: usize, value_us: f64) -> Result<()> {
        if !(value_us >= 0.0 && value_us.is_finite()) {
            return Err(Error::InvalidMeasurement);
        }
        self.check_leader(leader, width)?.store(value_us.to_bits(), Ordering::Relaxed);
        Ok(())
    }

    /// Valid leaders for `width`: `0, width, 2 * width, ...`.
    pub fn leaders(&self, width: usize) -> impl Iterator<Item = usize> {
        let n = self.rows.len();
        (0..n).step_by(width.max(1))
    }

    /// Leader with the smallest measured time at `width`; lowest id wins ties.
    pub fn best_core_for_width(&self, width: usize) -> Option<usize> {
        width_index(width).ok().filter(|&c| c < self.columns)?;
        let mut best: Option<(usize, f64)> = None;
        for core in self.leaders(width) {
            let t = self.get(core, width);
            if t > 0.0 && best.is_none_or(|(_, b)| t < b) {
                best = Some((core, t));
            }
        }
        best.map(|(c, _)| c)
    }

    /// Mean of the measured cells at `width` over the given cores' leaders.
    pub fn mean_time(&self, cores: &[usize], width: usize) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for &c in cores.iter().filter(|&&c| c % width.max(1) == 0) {
            let t = self.get(c, width);
            if t > 0.0 {
                sum += t;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// All measured cells as `(core, width, ewma_us)`.
    pub fn measured(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for core in 0..self.rows.len() {
            for width in self.widths() {
                let t = self.get(core, width);
                if t > 0.0 {
                    out.push((core, width, t));
                }
            }
        }
        out
    }
}

/// One [`PttTable`] per task type.
#[derive(Debug)]
pub struct PttSet {
    tables: Vec<PttTable>,
}

impl PttSet {
    pub fn new(n_cores: usize) -> Self {
        Self::with_history(n_cores, EWMA_OLD_WEIGHT)
    }

    pub fn with_history(n_cores: usize, history: f64) -> Self {
        Self { tables: TaskType::ALL.iter().map(|_| PttTable::with_history(n_cores, history)).collect() }
    }

    pub fn table(&self, t: TaskType) -> &PttTable {
        &self.tables[t.index()]
    }

    pub fn n_cores(&self) -> usize {
        self.tables[0].n_cores()
    }
}
