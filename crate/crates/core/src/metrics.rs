use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{TaoId, TaskType};
use crate::policies::WakeupDecision;

/// One executed TAO. Times are nanoseconds since the start of the run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub tao: TaoId,
    pub task_type: TaskType,
    pub leader: usize,
    pub width: usize,
    pub start_ns: u64,
    pub end_ns: u64,
    /// Workers that took part in the TAO's internal work.
    pub participants: usize,
    /// Worker that ran commit-and-wakeup.
    pub committer: usize,
    /// Row of the PTT that received the elapsed time.
    pub ptt_row: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub policy: String,
    pub node_count: usize,
    pub makespan_ns: u64,
    pub busy_ns: Vec<u64>,
    pub idle_ns: Vec<u64>,
    pub steal_attempts: u64,
    pub steal_successes: u64,
    /// In completion order.
    pub trace: Vec<TraceEntry>,
    /// In wakeup order; roots are not included.
    pub wakeups: Vec<WakeupDecision>,
    pub final_threshold: f64,
}

impl RunMetrics {
    /// TAOs per second; 0 for an empty run.
    pub fn throughput(&self) -> f64 {
        if self.makespan_ns == 0 {
            0.0
        } else {
            self.node_count as f64 / (self.makespan_ns as f64 * 1e-9)
        }
    }

    pub fn makespan_us(&self) -> f64 {
        self.makespan_ns as f64 / 1000.0
    }

    pub fn n_cores(&self) -> usize {
        self.busy_ns.len()
    }
}
