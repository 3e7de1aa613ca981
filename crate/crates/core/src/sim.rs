//! Deterministic discrete-event backend.
//!
//! The simulator mirrors the threaded runtime's structure: each core owns a
//! ready deque (owner pops the newest, thieves take the oldest) and a FIFO
//! assembly queue of TAOs whose place it belongs to. A free core first
//! joins the head of its assembly queue, then pops its ready deque, then
//! tries one random victim; a failed steal costs `steal_latency_ns` before
//! the next look at the assembly queue. Cores park when no ready deque holds
//! work and are woken when some does.
//!
//! TAO progress is fluid. A TAO's work is a fraction in `[0, 1]` drained at
//! a rate set by the machine model for its cluster and number of active
//! participants; rates are recomputed whenever the set of running TAOs or
//! their participants changes, which is how memory bandwidth sharing is
//! modelled. Time is kept in integer nanoseconds so busy and idle time
//! add up to `n_cores * makespan` exactly.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{PendingCounters, TaoDag, TaoId};
use crate::machine::MachineModel;
use crate::metrics::{RunMetrics, TraceEntry};
use crate::place::{Place, PlaceAllocator};
use crate::policies::{PolicyConfig, PolicyEngine};
use crate::ptt::PttSet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Cost of one failed steal attempt.
    pub steal_latency_ns: u64,
    /// Delay before a parked core reacts to new work.
    pub wake_latency_ns: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { seed: 0, steal_latency_ns: 2_000, wake_latency_ns: 1_000 }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Wake { core: usize, gen: u64 },
    Finish { tao: TaoId, version: u32 },
}

/// Ordered by time, then by insertion sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: u64,
    seq: u64,
    kind: EventKind,
}

#[derive(Debug, Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: u64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(Event { time, seq: self.seq, kind }));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

#[derive(Debug, Default)]
struct CoreState {
    ready: VecDeque<TaoId>,
    assembly: VecDeque<TaoId>,
    current: Option<TaoId>,
    parked: bool,
    wake_gen: u64,
    wake_at: Option<u64>,
    busy_ns: u64,
    idle_ns: u64,
    since: u64,
}

#[derive(Debug)]
struct TaoState {
    /// Width it runs at (after clamping at dispatch).
    width: usize,
    /// Width counted in the policy's load.
    load_width: usize,
    place: Option<Place>,
    cluster: usize,
    remaining: f64,
    rate: f64,
    streaming: bool,
    version: u32,
    participants: Vec<usize>,
    start: Option<u64>,
    done: bool,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub metrics: RunMetrics,
    pub ptt: PttSet,
}

pub struct Simulator<'a> {
    dag: &'a TaoDag,
    model: &'a MachineModel,
    cfg: SimConfig,
    policy: PolicyEngine,
    ptt: PttSet,
    alloc: PlaceAllocator,
    pending: PendingCounters,
    rng: ChaCha8Rng,
    events: EventQueue,
    now: u64,
    last_progress: u64,
    cores: Vec<CoreState>,
    taos: Vec<TaoState>,
    running: Vec<TaoId>,
    ready_total: usize,
    rates_dirty: bool,
    completed: usize,
    metrics: RunMetrics,
}

impl<'a> Simulator<'a> {
    pub fn new(dag: &'a TaoDag, model: &'a MachineModel, policy: PolicyConfig, cfg: SimConfig) -> Result<Self> {
        model.validate()?;
        let n = model.n_cores();
        let label = policy.label();
        let history = policy.ptt_history_weight;
        let policy = PolicyEngine::new(policy, model, dag.critical_path_len())?;
        for node in dag.nodes() {
            model.profile(node.task_type)?;
        }
        let taos = dag
            .nodes()
            .iter()
            .map(|node| TaoState {
                width: node.resource_hint,
                load_width: node.resource_hint,
                place: None,
                cluster: 0,
                remaining: 1.0,
                rate: 0.0,
                streaming: false,
                version: 0,
                participants: Vec::new(),
                start: None,
                done: false,
            })
            .collect();
        Ok(Self {
            dag,
            model,
            policy,
            ptt: PttSet::with_history(n, history),
            alloc: PlaceAllocator::new(model),
            pending: dag.pending_counters(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            events: EventQueue::default(),
            now: 0,
            last_progress: 0,
            cores: (0..n).map(|_| CoreState::default()).collect(),
            taos,
            running: Vec::new(),
            ready_total: 0,
            rates_dirty: false,
            completed: 0,
            metrics: RunMetrics {
                policy: label,
                node_count: dag.node_count(),
                busy_ns: vec![0; n],
                idle_ns: vec![0; n],
                ..RunMetrics::default()
            },
        })
    }

    /// Starts from an existing table instead of a cold one.
    pub fn with_ptt(mut self, ptt: PttSet) -> Result<Self> {
        if ptt.n_cores() != self.cores.len() {
            return Err(Error::config("PTT core count does not match the machine model"));
        }
        self.ptt = ptt;
        Ok(self)
    }

    pub fn run(mut self) -> Result<SimOutcome> {
        let n = self.cores.len();
        for (i, &root) in self.dag.roots().iter().enumerate() {
            let core = i % n;
            let width = self.policy.schedule_root(self.dag.node(root), core);
            let t = &mut self.taos[root as usize];
            t.width = width;
            t.load_width = width;
            self.cores[core].ready.push_back(root);
            self.ready_total += 1;
        }
        for c in 0..n {
            self.schedule_wake(c, 0);
        }

        while self.completed < self.taos.len() {
            let Some(ev) = self.events.pop() else { break };
            self.advance_to(ev.time);
            match ev.kind {
                EventKind::Wake { core, gen } => {
                    let c = &mut self.cores[core];
                    if c.wake_gen != gen {
                        continue;
                    }
                    c.wake_at = None;
                    if c.current.is_none() {
                        c.parked = false;
                        self.worker_step(core)?;
                    }
                }
                EventKind::Finish { tao, version } => {
                    if self.taos[tao as usize].version == version && !self.taos[tao as usize].done {
                        self.complete(tao)?;
                    }
                }
            }
            if self.rates_dirty {
                self.recompute_rates()?;
            }
        }
        if self.completed < self.taos.len() {
            return Err(Error::Deadlock { completed: self.completed, total: self.taos.len() });
        }

        let makespan = self.metrics.makespan_ns;
        for (i, c) in self.cores.iter().enumerate() {
            self.metrics.busy_ns[i] = c.busy_ns;
            self.metrics.idle_ns[i] = c.idle_ns + (makespan - c.since);
        }
        self.metrics.final_threshold = self.policy.threshold();
        Ok(SimOutcome { metrics: self.metrics, ptt: self.ptt })
    }

    fn advance_to(&mut self, t: u64) {
        debug_assert!(t >= self.now, "simulated clock went backwards");
        let dt = t - self.last_progress;
        if dt > 0 {
            for &id in &self.running {
                let tao = &mut self.taos[id as usize];
                tao.remaining -= tao.rate * dt as f64;
            }
            self.last_progress = t;
        }
        self.now = t;
    }

    fn schedule_wake(&mut self, core: usize, at: u64) {
        let c = &mut self.cores[core];
        if c.wake_at.is_some_and(|t| t <= at) {
            return;
        }
        c.wake_gen += 1;
        c.wake_at = Some(at);
        let gen = c.wake_gen;
        self.events.push(at, EventKind::Wake { core, gen });
    }

    fn worker_step(&mut self, c: usize) -> Result<()> {
        let n = self.cores.len();
        loop {
            while let Some(id) = self.cores[c].assembly.pop_front() {
                if !self.taos[id as usize].done {
                    self.join(c, id);
                    return Ok(());
                }
            }
            if let Some(id) = self.cores[c].ready.pop_back() {
                self.ready_total -= 1;
                self.dispatch(c, id)?;
                continue;
            }
            if self.ready_total == 0 {
                self.cores[c].parked = true;
                return Ok(());
            }
            self.metrics.steal_attempts += 1;
            let v = self.rng.gen_range(0..n - 1);
            let victim = if v >= c { v + 1 } else { v };
            if let Some(id) = self.cores[victim].ready.pop_front() {
                self.ready_total -= 1;
                self.metrics.steal_successes += 1;
                self.dispatch(c, id)?;
                continue;
            }
            self.schedule_wake(c, self.now + self.cfg.steal_latency_ns);
            return Ok(());
        }
    }

    /// Allocates the TAO's place around `c` and queues it on every member.
    fn dispatch(&mut self, c: usize, id: TaoId) -> Result<()> {
        let width = self.policy.clamp_width(self.taos[id as usize].width, c);
        let place = self.alloc.allocate_place(width, c)?;
        let cluster = self.model.cluster_of(c).ok_or(Error::UnknownCore(c))?;
        let tao = &mut self.taos[id as usize];
        tao.width = width;
        tao.place = Some(place);
        tao.cluster = cluster;
        for m in place.member_cores() {
            self.cores[m].assembly.push_back(id);
            if m != c && self.cores[m].current.is_none() {
                self.cores[m].parked = false;
                self.schedule_wake(m, self.now);
            }
        }
        Ok(())
    }

    fn join(&mut self, c: usize, id: TaoId) {
        let now = self.now;
        let core = &mut self.cores[c];
        core.idle_ns += now - core.since;
        core.since = now;
        core.current = Some(id);
        core.parked = false;
        let tao = &mut self.taos[id as usize];
        if tao.start.is_none() {
            tao.start = Some(now);
            self.running.push(id);
        }
        tao.participants.push(c);
        self.rates_dirty = true;
    }

    fn complete(&mut self, id: TaoId) -> Result<()> {
        let now = self.now;
        let node = self.dag.node(id);
        let tao = &mut self.taos[id as usize];
        tao.done = true;
        tao.remaining = 0.0;
        let start = tao.start.expect("finished TAO never started");
        let place = tao.place.expect("finished TAO has no place");
        let participants = core::mem::take(&mut tao.participants);
        let (width, load_width) = (tao.width, tao.load_width);
        self.running.retain(|&r| r != id);

        for &p in &participants {
            let core = &mut self.cores[p];
            core.busy_ns += now - core.since;
            core.since = now;
            core.current = None;
        }
        let committer = *participants.last().expect("finished TAO has no participants");

        // commit-and-wakeup
        self.alloc.release(&place);
        self.policy.on_complete(node, load_width);
        let elapsed_us = (now - start) as f64 / 1000.0;
        self.ptt.table(node.task_type).record_time(place.leader, width, elapsed_us)?;
        self.metrics.trace.push(TraceEntry {
            tao: id,
            task_type: node.task_type,
            leader: place.leader,
            width,
            start_ns: start,
            end_ns: now,
            participants: participants.len(),
            committer,
            ptt_row: place.leader,
        });
        self.completed += 1;
        self.metrics.makespan_ns = now;

        let mut woken = 0;
        for &s in &node.successors {
            if !self.pending.release(s)? {
                continue;
            }
            let alloc = &self.alloc;
            let d = self.policy.on_wakeup(
                self.dag.node(s),
                woken,
                committer,
                &self.ptt,
                |core| alloc.idle_in_cluster_of(core),
                &mut self.rng,
            )?;
            let t = &mut self.taos[s as usize];
            t.width = d.width;
            t.load_width = d.width;
            self.cores[d.target_core].ready.push_back(s);
            self.ready_total += 1;
            self.metrics.wakeups.push(d);
            woken += 1;
        }

        self.schedule_wake(committer, now);
        for &p in &participants {
            self.schedule_wake(p, now);
        }
        if woken > 0 {
            let at = now + self.cfg.wake_latency_ns;
            for c in 0..self.cores.len() {
                if self.cores[c].parked {
                    self.schedule_wake(c, at);
                }
            }
        }
        self.rates_dirty = true;
        Ok(())
    }

    fn recompute_rates(&mut self) -> Result<()> {
        self.rates_dirty = false;
        let model = self.model;
        let mut demand = 0.0;
        for &id in &self.running {
            let tao = &mut self.taos[id as usize];
            let ty = self.dag.node(id).task_type;
            let d = model.bandwidth_demand(ty, tao.cluster, tao.participants.len())?;
            tao.streaming = d > 0.0;
            demand += d;
        }
        let bw_factor = (demand / model.memory_bandwidth_cap).max(1.0);

        let mut cache_factor = vec![1.0; model.clusters.len()];
        if let Some(ci) = model.cache_interference {
            let mut footprint = vec![0.0; model.clusters.len()];
            for &id in &self.running {
                let tao = &self.taos[id as usize];
                if !tao.streaming {
                    footprint[tao.cluster] += model.profile(self.dag.node(id).task_type)?.working_set_bytes;
                }
            }
            for (i, c) in model.clusters.iter().enumerate() {
                if footprint[i] > c.l2_bytes {
                    cache_factor[i] = ci.penalty;
                }
            }
        }

        for &id in &self.running {
            let tao = &mut self.taos[id as usize];
            let ty = self.dag.node(id).task_type;
            let solo_ns = model.solo_time_us(ty, tao.cluster, tao.participants.len())? * 1000.0;
            let stretch = if tao.streaming { bw_factor } else { cache_factor[tao.cluster] };
            tao.rate = 1.0 / (solo_ns * stretch);
            tao.version = tao.version.wrapping_add(1);
            let left = (tao.remaining.max(0.0) / tao.rate).ceil_u64().max(1);
            let (time, version) = (self.now + left, tao.version);
            self.events.push(time, EventKind::Finish { tao: id, version });
        }
        Ok(())
    }
}

trait CeilU64 {
    fn ceil_u64(self) -> u64;
}

impl CeilU64 for f64 {
    fn ceil_u64(self) -> u64 {
        let t = self as u64;
        if (t as f64) < self {
            t + 1
        } else {
            t
        }
    }
}

/// Runs one DAG on the simulator with a cold PTT.
pub fn simulate(dag: &TaoDag, model: &MachineModel, policy: PolicyConfig, cfg: SimConfig) -> Result<SimOutcome> {
    Simulator::new(dag, model, policy, cfg)?.run()
}
