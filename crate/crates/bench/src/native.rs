//! Threaded backend: one worker thread per modelled core.
//!
//! Each worker owns a LIFO deque for TAOs it woke for itself and an inbox
//! that other workers push into when a policy targets it. Thieves take from
//! both. Popping a TAO allocates its place under the only lock in the
//! scheduler and pushes it to the assembly queue of every member core; those
//! workers join as they come around and share the TAO's chunks. The last
//! one out runs commit-and-wakeup. Elapsed times are posted to the place
//! leader, which folds them into its own PTT row.
//!
//! Hosts without heterogeneous cores get heterogeneity by emulation: after
//! each chunk a worker spins for `(max_speed / own_speed - 1)` times the
//! chunk's duration, using the machine model's speed factors.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crossbeam_deque::{Injector, Steal, Stealer, Worker};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taosched_core::metrics::TraceEntry;
use taosched_core::policies::{PolicyEngine, WakeupDecision};
use taosched_core::{MachineModel, Place, PlaceAllocator, PolicyConfig, PttSet, RunMetrics, TaoDag, TaoId, TaskType};

use crate::error::{BenchError, Result};
use crate::kernels::{Job, KernelCheck, KernelSizes};

#[derive(Clone, Debug)]
pub struct NativeConfig {
    pub seed: u64,
    /// `None` uses `min(host cores, model cores)`.
    pub workers: Option<usize>,
    pub sizes: KernelSizes,
    /// Pin worker `i` to host CPU `i` when there are enough CPUs.
    pub pin: bool,
    pub emulate_heterogeneity: bool,
    /// Check every matmul against the naive oracle, not only the first.
    pub check_every_matmul: bool,
    pub timeout: Duration,
}

impl Default for NativeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: None,
            sizes: KernelSizes::default(),
            pin: true,
            emulate_heterogeneity: true,
            check_every_matmul: false,
            timeout: Duration::from_secs(600),
        }
    }
}

/// Totals of the per-TAO kernel checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckCounts {
    pub matmuls_verified: u64,
    pub sorts_verified: u64,
    pub copies_verified: u64,
    pub copy_bytes: u64,
}

#[derive(Debug)]
pub struct NativeOutcome {
    pub metrics: RunMetrics,
    pub ptt: PttSet,
    pub checks: CheckCounts,
    /// The model actually run, after any scaling to the worker count.
    pub model: MachineModel,
}

pub fn host_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// The model and policy to run with `requested` workers on this host.
pub fn fit_to_host(model: &MachineModel, policy: &PolicyConfig, requested: Option<usize>) -> Result<(MachineModel, PolicyConfig)> {
    let host = host_cores();
    let n = match requested {
        Some(0) => return Err(BenchError::format("need at least one worker")),
        Some(n) if n > model.n_cores() => {
            return Err(BenchError::format(format!("{n} workers requested but the model has {} cores", model.n_cores())))
        }
        Some(n) => {
            if n > host {
                warn!("running {n} workers on {host} host cores; timings are oversubscribed");
            }
            n
        }
        None => {
            let n = host.min(model.n_cores());
            if n < model.n_cores() {
                warn!("host has {host} cores but the model has {}; scaling down to {n} workers", model.n_cores());
            }
            n
        }
    };
    if n == model.n_cores() {
        return Ok((model.clone(), policy.clone()));
    }
    let scaled = model.scaled_to(n)?;
    let mut policy = policy.clone();
    policy.big_cores = scaled.big_cores();
    policy.little_cores = scaled.little_cores();
    Ok((scaled, policy))
}

struct Running {
    id: TaoId,
    place: Place,
    load_width: usize,
    job: Job,
    start_ns: AtomicU64,
    active: AtomicUsize,
    joined: AtomicUsize,
    committed: AtomicBool,
}

struct Shared<'a> {
    dag: &'a TaoDag,
    policy: PolicyEngine,
    ptt: PttSet,
    alloc: Mutex<PlaceAllocator>,
    pending: taosched_core::graph::PendingCounters,
    widths: Vec<AtomicUsize>,
    inboxes: Vec<Injector<TaoId>>,
    stealers: Vec<Stealer<TaoId>>,
    assembly: Vec<Mutex<VecDeque<Arc<Running>>>>,
    mail: Vec<Mutex<Vec<(TaskType, usize, f64)>>>,
    /// Per core, per task type.
    inflation: Vec<[f64; 4]>,
    busy_ns: Vec<AtomicU64>,
    completed: AtomicUsize,
    stop: AtomicBool,
    failure: Mutex<Option<BenchError>>,
    trace: Mutex<Vec<TraceEntry>>,
    wakeups: Mutex<Vec<WakeupDecision>>,
    steal_attempts: AtomicU64,
    steal_successes: AtomicU64,
    matmul_checked: AtomicBool,
    checks: Mutex<CheckCounts>,
    cfg: NativeConfig,
    epoch: Instant,
}

impl Shared<'_> {
    fn now_ns(&self) -> u64 {
        self.epoch.elapsed().as_nanos() as u64
    }

    fn fail(&self, e: BenchError) {
        let mut f = self.failure.lock().unwrap();
        if f.is_none() {
            *f = Some(e);
        }
        self.stop.store(true, Ordering::Release);
    }

    fn drain_mail(&self, c: usize) -> Result<()> {
        let items = std::mem::take(&mut *self.mail[c].lock().unwrap());
        for (t, width, us) in items {
            self.ptt.table(t).record_time(c, width, us)?;
        }
        Ok(())
    }

    fn dispatch(&self, c: usize, id: TaoId) -> Result<()> {
        let node = self.dag.node(id);
        let load_width = self.widths[id as usize].load(Ordering::Acquire);
        let width = self.policy.clamp_width(load_width, c);
        let check = node.task_type == TaskType::MatMul
            && (self.cfg.check_every_matmul || !self.matmul_checked.swap(true, Ordering::AcqRel));
        let job = Job::new(node.task_type, &node.work, &self.cfg.sizes, check)?;
        let place = self.alloc.lock().unwrap().allocate_place(width, c)?;
        let r = Arc::new(Running {
            id,
            place,
            load_width,
            job,
            start_ns: AtomicU64::new(u64::MAX),
            active: AtomicUsize::new(0),
            joined: AtomicUsize::new(0),
            committed: AtomicBool::new(false),
        });
        for m in place.member_cores() {
            self.assembly[m].lock().unwrap().push_back(Arc::clone(&r));
        }
        Ok(())
    }

    fn participate(&self, c: usize, r: &Running, local: &Worker<TaoId>, rng: &mut ChaCha8Rng) -> Result<()> {
        if r.committed.load(Ordering::Acquire) {
            return Ok(());
        }
        r.active.fetch_add(1, Ordering::AcqRel);
        r.joined.fetch_add(1, Ordering::AcqRel);
        let t0 = self.now_ns();
        let _ = r.start_ns.compare_exchange(u64::MAX, t0, Ordering::AcqRel, Ordering::Acquire);
        let factor = self.inflation[c][self.dag.node(r.id).task_type.index()];
        r.job.work(|dt| {
            if factor > 1.0 {
                let extra = dt.mul_f64(factor - 1.0);
                let until = Instant::now() + extra;
                while Instant::now() < until {
                    std::hint::spin_loop();
                }
            }
        });
        self.busy_ns[c].fetch_add(self.now_ns() - t0, Ordering::Relaxed);
        let last = r.active.fetch_sub(1, Ordering::AcqRel) == 1;
        if last && r.job.is_complete() && !r.committed.swap(true, Ordering::AcqRel) {
            self.commit(c, r, local, rng)?;
        }
        Ok(())
    }

    fn commit(&self, c: usize, r: &Running, local: &Worker<TaoId>, rng: &mut ChaCha8Rng) -> Result<()> {
        let end = self.now_ns();
        let start = r.start_ns.load(Ordering::Acquire);
        let node = self.dag.node(r.id);
        let check = r.job.verify()?;
        {
            let mut counts = self.checks.lock().unwrap();
            match check {
                KernelCheck::MatMul { verified } => counts.matmuls_verified += u64::from(verified),
                KernelCheck::Sort { .. } => counts.sorts_verified += 1,
                KernelCheck::Copy { bytes } => {
                    counts.copies_verified += 1;
                    counts.copy_bytes += bytes as u64;
                }
                KernelCheck::Synthetic => {}
            }
        }
        self.alloc.lock().unwrap().release(&r.place);
        self.policy.on_complete(node, r.load_width);

        let elapsed_us = ((end - start) as f64 / 1000.0).max(1e-3);
        let leader = r.place.leader;
        if leader == c {
            self.ptt.table(node.task_type).record_time(leader, r.place.width, elapsed_us)?;
        } else {
            self.mail[leader].lock().unwrap().push((node.task_type, r.place.width, elapsed_us));
        }
        self.trace.lock().unwrap().push(TraceEntry {
            tao: r.id,
            task_type: node.task_type,
            leader,
            width: r.place.width,
            start_ns: start,
            end_ns: end,
            participants: r.joined.load(Ordering::Acquire),
            committer: c,
            ptt_row: leader,
        });

        let mut woken = 0;
        for &s in &node.successors {
            if !self.pending.release(s)? {
                continue;
            }
            let d = self.policy.on_wakeup(
                self.dag.node(s),
                woken,
                c,
                &self.ptt,
                |core| self.alloc.lock().unwrap().idle_in_cluster_of(core),
                rng,
            )?;
            self.widths[s as usize].store(d.width, Ordering::Release);
            self.wakeups.lock().unwrap().push(d);
            if d.target_core == c {
                local.push(s);
            } else {
                self.inboxes[d.target_core].push(s);
            }
            woken += 1;
        }
        if self.completed.fetch_add(1, Ordering::AcqRel) + 1 == self.dag.node_count() {
            self.stop.store(true, Ordering::Release);
        }
        Ok(())
    }

    fn steal_from(&self, v: usize) -> Option<TaoId> {
        loop {
            match self.stealers[v].steal() {
                Steal::Success(id) => return Some(id),
                Steal::Retry => continue,
                Steal::Empty => break,
            }
        }
        loop {
            match self.inboxes[v].steal() {
                Steal::Success(id) => return Some(id),
                Steal::Retry => continue,
                Steal::Empty => return None,
            }
        }
    }

    fn worker_loop(&self, c: usize, local: Worker<TaoId>) -> Result<()> {
        let n = self.inboxes.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut idle_rounds = 0u32;
        loop {
            self.drain_mail(c)?;
            if self.stop.load(Ordering::Acquire) {
                return self.drain_mail(c);
            }
            let assembled = self.assembly[c].lock().unwrap().pop_front();
            if let Some(r) = assembled {
                self.participate(c, &r, &local, &mut rng)?;
                idle_rounds = 0;
                continue;
            }
            let own = local.pop().or_else(|| loop {
                match self.inboxes[c].steal() {
                    Steal::Success(id) => break Some(id),
                    Steal::Retry => continue,
                    Steal::Empty => break None,
                }
            });
            if let Some(id) = own {
                self.dispatch(c, id)?;
                idle_rounds = 0;
                continue;
            }
            if n > 1 {
                self.steal_attempts.fetch_add(1, Ordering::Relaxed);
                let v = rng.gen_range(0..n - 1);
                let victim = if v >= c { v + 1 } else { v };
                if let Some(id) = self.steal_from(victim) {
                    self.steal_successes.fetch_add(1, Ordering::Relaxed);
                    self.dispatch(c, id)?;
                    idle_rounds = 0;
                    continue;
                }
            }
            idle_rounds += 1;
            if idle_rounds > 64 {
                std::thread::sleep(Duration::from_micros(20));
            } else {
                std::thread::yield_now();
            }
            if self.epoch.elapsed() > self.cfg.timeout {
                return Err(BenchError::Timeout {
                    completed: self.completed.load(Ordering::Acquire),
                    total: self.dag.node_count(),
                });
            }
        }
    }
}

#[cfg(target_os = "linux")]
fn pin_to(cpu: usize) {
    // SAFETY: cpu_set_t is plain data; the call only reads the set we pass.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu, &mut set);
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            warn!("could not pin worker to CPU {cpu}");
        }
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to(_cpu: usize) {}

fn inflation(model: &MachineModel, emulate: bool) -> Result<Vec<[f64; 4]>> {
    let mut out = vec![[1.0; 4]; model.n_cores()];
    if !emulate {
        return Ok(out);
    }
    for t in TaskType::ALL {
        let p = model.profile(t)?;
        let fastest = p.speed.iter().copied().fold(f64::MIN, f64::max);
        for (core, row) in out.iter_mut().enumerate() {
            let cluster = model.cluster_of(core).ok_or(taosched_core::Error::UnknownCore(core))?;
            row[t.index()] = fastest / p.speed[cluster];
        }
    }
    Ok(out)
}

/// Runs `dag` on real threads. The model is first fitted to the worker
/// count (see [`fit_to_host`]).
pub fn run_native(dag: &TaoDag, model: &MachineModel, policy: PolicyConfig, cfg: &NativeConfig) -> Result<NativeOutcome> {
    let (model, policy) = fit_to_host(model, &policy, cfg.workers)?;
    model.validate()?;
    let n = model.n_cores();
    let label = policy.label();
    let history = policy.ptt_history_weight;
    let engine = PolicyEngine::new(policy, &model, dag.critical_path_len())?;

    let locals: Vec<Worker<TaoId>> = (0..n).map(|_| Worker::new_lifo()).collect();
    let shared = Shared {
        dag,
        ptt: PttSet::with_history(n, history),
        alloc: Mutex::new(PlaceAllocator::new(&model)),
        pending: dag.pending_counters(),
        widths: dag.nodes().iter().map(|node| AtomicUsize::new(node.resource_hint)).collect(),
        inboxes: (0..n).map(|_| Injector::new()).collect(),
        stealers: locals.iter().map(Worker::stealer).collect(),
        assembly: (0..n).map(|_| Mutex::new(VecDeque::new())).collect(),
        mail: (0..n).map(|_| Mutex::new(Vec::new())).collect(),
        inflation: inflation(&model, cfg.emulate_heterogeneity)?,
        busy_ns: (0..n).map(|_| AtomicU64::new(0)).collect(),
        completed: AtomicUsize::new(0),
        stop: AtomicBool::new(dag.is_empty()),
        failure: Mutex::new(None),
        trace: Mutex::new(Vec::with_capacity(dag.node_count())),
        wakeups: Mutex::new(Vec::new()),
        steal_attempts: AtomicU64::new(0),
        steal_successes: AtomicU64::new(0),
        matmul_checked: AtomicBool::new(false),
        checks: Mutex::new(CheckCounts::default()),
        cfg: cfg.clone(),
        epoch: Instant::now(),
        policy: engine,
    };
    for (i, &root) in dag.roots().iter().enumerate() {
        let core = i % n;
        let width = shared.policy.schedule_root(dag.node(root), core);
        shared.widths[root as usize].store(width, Ordering::Release);
        shared.inboxes[core].push(root);
    }

    let pin = cfg.pin && n <= host_cores();
    let start = Instant::now();
    std::thread::scope(|s| {
        for (c, local) in locals.into_iter().enumerate() {
            let shared = &shared;
            std::thread::Builder::new()
                .name(format!("taosched-worker-{c}"))
                .spawn_scoped(s, move || {
                    if pin {
                        pin_to(c);
                    }
                    if let Err(e) = shared.worker_loop(c, local) {
                        shared.fail(e);
                    }
                })
                .expect("failed to spawn worker thread");
        }
    });
    let wall = start.elapsed();

    if let Some(e) = shared.failure.lock().unwrap().take() {
        return Err(e);
    }
    let mut trace = shared.trace.into_inner().unwrap();
    trace.sort_by_key(|e| (e.end_ns, e.tao));
    let makespan_ns = trace.iter().map(|e| e.end_ns).max().unwrap_or(0);
    let busy_ns: Vec<u64> = shared.busy_ns.iter().map(|b| b.load(Ordering::Relaxed)).collect();
    log::debug!("native run of {} TAOs took {wall:?}", dag.node_count());
    let metrics = RunMetrics {
        policy: label,
        node_count: dag.node_count(),
        makespan_ns,
        idle_ns: busy_ns.iter().map(|&b| makespan_ns.saturating_sub(b)).collect(),
        busy_ns,
        steal_attempts: shared.steal_attempts.load(Ordering::Relaxed),
        steal_successes: shared.steal_successes.load(Ordering::Relaxed),
        trace,
        wakeups: shared.wakeups.into_inner().unwrap(),
        final_threshold: shared.policy.threshold(),
    };
    Ok(NativeOutcome { metrics, ptt: shared.ptt, checks: shared.checks.into_inner().unwrap(), model })
}
