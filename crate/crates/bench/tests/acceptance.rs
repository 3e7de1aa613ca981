//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taosched::kernels::KernelSizes;
use taosched::native::{run_native, NativeConfig};
use taosched::scenario::{ablate_molding, median, Backend, DagSpec, Scenario};
use taosched_core::graph::{generate_random_dag, GeneratorParams, TypeMix, Work};
use taosched_core::policies::{threshold_update, Placement, PolicyConfig, Threshold};
use taosched_core::ptt::{ewma, leader_core, PttTable};
use taosched_core::sim::{simulate, SimConfig, SimOutcome};
use taosched_core::{DagBuilder, MachineModel, TaoDag, TaskType};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn benchmark_dag(dop: f64, n: usize, seed: u64) -> TaoDag {
    let p = GeneratorParams { n_nodes: n, ..GeneratorParams::benchmark(dop) };
    generate_random_dag(&p, seed).expect("generator").dag
}

fn all_policies(m: &MachineModel) -> Vec<PolicyConfig> {
    Placement::ALL
        .into_iter()
        .flat_map(|p| [false, true].map(|mold| PolicyConfig::new(p, mold, m)))
        .collect()
}

/// Longest path to an exit by repeated relaxation over the edge list, with
/// no use of the topological order.
fn relaxed_criticality(n: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let mut crit = vec![1u32; n];
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            if crit[u] < crit[v] + 1 {
                crit[u] = crit[v] + 1;
                changed = true;
            }
        }
        if !changed {
            return crit;
        }
    }
}

fn random_dag(rng: &mut impl Rng, n: usize) -> (TaoDag, Vec<(usize, usize)>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut b = DagBuilder::with_capacity(n);
    for _ in 0..n {
        b.add_node(TaskType::Synthetic, 1, Work::default());
    }
    let density = rng.gen_range(0.5..3.0) / n as f64;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n.min(i + 64) {
            if rng.gen_bool((density * 16.0).min(1.0)) {
                let (u, v) = (perm[i], perm[j]);
                b.add_edge(u as u32, v as u32).expect("edge");
                edges.push((u, v));
            }
        }
    }
    (b.build().expect("acyclic by construction"), edges)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for c in 0..8 {
        for w in [1, 2, 4] {
            let got = leader_core(c, w).map_err(|e| e.to_string())?;
            ensure(got == (c / w) * w, || format!("leader_core({c},{w}) = {got}"))?;
        }
    }
    ensure(leader_core(7, 4) == Ok(4), || "leader_core(7,4) != 4".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let old: f64 = rng.gen_range(1.0..1e6);
        let new: f64 = rng.gen_range(1.0..1e6);
        let want = (4.0 * old + new) / 5.0;
        ensure((ewma(old, new) - want).abs() <= 4.0 * f64::EPSILON * want, || format!("ewma({old},{new})"))?;
        let table = PttTable::new(8);
        table.record_time(4, 4, old).map_err(|e| e.to_string())?;
        let got = table.record_time(4, 4, new).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 4.0 * f64::EPSILON * want, || format!("table update {old},{new}"))?;

        let w: f64 = rng.gen_range(0.1..10.0);
        let t: f64 = rng.gen_range(0.1..10.0);
        let want = (w + 6.0 * t) / 7.0;
        ensure((threshold_update(w, t, 6.0) - want).abs() <= 4.0 * f64::EPSILON * want, || format!("threshold({w},{t})"))?;
        let th = Threshold::new(t);
        let (_, after) = th.update(w, 6.0);
        ensure(after == th.get() && (after - want).abs() <= 4.0 * f64::EPSILON * want, || "threshold cell".into())?;
    }

    let mut nodes_checked = 0;
    for i in 0..100 {
        let n = rng.gen_range(1..=1000);
        let (dag, edges) = random_dag(&mut rng, n);
        let want = relaxed_criticality(n, &edges);
        for node in dag.nodes() {
            ensure(node.criticality == want[node.id as usize], || format!("DAG {i}: node {} criticality", node.id))?;
        }
        let cp = want.iter().copied().max().unwrap_or(0);
        ensure(dag.critical_path_len() == cp, || format!("DAG {i}: critical path"))?;
        nodes_checked += n;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("24 leader cells, 10^4 EWMA/threshold samples, 100 DAGs ({nodes_checked} nodes), {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    ensure(0.8f64.powi(21) < 0.01, || "0.8^21 >= 0.01".into())?;
    let mut worst = 0usize;
    for (initial, truth) in [(100.0, 1.0), (1.0, 100.0), (5000.0, 4800.0), (3.0, 2.0e4), (1.0e-3, 1.0)] {
        let table = PttTable::new(8);
        table.preload(0, 1, initial).map_err(|e| e.to_string())?;
        let gap = f64::abs(initial - truth);
        let mut hit = None;
        for k in 1..=21 {
            let v = table.record_time(0, 1, truth).map_err(|e| e.to_string())?;
            if hit.is_none() && (v - truth).abs() < 0.01 * gap {
                hit = Some(k);
            }
        }
        let k = hit.ok_or_else(|| format!("{initial} -> {truth} not within 1% after 21 updates"))?;
        worst = worst.max(k);
    }
    Ok(format!("within 1% after at most {worst} updates"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let m = MachineModel::hikey960_like();
    let dag = benchmark_dag(3.03, 3000, 1);
    let dop = dag.degree_of_parallelism().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for cfg in [PolicyConfig::new(Placement::CritPtt, true, &m), PolicyConfig::new(Placement::Weight, true, &m)] {
        let first = simulate(&dag, &m, cfg.clone(), SimConfig::with_seed(42)).map_err(|e| e.to_string())?.metrics;
        for _ in 0..2 {
            let again = simulate(&dag, &m, cfg.clone(), SimConfig::with_seed(42)).map_err(|e| e.to_string())?.metrics;
            ensure(again == first, || format!("{} differs between runs", cfg.label()))?;
        }
        runs += 3;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("DoP {dop:.2}, {runs} runs identical, {elapsed:.2?}"))
}

fn exactly_once(dag: &TaoDag, ids: impl Iterator<Item = u32>) -> bool {
    let mut seen = vec![0u32; dag.node_count()];
    for id in ids {
        seen[id as usize] += 1;
    }
    seen.iter().all(|&c| c == 1)
}

fn conserved(out: &SimOutcome) -> bool {
    let m = &out.metrics;
    let total: u64 = m.busy_ns.iter().zip(&m.idle_ns).map(|(b, i)| b + i).sum();
    total == m.n_cores() as u64 * m.makespan_ns
}

fn criterion_4() -> Outcome {
    let m = MachineModel::hikey960_like();
    let policies = all_policies(&m);
    let mut sim_runs = 0;
    for seed in 0..20u64 {
        let dop = [1.62, 3.03, 8.06][seed as usize % 3];
        let hint = [1, 2, 4][seed as usize % 3];
        let dag = benchmark_dag(dop, 3000, seed).with_uniform_hint(hint).map_err(|e| e.to_string())?;
        for cfg in &policies {
            let out = simulate(&dag, &m, cfg.clone(), SimConfig::with_seed(seed)).map_err(|e| e.to_string())?;
            ensure(exactly_once(&dag, out.metrics.trace.iter().map(|e| e.tao)), || {
                format!("sim {} seed {seed}: not exactly once", cfg.label())
            })?;
            ensure(conserved(&out), || format!("sim {} seed {seed}: busy+idle != cores*makespan", cfg.label()))?;
            sim_runs += 1;
        }
    }
    let mut native_runs = 0;
    for seed in 0..20u64 {
        let dag = benchmark_dag(3.03, 150, seed).with_uniform_hint([1, 2, 4][seed as usize % 3]).map_err(|e| e.to_string())?;
        for cfg in &policies {
            let nc = NativeConfig {
                seed,
                workers: Some(8),
                sizes: KernelSizes::tiny(),
                pin: false,
                emulate_heterogeneity: false,
                timeout: Duration::from_secs(120),
                ..NativeConfig::default()
            };
            let out = run_native(&dag, &m, cfg.clone(), &nc).map_err(|e| e.to_string())?;
            ensure(exactly_once(&dag, out.metrics.trace.iter().map(|e| e.tao)), || {
                format!("native {} seed {seed}: not exactly once", cfg.label())
            })?;
            native_runs += 1;
        }
    }
    Ok(format!("{sim_runs} simulator runs (3000 nodes), {native_runs} native runs (150 nodes)"))
}

fn median_of(dag: &TaoDag, m: &MachineModel, cfg: &PolicyConfig, hint: usize, reps: u64) -> Result<f64, String> {
    let dag = dag.clone().with_uniform_hint(hint).map_err(|e| e.to_string())?;
    let mut thr = (0..reps)
        .map(|s| simulate(&dag, m, cfg.clone(), SimConfig::with_seed(s)).map(|o| o.metrics.throughput()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(median(&mut thr))
}

const REPS: u64 = 5;
const DAG_SEED: u64 = 1;

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let m = MachineModel::hikey960_like();
    let homo = PolicyConfig::new(Placement::Homogeneous, false, &m);
    let molded = [PolicyConfig::new(Placement::CritPtt, true, &m), PolicyConfig::new(Placement::Weight, true, &m)];

    let low = benchmark_dag(1.62, 3000, DAG_SEED);
    let h1 = median_of(&low, &m, &homo, 1, REPS)?;
    let h4 = median_of(&low, &m, &homo, 4, REPS)?;
    let mut report = vec![format!("DoP 1.62: homogeneous w1 {h1:.0}, w4 {h4:.0}")];
    let mut any = false;
    for cfg in &molded {
        let best = [1, 4]
            .into_iter()
            .map(|h| median_of(&low, &m, cfg, h, REPS))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::MIN, f64::max);
        let ok = best >= 1.5 * h1 && best >= 1.1 * h4;
        any |= ok;
        report.push(format!("{} {best:.0} ({:.2}x w1, {:.2}x w4)", cfg.label(), best / h1, best / h4));
    }
    ensure(any, || format!("no molding variant reaches 1.5x/1.1x: {}", report.join("; ")))?;

    let high = benchmark_dag(8.06, 3000, DAG_SEED);
    let g1 = median_of(&high, &m, &homo, 1, REPS)?;
    let g4 = median_of(&high, &m, &homo, 4, REPS)?;
    report.push(format!("DoP 8.06: homogeneous w1 {g1:.0}, w4 {g4:.0}"));
    ensure(g1 > g4, || format!("homogeneous w1 does not beat w4: {}", report.join("; ")))?;
    for cfg in &molded {
        let t = median_of(&high, &m, cfg, 1, REPS)?;
        report.push(format!("{} {t:.0} ({:.2}x)", cfg.label(), t / g1));
        ensure(t >= g1, || format!("{} below homogeneous w1: {}", cfg.label(), report.join("; ")))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    report.push(format!("{elapsed:.1?}"));
    Ok(report.join("; "))
}

fn criterion_6() -> Outcome {
    let m = MachineModel::hikey960_like();
    let dags = [1.62, 3.03, 8.06]
        .into_iter()
        .map(|d| DagSpec { name: format!("dop{d}"), dag: benchmark_dag(d, 3000, DAG_SEED) })
        .collect();
    let scenario = Scenario {
        dags,
        model: m.clone(),
        policies: vec![PolicyConfig::new(Placement::Weight, true, &m), PolicyConfig::new(Placement::CritPtt, true, &m)],
        hints: vec![1, 4],
        repetitions: REPS as usize,
        seed: 0,
        backend: Backend::Sim(SimConfig::with_seed(0)),
    };
    let rows = ablate_molding(&scenario, None).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for r in &rows {
        report.push(format!("{} h{} {} {:+.1}%", r.dag, r.hint, r.placement, r.delta_pct));
    }
    for r in &rows {
        let (want_hint, ok) = if r.dag == "dop8.06" {
            (1, r.delta_pct >= 2.0)
        } else {
            (4, r.delta_pct.abs() <= 3.0)
        };
        ensure(r.hint == want_hint, || format!("{} best base hint {} (expected {want_hint}): {}", r.dag, r.hint, report.join("; ")))?;
        ensure(ok, || format!("{} {} out of bounds: {}", r.dag, r.placement, report.join("; ")))?;
    }
    ensure(rows.len() == 6, || format!("{} ablation rows", rows.len()))?;
    Ok(report.join("; "))
}

fn criterion_7() -> Outcome {
    let m = MachineModel::hikey960_like();
    let big = m.big_cores();
    let mut checked = 0;
    for seed in 0..4u64 {
        let dag = benchmark_dag([1.62, 3.03, 8.06, 3.03][seed as usize], 3000, seed);
        let out = simulate(&dag, &m, PolicyConfig::new(Placement::CritAware, false, &m), SimConfig::with_seed(seed))
            .map_err(|e| e.to_string())?;
        for w in &out.metrics.wakeups {
            let critical = w.criticality >= w.max_running_crit;
            ensure(w.critical == Some(critical), || format!("TAO {} classified wrongly", w.tao))?;
            ensure(big.contains(&w.target_core) == critical, || {
                format!("TAO {} (critical {critical}) sent to core {}", w.tao, w.target_core)
            })?;
            checked += 1;
        }
    }
    ensure(checked >= 10_000, || format!("only {checked} wakeups"))?;

    let mut cold = 0;
    for seed in 0..100u64 {
        let p = GeneratorParams {
            n_nodes: 20 + (seed as usize * 7) % 60,
            type_mix: TypeMix::equal_thirds(),
            resource_hint: [1, 2, 4][seed as usize % 3],
            ..GeneratorParams::benchmark([1.62, 3.03, 8.06][seed as usize % 3])
        };
        let dag = generate_random_dag(&p, 1000 + seed).map_err(|e| e.to_string())?.dag;
        let placement = [Placement::CritPtt, Placement::Weight][seed as usize % 2];
        let out = simulate(&dag, &m, PolicyConfig::new(placement, true, &m), SimConfig::with_seed(seed))
            .map_err(|e| e.to_string())?;
        for w in &out.metrics.wakeups {
            if let Some(weight) = w.weight {
                ensure(weight.is_finite() && weight > 0.0, || format!("seed {seed}: weight {weight}"))?;
            }
        }
        let t = out.metrics.final_threshold;
        ensure(t.is_finite() && t > 0.0, || format!("seed {seed}: threshold {t}"))?;
        for e in &out.metrics.trace {
            ensure(e.end_ns > e.start_ns, || format!("seed {seed}: TAO {} has no duration", e.tao))?;
        }
        ensure(exactly_once(&dag, out.metrics.trace.iter().map(|e| e.tao)), || format!("seed {seed}: lost TAOs"))?;
        cold += 1;
    }
    Ok(format!("{checked} crit-aware wakeups, {cold} cold-start runs"))
}

fn criterion_8() -> Outcome {
    let m = MachineModel::hikey960_like();
    let sizes = KernelSizes::default();
    let p = GeneratorParams { n_nodes: 12, ..GeneratorParams::benchmark(3.0) };
    let mut report = Vec::new();
    for (i, (placement, hint)) in [(Placement::Homogeneous, 1), (Placement::Weight, 2), (Placement::CritPtt, 4)].into_iter().enumerate() {
        let dag = generate_random_dag(&p, 5 + i as u64).map_err(|e| e.to_string())?.dag.with_uniform_hint(hint).map_err(|e| e.to_string())?;
        let count = |t: TaskType| dag.nodes().iter().filter(|n| n.task_type == t).count() as u64;
        let cfg = NativeConfig {
            seed: i as u64,
            workers: Some(4),
            sizes,
            pin: false,
            emulate_heterogeneity: false,
            check_every_matmul: true,
            timeout: Duration::from_secs(300),
        };
        let out = run_native(&dag, &m, PolicyConfig::new(placement, true, &m), &cfg).map_err(|e| e.to_string())?;
        let c = out.checks;
        ensure(c.sorts_verified == count(TaskType::Sort), || format!("run {i}: {} of {} sorts verified", c.sorts_verified, count(TaskType::Sort)))?;
        ensure(c.matmuls_verified == count(TaskType::MatMul), || format!("run {i}: {} matmuls verified", c.matmuls_verified))?;
        ensure(c.copies_verified == count(TaskType::Copy), || format!("run {i}: {} copies verified", c.copies_verified))?;
        let bytes = count(TaskType::Copy) * sizes.copy_bytes as u64;
        ensure(c.copy_bytes == bytes, || format!("run {i}: copied {} of {bytes} bytes", c.copy_bytes))?;
        report.push(format!("{} sort/{} matmul/{} copy ({} MB)", c.sorts_verified, c.matmuls_verified, c.copies_verified, c.copy_bytes / 1_000_000));
    }
    Ok(report.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("formula oracles", criterion_1),
        ("PTT convergence", criterion_2),
        ("determinism", criterion_3),
        ("exactly-once and conservation", criterion_4),
        ("directional throughput", criterion_5),
        ("molding ablation", criterion_6),
        ("policy contracts", criterion_7),
        ("native kernel sanity", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| id.contains(x.as_str()) || name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match r {
            Ok(detail) => println!("{id} ({name}): PASS [{:.1?}] {detail}", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("{id} ({name}): FAIL [{:.1?}] {why}", start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
