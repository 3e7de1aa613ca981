use std::time::Duration;

use taosched::kernels::KernelSizes;
use taosched::native::{fit_to_host, host_cores, run_native, NativeConfig};
use taosched_core::graph::{generate_random_dag, GeneratorParams};
use taosched_core::{MachineModel, Placement, PolicyConfig};

fn cfg(seed: u64, workers: Option<usize>) -> NativeConfig {
    NativeConfig {
        seed,
        workers,
        sizes: KernelSizes::tiny(),
        pin: false,
        check_every_matmul: true,
        timeout: Duration::from_secs(60),
        ..NativeConfig::default()
    }
}

#[test]
fn trace_is_consistent_across_seeds() {
    let m = MachineModel::hikey960_like();
    for seed in 0..6 {
        let hint = [1, 2, 4][seed as usize % 3];
        let p = GeneratorParams { n_nodes: 90, resource_hint: hint, ..GeneratorParams::benchmark(4.0) };
        let dag = generate_random_dag(&p, seed).unwrap().dag;
        let placement = Placement::ALL[seed as usize % 4];
        let out = run_native(&dag, &m, PolicyConfig::new(placement, true, &m), &cfg(seed, Some(8))).unwrap();
        let mut span = vec![(0u64, 0u64); dag.node_count()];
        for e in &out.metrics.trace {
            assert!((1..=e.width).contains(&e.participants));
            assert!((e.leader..e.leader + e.width).contains(&e.committer));
            assert_eq!(e.leader % e.width, 0);
            assert!(e.start_ns <= e.end_ns);
            span[e.tao as usize] = (e.start_ns, e.end_ns);
        }
        for (u, v) in dag.edges() {
            assert!(span[u as usize].1 <= span[v as usize].0, "seed {seed}: {v} started before {u} ended");
        }
        let c = out.checks;
        assert_eq!(c.sorts_verified + c.matmuls_verified + c.copies_verified, 90);
        let busy: u64 = out.metrics.busy_ns.iter().sum();
        let idle: u64 = out.metrics.idle_ns.iter().sum();
        assert_eq!(busy + idle, 8 * out.metrics.makespan_ns);
    }
}

#[test]
fn default_workers_fit_the_host() {
    let m = MachineModel::hikey960_like();
    let p = PolicyConfig::new(Placement::CritPtt, true, &m);
    let (fitted, policy) = fit_to_host(&m, &p, None).unwrap();
    assert_eq!(fitted.n_cores(), host_cores().min(8));
    policy.validate(fitted.n_cores()).unwrap();

    let dag = generate_random_dag(&GeneratorParams { n_nodes: 40, resource_hint: 4, ..GeneratorParams::benchmark(3.0) }, 2)
        .unwrap()
        .dag;
    let out = run_native(&dag, &m, p, &cfg(0, None)).unwrap();
    assert_eq!(out.model.n_cores(), fitted.n_cores());
    assert_eq!(out.metrics.trace.len(), 40);
    assert!(out.metrics.trace.iter().all(|e| e.width <= fitted.n_cores()));
}
