use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taosched_core::graph::{generate_random_dag, GeneratorParams, ShapeParams, TypeMix, Work};
use taosched_core::{DagBuilder, TaoDag, TaskType};

/// Longest path in nodes from each node to an exit, by repeated edge
/// relaxation until nothing changes.
fn relaxation_oracle(n: usize, edges: &[(u32, u32)]) -> Vec<u32> {
    let mut crit = vec![1u32; n];
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            let cand = crit[v as usize] + 1;
            if cand > crit[u as usize] {
                crit[u as usize] = cand;
                changed = true;
            }
        }
        if !changed {
            return crit;
        }
    }
}

/// Random DAG: edges only go forward in a shuffled order.
fn shuffled_forward_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> TaoDag {
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut b = DagBuilder::with_capacity(n);
    for _ in 0..n {
        b.add_node(TaskType::Synthetic, 1, Work::default());
    }
    for i in 0..n {
        let span = (n - i - 1).min(40);
        for j in i + 1..=i + span {
            if rng.gen_bool(p) {
                b.add_edge(order[i], order[j]).unwrap();
            }
        }
    }
    b.build().unwrap()
}

fn check(dag: &TaoDag) {
    let edges: Vec<_> = dag.edges().collect();
    let oracle = relaxation_oracle(dag.node_count(), &edges);
    let got: Vec<u32> = dag.nodes().iter().map(|n| n.criticality).collect();
    assert_eq!(got, oracle);
    let cp = oracle.iter().copied().max().unwrap_or(0);
    assert_eq!(dag.critical_path_len(), cp);
    if cp > 0 {
        let dop = dag.degree_of_parallelism().unwrap();
        assert_eq!(dop, dag.node_count() as f64 / cp as f64);
    }
}

#[test]
fn matches_relaxation_on_shuffled_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.gen_range(1..=1000);
        let p = rng.gen_range(0.0..0.15);
        check(&shuffled_forward_dag(n, p, &mut rng));
    }
}

#[test]
fn matches_relaxation_on_generated_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..40 {
        let n = rng.gen_range(1..=1000);
        let dop = rng.gen_range(1.0..=(n as f64).min(12.0));
        let params = GeneratorParams {
            n_nodes: n,
            type_mix: TypeMix::equal_thirds(),
            shape: ShapeParams { target_dop: dop, width_jitter: rng.gen_range(0.0..1.0), max_extra_parents: 3, max_jump: 3 },
            resource_hint: 1,
        };
        check(&generate_random_dag(&params, seed).unwrap().dag);
    }
}
