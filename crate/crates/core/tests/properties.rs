use proptest::prelude::*;
use taosched_core::graph::{generate_random_dag, GeneratorParams, ShapeParams, TypeMix};
use taosched_core::policies::{mold_width, threshold_update, HistoryComparator, LoadView};
use taosched_core::ptt::{ewma, leader_core, PttTable};

fn pow2_width() -> impl Strategy<Value = usize> {
    prop_oneof![Just(1usize), Just(2), Just(4)]
}

proptest! {
    #[test]
    fn ewma_contracts_by_four_fifths(old in 1e-3f64..1e7, new in 1e-3f64..1e7) {
        let next = ewma(old, new);
        let lhs = (next - new).abs();
        let rhs = 0.8 * (old - new).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * old.max(new));
        prop_assert!(next >= old.min(new) && next <= old.max(new));
    }

    #[test]
    fn ewma_first_write_replaces_sentinel(new in 1e-3f64..1e7) {
        prop_assert_eq!(ewma(0.0, new), new);
    }

    #[test]
    fn repeated_updates_converge_geometrically(start in 1.0f64..1e6, target in 1.0f64..1e6, k in 0usize..40) {
        let t = PttTable::new(8);
        t.preload(4, 4, start).unwrap();
        let mut v = start;
        for _ in 0..k {
            v = t.record_time(4, 4, target).unwrap();
        }
        let bound = 0.8f64.powi(k as i32) * (start - target).abs();
        prop_assert!((v - target).abs() <= bound * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn threshold_is_a_convex_step(w in 0.01f64..100.0, t in 0.01f64..100.0) {
        let next = threshold_update(w, t, 6.0);
        prop_assert!((next - (w + 6.0 * t) / 7.0).abs() <= 1e-12 * w.max(t));
        prop_assert!(next >= w.min(t) - 1e-12 && next <= w.max(t) + 1e-12);
    }

    #[test]
    fn leader_bounds_its_place(core in 0usize..64, width in pow2_width()) {
        let l = leader_core(core, width).unwrap();
        prop_assert_eq!(l % width, 0);
        prop_assert!(l <= core && core < l + width);
    }

    #[test]
    fn generated_dags_are_well_formed(n in 1usize..400, dop in 1.0f64..10.0, jitter in 0.0f64..1.0, seed in any::<u64>()) {
        prop_assume!(dop <= n as f64);
        let params = GeneratorParams {
            n_nodes: n,
            type_mix: TypeMix::equal_thirds(),
            shape: ShapeParams { target_dop: dop, width_jitter: jitter, max_extra_parents: 2, max_jump: 2 },
            resource_hint: 1,
        };
        let g = generate_random_dag(&params, seed).unwrap();
        let dag = &g.dag;
        prop_assert_eq!(dag.node_count(), n);
        prop_assert!(g.degree_of_parallelism >= 1.0 && g.degree_of_parallelism <= n as f64);
        let mut pos = vec![0usize; n];
        for (i, &id) in dag.topological_order().iter().enumerate() {
            pos[id as usize] = i;
        }
        for (u, v) in dag.edges() {
            prop_assert!(pos[u as usize] < pos[v as usize]);
        }
        for node in dag.nodes() {
            let expect = 1 + node.successors.iter().map(|&s| dag.node(s).criticality).max().unwrap_or(0);
            prop_assert_eq!(node.criticality, expect);
        }
        for &r in dag.roots() {
            prop_assert_eq!(dag.node(r).predecessors, 0);
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let p = GeneratorParams { n_nodes: 200, ..GeneratorParams::benchmark(3.0) };
        let a = generate_random_dag(&p, seed).unwrap();
        let b = generate_random_dag(&p, seed).unwrap();
        prop_assert_eq!(a.dag.edges().collect::<Vec<_>>(), b.dag.edges().collect::<Vec<_>>());
    }

    #[test]
    fn molded_widths_are_valid(
        width in pow2_width(),
        load in 0usize..20,
        idle in 0usize..=4,
        target in 0usize..8,
        times in proptest::collection::vec(prop_oneof![Just(0.0f64), 1.0f64..1e4], 3),
        symmetric in any::<bool>(),
    ) {
        let t = PttTable::new(8);
        for (i, &v) in times.iter().enumerate() {
            let w = 1 << i;
            t.preload(leader_core(target, w).unwrap(), w, v).unwrap();
        }
        let view = LoadView { system_load: load, n_cores: 8, cluster_idle: idle, cluster_size: 4 };
        let cmp = if symmetric { HistoryComparator::CostSymmetric } else { HistoryComparator::Literal };
        let out = mold_width(width, &view, &t, target, cmp);
        prop_assert!(out.is_power_of_two() && out <= 4);
        if load < 8 {
            prop_assert!(out >= width);
        } else if out != width {
            let at = |w: usize| t.get(leader_core(target, w).unwrap(), w);
            prop_assert!(at(out) > 0.0);
            let bound = if symmetric { at(width) * width as f64 } else { at(width) };
            prop_assert!(at(out) * (out as f64) < bound);
        }
    }

    #[test]
    fn cold_table_under_load_keeps_width(width in pow2_width(), load in 8usize..20, target in 0usize..8) {
        let t = PttTable::new(8);
        let view = LoadView { system_load: load, n_cores: 8, cluster_idle: 4, cluster_size: 4 };
        prop_assert_eq!(mold_width(width, &view, &t, target, HistoryComparator::Literal), width);
    }
}
