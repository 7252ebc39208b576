mod common;

use moseg::multicut::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decompose_is_bounded_by_oracle_and_gaec(n in 1usize..8, density in 0.2f64..1.0, seed in any::<u64>()) {
        let g = common::random_graph(n, density, seed);
        let (opt, best) = oracle_optimal(&g).unwrap();
        prop_assert_eq!(multicut_objective(&g, &opt).unwrap(), best);
        let init = gaec(&g);
        let gaec_obj = multicut_objective(&g, &init).unwrap();
        let (p, obj) = decompose(&g);
        prop_assert_eq!(p.len(), n);
        prop_assert!(obj >= best - 1e-12);
        prop_assert!(obj <= gaec_obj + 1e-12);
        // joining everything costs nothing, so no optimum is positive
        prop_assert!(best <= 0.0);
    }

    #[test]
    fn klj_passes_never_increase_objective(n in 2usize..16, seed in any::<u64>()) {
        let g = common::random_graph(n, 0.5, seed);
        for init in [Partition::singletons(n), Partition::joined(n), gaec(&g)] {
            let (_, trace) = klj_traced(&g, &init, &KljParams::default()).unwrap();
            for w in trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", trace);
            }
        }
    }

    #[test]
    fn labels_by_size_are_dense_and_ordered(labels in prop::collection::vec(0usize..6, 1..40)) {
        let p = Partition::new(labels);
        let out = p.labels_by_size();
        let k = p.component_count() as u32;
        let mut sizes = vec![0usize; k as usize + 1];
        for &l in &out {
            prop_assert!(l >= 1 && l <= k);
            sizes[l as usize] += 1;
        }
        prop_assert!(sizes[1..].windows(2).all(|w| w[0] >= w[1]));
        // same grouping as the input
        for i in 0..out.len() {
            for j in 0..out.len() {
                prop_assert_eq!(out[i] == out[j], p.labels()[i] == p.labels()[j]);
            }
        }
    }

    #[test]
    fn all_attractive_graph_is_one_component(n in 2usize..12, seed in any::<u64>()) {
        let mut g = common::random_graph(n, 1.0, seed);
        let costs = g.edges().iter().map(|e| e.cost.abs() + 0.01).collect();
        g = g.with_costs(costs).unwrap();
        prop_assert_eq!(decompose(&g).0.component_count(), 1);
    }
}
