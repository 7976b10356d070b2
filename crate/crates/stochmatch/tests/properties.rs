//! Property tests for the structural invariants.

use proptest::prelude::*;

use stochmatch::algorithms::{run_nonadaptive, AlgorithmParams};
use stochmatch::analysis::{classify_edges, procedure_noncrucial};
use stochmatch::estimators::{estimate_match_probs, sample_realization, sampling_prob};
use stochmatch::graph::{EdgeSet, Graph};
use stochmatch::rng::{domains, StreamRng};
use stochmatch::solver::{brute_force_matching, MatchingSolver};

/// Random small graph with grid weights (exact f64 arithmetic throughout).
fn small_graph() -> impl Strategy<Value = Graph> {
    let pairs: Vec<(u32, u32)> = (0..8u32)
        .flat_map(|u| ((u + 1)..8).map(move |v| (u, v)))
        .collect();
    let count = pairs.len();
    (
        proptest::collection::vec(proptest::bool::ANY, count),
        proptest::collection::vec(0..8u32, count),
        1..9u32,
    )
        .prop_filter_map("graph must have at least one edge", move |(mask, widx, pnum)| {
            let weights = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 8.0];
            let edges: Vec<(u32, u32, f64)> = pairs
                .iter()
                .zip(&mask)
                .zip(&widx)
                .filter(|((_, &keep), _)| keep)
                .map(|((&(u, v), _), &w)| (u, v, weights[w as usize]))
                .collect();
            if edges.is_empty() {
                return None;
            }
            Some(Graph::build(&edges, f64::from(pnum) / 10.0).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The central dual-route check: the blossom solver and the exhaustive
    // oracle agree on weight AND edge set (shared canonical tie-break).
    #[test]
    fn solver_matches_brute_force(g in small_graph()) {
        let active = EdgeSet::full(g.edge_count());
        let fast = MatchingSolver::new().solve(&g, &active);
        let slow = brute_force_matching(&g, &active).unwrap();
        prop_assert_eq!(&fast.edge_ids, &slow.edge_ids);
        prop_assert_eq!(fast.weight, slow.weight);
        prop_assert!(g.is_matching(&fast.edge_ids));
    }

    #[test]
    fn solver_is_deterministic_on_subsets(g in small_graph(), seed in 0..1000u64) {
        let rng = StreamRng::new(seed, domains::REALIZATION);
        let active = sample_realization(&g, &rng, 0);
        let mut solver = MatchingSolver::new();
        let first = solver.solve(&g, &active);
        prop_assert!(g.is_matching(&first.edge_ids));
        for id in &first.edge_ids {
            prop_assert!(active.contains(*id));
        }
        prop_assert_eq!(solver.solve(&g, &active).edge_ids, first.edge_ids);
    }

    #[test]
    fn graph_file_roundtrip(g in small_graph()) {
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let h = Graph::read_from(std::io::Cursor::new(&buf)).unwrap();
        prop_assert_eq!(g.edges(), h.edges());
        prop_assert_eq!(g.p(), h.p());
    }

    #[test]
    fn sampling_prob_bounds_and_monotonicity(q in 0.0..=1.0f64, r in 0..200u64) {
        let a = sampling_prob(q, r);
        let b = sampling_prob(q, r + 1);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    // Deterministic contracts of the non-crucial construction hold for any
    // threshold and any epsilon in the valid range.
    #[test]
    fn noncrucial_contracts_hold(
        g in small_graph(),
        seed in 0..500u64,
        tau_scale in 0.1..2.0f64,
        eps in 0.05..0.36f64,
    ) {
        let stats = estimate_match_probs(&g, 500, seed);
        let tau = tau_scale * g.p() / 4.0;
        let (partition, budgets) = classify_edges(&g, &stats, tau);
        let qs = run_nonadaptive(&g, &AlgorithmParams {
            epsilon: eps,
            r_override: Some(30),
            seed,
        }).unwrap();
        let rng = StreamRng::new(seed ^ 0xABCD, domains::REALIZATION);
        let realized = sample_realization(&g, &rng, 1);
        let x = procedure_noncrucial(&g, &qs, &realized, &partition, &budgets, eps, tau);
        for id in x.support().iter() {
            prop_assert!(qs.edges.contains(id));
            prop_assert!(realized.contains(id));
            prop_assert!(partition.noncrucial.contains(id));
            prop_assert!(x.value(id) <= 2.0 * tau / g.p() + 1e-12);
        }
        for v in 0..g.vertex_count() as u32 {
            let load = x.vertex_load(&g, v);
            prop_assert!(load <= budgets.q_n[v as usize].max(eps) + 1e-12);
        }
    }

    #[test]
    fn query_set_degrees_bounded_by_rounds(g in small_graph(), r in 1..40u64, seed in 0..100u64) {
        let qs = run_nonadaptive(&g, &AlgorithmParams {
            epsilon: 0.25,
            r_override: Some(r),
            seed,
        }).unwrap();
        prop_assert!(u64::from(qs.max_degree()) <= r);
        for (id, &f) in qs.f.iter().enumerate() {
            prop_assert_eq!(f > 0.0, qs.edges.contains(id as u32));
            let scaled = f * r as f64;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }
}
