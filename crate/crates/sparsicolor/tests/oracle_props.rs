use proptest::prelude::*;
use sparsicolor::coloring::PartialColoring;
use sparsicolor::experiment::check_all_roots;
use sparsicolor::graph::{gen_gnp, Graph};
use sparsicolor::oracle::{
    all_perfect_matchings, hopcroft_karp, hopcroft_karp_shuffled, list_coloring_feasible, max_matching_brute,
    random_perfect_instance, verify_coloring, BipartiteInstance, Feasibility, Verdict,
};

fn instance() -> impl Strategy<Value = BipartiteInstance> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(l, r)| {
        proptest::collection::vec(proptest::bool::weighted(0.35), l * r).prop_map(move |bits| {
            let edges = (0..l).flat_map(|v| (0..r).map(move |c| (v, c))).filter(|&(v, c)| bits[v * r + c]);
            BipartiteInstance::new(l, r, edges.collect::<Vec<_>>()).unwrap()
        })
    })
}

fn greedy(g: &Graph) -> PartialColoring {
    let mut c = PartialColoring::new(g.n());
    for v in 0..g.n() {
        let free = c.palette_of(g, v, g.delta() as u32 + 1);
        let x = (1..=g.delta() as u32 + 1).find(|&x| free[x as usize]).unwrap();
        c.set(v, x);
    }
    c
}

proptest! {
    #[test]
    fn hopcroft_karp_is_maximum(inst in instance(), seed in any::<u64>()) {
        let best = max_matching_brute(&inst);
        let m = hopcroft_karp(&inst);
        prop_assert_eq!(m.size(), best);
        prop_assert!(inst.check_matching(&m.pairs()).is_ok());
        prop_assert_eq!(hopcroft_karp_shuffled(&inst, seed).size(), best);
    }

    #[test]
    fn infeasibility_comes_with_a_hall_witness(inst in instance()) {
        match list_coloring_feasible(&inst) {
            Feasibility::Feasible { matching } => {
                prop_assert_eq!(matching.len(), inst.left);
                prop_assert!(inst.check_matching(&matching).is_ok());
            }
            Feasibility::Infeasible { hall_set, neighborhood } => {
                prop_assert!(neighborhood.len() < hall_set.len());
                for &v in &hall_set {
                    for c in 0..inst.right {
                        if inst.has_edge(v, c) {
                            prop_assert!(neighborhood.contains(&c));
                        }
                    }
                }
                prop_assert!(max_matching_brute(&inst) < inst.left);
            }
        }
    }

    #[test]
    fn level_sets_hold_for_any_perfect_matching(n in 1usize..=30, p in 0.0f64..0.2, seed in any::<u64>()) {
        let inst = random_perfect_instance(n, p, seed);
        let m = hopcroft_karp_shuffled(&inst, seed ^ 7);
        prop_assert_eq!(m.size(), n);
        let (ok, detail) = check_all_roots(&inst, &m.pairs());
        prop_assert!(ok, "{}", detail);
    }

    #[test]
    fn exhaustive_perfect_matchings_are_distinct_and_valid(n in 1usize..=5, p in 0.0f64..0.6, seed in any::<u64>()) {
        let inst = random_perfect_instance(n, p, seed);
        let all = all_perfect_matchings(&inst);
        prop_assert!(!all.is_empty());
        let mut sorted: Vec<_> = all.iter().map(|m| { let mut m = m.clone(); m.sort(); m }).collect();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), all.len());
        for m in &all {
            prop_assert!(inst.check_matching(m).is_ok());
            prop_assert!(check_all_roots(&inst, m).0);
        }
    }

    #[test]
    fn verifier_is_pure_and_flags_planted_conflicts(n in 2usize..40, p in 0.05f64..0.5, seed in any::<u64>()) {
        let g = gen_gnp(n, p, seed);
        let c = greedy(&g);
        let pal = g.delta() as u32 + 1;
        prop_assert_eq!(verify_coloring(&g, |_, x| x <= pal, &c), Verdict::Valid);
        prop_assert_eq!(verify_coloring(&g, |_, x| x <= pal, &c), Verdict::Valid);
        let first = g.edges().next();
        if let Some((u, v)) = first {
            let mut bad = c.clone();
            bad.set(v, c.raw(u));
            let verdict = verify_coloring(&g, |_, x| x <= pal, &bad);
            prop_assert!(matches!(verdict, Verdict::Conflict { .. }), "{}", verdict);
            let mut partial = c.clone();
            partial.unset(u);
            prop_assert_eq!(verify_coloring(&g, |_, x| x <= pal, &partial), Verdict::Incomplete { nodes: vec![u] });
        }
    }
}

#[test]
fn restricted_lists_are_list_violations() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let c = PartialColoring::from_colors(vec![Some(1), Some(2), Some(3)]);
    assert_eq!(verify_coloring(&g, |v, x| v != 2 || x != 3, &c), Verdict::ListViolation { node: 2 });
}
