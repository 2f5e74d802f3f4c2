use admg::fixing::{intrinsic_sets, reachable_sets};
use admg::format::{admg_to_text, parse_admg};
use admg::generate::random_admg;
use admg::graph::Relation;
use admg::minimality::{minimal_set, prune, tree_reduce};
use admg::projection::{closure, densely_connected, marg_project, pair_subgraph, Preference};
use admg::{Admg, VertexSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph(max: usize) -> impl Strategy<Value = Admg> {
    (1..=max, any::<u64>(), 0.05f64..0.6, 0.05f64..0.6)
        .prop_map(|(n, seed, pd, pb)| random_admg(n, pd, pb, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn subset(g: &Admg, mask: u64) -> VertexSet {
    (0..g.n()).filter(|&x| mask >> x & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn text_round_trip(g in graph(10)) {
        prop_assert_eq!(parse_admg(&admg_to_text(&g)).unwrap(), g);
    }

    #[test]
    fn ancestors_mirror_descendants(g in graph(10)) {
        for v in 0..g.n() {
            let an = g.ancestors(&VertexSet::singleton(v));
            for w in 0..g.n() {
                prop_assert_eq!(an.contains(w), g.descendants(&VertexSet::singleton(w)).contains(v));
            }
        }
    }

    #[test]
    fn relatives_are_disjunctive(g in graph(8), mask in any::<u64>()) {
        let s = subset(&g, mask);
        for kind in [Relation::Parents, Relation::Children, Relation::Ancestors, Relation::Descendants, Relation::Siblings, Relation::District] {
            let whole = g.relatives(&s, kind).unwrap();
            let parts = s.iter().fold(VertexSet::new(), |acc, x| {
                acc.union(&g.relatives(&VertexSet::singleton(x), kind).unwrap())
            });
            prop_assert_eq!(whole, parts);
        }
    }

    #[test]
    fn induced_subgraphs_compose(g in graph(8), outer in any::<u64>(), inner in any::<u64>()) {
        let s = subset(&g, outer);
        let t = subset(&g, outer & inner);
        let gs = g.induced_subgraph(&s).unwrap();
        let t_in_s: VertexSet = t.iter().map(|x| s.as_slice().binary_search(&x).unwrap()).collect();
        prop_assert_eq!(gs.induced_subgraph(&t_in_s).unwrap(), g.induced_subgraph(&t).unwrap());
    }

    #[test]
    fn m_separation_symmetric_and_monotone(g in graph(7), a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), extra in 0usize..7) {
        let full = (1u64 << g.n()) - 1;
        let (a, b) = (a & full, b & full & !a);
        let c = c & full & !a & !b;
        let (sa, sb, sc) = (subset(&g, a), subset(&g, b), subset(&g, c));
        prop_assume!(!sa.is_empty() && !sb.is_empty());
        let sep = g.m_separated(&sa, &sb, &sc).unwrap();
        prop_assert_eq!(sep, g.m_separated(&sb, &sa, &sc).unwrap());
        if extra < g.n() && !sb.contains(extra) && !sc.contains(extra) && !sep {
            let mut bigger = sa.clone();
            bigger.insert(extra);
            prop_assert!(!g.m_separated(&bigger, &sb, &sc).unwrap());
        }
    }

    #[test]
    fn dense_iff_marg_adjacent(g in graph(7)) {
        let m = marg_project(&g);
        for v in 0..g.n() {
            for w in v + 1..g.n() {
                prop_assert_eq!(densely_connected(&g, v, w).unwrap().dense(), m.adjacent(v, w));
            }
        }
    }

    #[test]
    fn closure_terminates_quickly(g in graph(10), mask in 1u64..) {
        let s = subset(&g, mask);
        prop_assume!(!s.is_empty());
        let r = closure(&g, &s).unwrap();
        prop_assert!(r.iterations.len() <= 2 * g.n() + 1);
        prop_assert!(r.iterations.windows(2).all(|w| w[1].is_subset(&w[0]) && w[1] != w[0]));
        prop_assert!(s.is_subset(&r.closure));
    }

    #[test]
    fn reductions_hold_their_invariants(g in graph(8)) {
        for v in 0..g.n() {
            for w in 0..g.n() {
                if v == w || !densely_connected(&g, v, w).unwrap().dense() {
                    continue;
                }
                let red = tree_reduce(&pair_subgraph(&g, v, w, Preference::DirectedFirst).unwrap()).unwrap();
                let core = red.core();
                prop_assert_eq!(red.tree().len() + 1, core.len());
                prop_assert_eq!(red.forest().len() + red.targets().len(), core.len());
                prop_assert_eq!(closure(red.reduced(), red.targets()).unwrap().closure, core.clone());

                let keep = minimal_set(&red);
                let h = red.reduced();
                prop_assert!(h.descendants(&keep).is_subset(&keep));
                prop_assert!(red.targets().is_subset(&keep));
                let dropped: VertexSet = (0..h.n()).filter(|&x| !keep.contains(x)).collect();
                let pruned = prune(&red, &dropped).unwrap();
                prop_assert_eq!(pruned.reduced().n(), keep.len());
                let closure_after = closure(pruned.reduced(), pruned.targets()).unwrap().closure;
                prop_assert_eq!(closure_after, pruned.core());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn intrinsic_sets_are_reachable_closures(g in graph(6)) {
        let reachable = reachable_sets(&g).unwrap();
        let mut expected: Vec<VertexSet> = Vec::new();
        for mask in 1u64..1 << g.n() {
            let c = closure(&g, &subset(&g, mask)).unwrap().closure;
            if g.bidirected_connected(&c).unwrap() && reachable.contains(&c) && !expected.contains(&c) {
                expected.push(c);
            }
        }
        let mut got = intrinsic_sets(&g).unwrap();
        got.sort();
        expected.sort();
        prop_assert_eq!(got, expected);
    }
}
