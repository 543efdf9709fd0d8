mod common;

use cellnet::assign::ChannelAssignment;
use cellnet::fixtures::{fixture, ARBITRARY7_EDGES};
use cellnet::topology::*;
use cellnet::CellSet;
use common::*;
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = ContentionGraph> {
    (1..=max_n, 0.0..1.0f64, any::<u64>())
        .prop_map(|(n, p, seed)| random_graph(&mut rng(seed), n, p))
}

fn state_masks(fam: &IndependentSetFamily) -> Vec<u32> {
    fam.states()
        .iter()
        .map(|s| s.active.iter().map(|i| 1u32 << i).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn states_are_exactly_the_independent_sets(g in arb_graph(11)) {
        let fam = enumerate_state_space(&g).unwrap();
        let mut got = state_masks(&fam);
        got.sort_unstable();
        prop_assert_eq!(got, brute_independent_sets(&g));
    }

    #[test]
    fn partition_covers_vertices(g in arb_graph(11)) {
        let fam = enumerate_state_space(&g).unwrap();
        for s in fam.states() {
            prop_assert!(g.is_independent(&s.active));
            prop_assert!(!s.active.intersects(&s.blocked));
            prop_assert!(!s.active.intersects(&s.backoff));
            prop_assert!(!s.blocked.intersects(&s.backoff));
            let mut all = s.active.clone();
            all.union_with(&s.blocked);
            all.union_with(&s.backoff);
            prop_assert_eq!(&all, g.vertex_set());
            for i in s.blocked.iter() {
                let nb = g.neighbors(i + 1).unwrap();
                prop_assert!(nb.iter().any(|&j| s.active.contains(j - 1)));
            }
            for i in s.backoff.iter() {
                let nb = g.neighbors(i + 1).unwrap();
                prop_assert!(nb.iter().all(|&j| !s.active.contains(j - 1)));
            }
        }
    }

    #[test]
    fn mis_statistics_match_brute_force(g in arb_graph(11)) {
        let fam = enumerate_state_space(&g).unwrap();
        let (alpha, eta, eta_i) = brute_mis(&g);
        prop_assert_eq!(fam.alpha(), alpha);
        prop_assert_eq!(fam.eta(), eta);
        prop_assert_eq!(fam.eta_i(), &eta_i[..]);
        prop_assert_eq!(eta_i.iter().sum::<u64>(), alpha as u64 * eta);
    }

    #[test]
    fn logical_is_subgraph_of_physical(g in arb_graph(10), seed in any::<u64>(), m in 1usize..4) {
        use rand::Rng;
        let mut r = rng(seed);
        let c: Vec<usize> = (0..g.n_cells()).map(|_| r.gen_range(1..=m)).collect();
        let c = ChannelAssignment::new(c, m).unwrap();
        let l = logical_graph(&g, &c).unwrap();
        prop_assert_eq!(l.kind(), GraphKind::Logical);
        for (i, j) in l.edges() {
            prop_assert!(g.has_edge(i, j));
            prop_assert_eq!(c.channels()[i - 1], c.channels()[j - 1]);
        }
        for (i, j) in g.edges() {
            if c.channels()[i - 1] == c.channels()[j - 1] {
                prop_assert!(l.has_edge(i, j));
            }
        }
    }

    #[test]
    fn greedy_set_is_maximal(g in arb_graph(12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order = g.vertices();
        order.shuffle(&mut rng(seed));
        let chosen = maximal_independent_set(&g, &order).unwrap();
        let set = CellSet::from_indices(g.n_cells(), chosen.iter().map(|i| i - 1));
        prop_assert!(g.is_independent(&set));
        for v in g.vertices() {
            if !set.contains(v - 1) {
                let mut bigger = set.clone();
                bigger.insert(v - 1);
                prop_assert!(!g.is_independent(&bigger));
            }
        }
    }

    #[test]
    fn closed_neighbourhood_removal(g in arb_graph(10), k in 0usize..10) {
        let i = k % g.n_cells() + 1;
        let gi = closed_neighborhood_subgraph(&g, i).unwrap();
        let nb = g.neighbors(i).unwrap();
        for v in 1..=g.n_cells() {
            let removed = v == i || nb.contains(&v);
            prop_assert_eq!(gi.contains(v), !removed);
        }
        for (a, b) in gi.edges() {
            prop_assert!(g.has_edge(a, b));
        }
    }
}

#[test]
fn states_in_canonical_order() {
    let g = ContentionGraph::path(4);
    let fam = enumerate_state_space(&g).unwrap();
    let ids: Vec<Vec<usize>> = fam.states().iter().map(|s| s.active.ids()).collect();
    assert_eq!(
        ids,
        vec![
            vec![],
            vec![1],
            vec![2],
            vec![3],
            vec![4],
            vec![1, 3],
            vec![1, 4],
            vec![2, 4]
        ]
    );
}

#[test]
fn hex7_wheel_statistics() {
    let t = fixture("hex7").unwrap();
    let g = &t.physical;
    assert_eq!(g.degree(1), 6);
    for i in 2..=7 {
        assert_eq!(g.degree(i), 3);
    }
    let fam = enumerate_state_space(g).unwrap();
    assert_eq!(fam.alpha(), 3);
    assert_eq!(fam.eta(), 2);
    assert_eq!(fam.eta_of(1), 0);
}

#[test]
fn arbitrary7_mis_oracle() {
    let t = fixture("arbitrary7").unwrap();
    let mut edges = t.physical.edges();
    edges.sort_unstable();
    assert_eq!(edges, ARBITRARY7_EDGES.to_vec());
    let (alpha, eta, eta_i) = brute_mis(&t.physical);
    assert_eq!((alpha, eta), (4, 3));
    assert_eq!(eta_i, vec![3, 3, 0, 1, 2, 1, 2]);
    let fam = enumerate_state_space(&t.physical).unwrap();
    assert_eq!(fam.eta_i(), &eta_i[..]);
}

#[test]
fn geometry_threshold_is_inclusive() {
    let cells = [
        CellSpec::at(1, 1, 0.0, 0.0),
        CellSpec::at(2, 1, 150.0, 0.0),
        CellSpec::at(3, 1, 0.0, 150.1),
    ];
    let g = build_physical_graph(&cells, 150.0).unwrap();
    assert_eq!(g.edges(), vec![(1, 2)]);
}

#[test]
fn budget_exceeded_is_reported() {
    let g = ContentionGraph::edgeless(20);
    let budget = EnumerationBudget {
        max_vertices: 25,
        max_states: 1000,
    };
    assert!(matches!(
        enumerate_state_space_with(&g, budget),
        Err(cellnet::ModelError::BudgetExceeded { .. })
    ));
    assert!(matches!(
        enumerate_state_space(&ContentionGraph::edgeless(26)),
        Err(cellnet::ModelError::BudgetExceeded { .. })
    ));
}
