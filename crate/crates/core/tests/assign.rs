mod common;

use cellnet::assign::*;
use cellnet::dcf::MacParams;
use cellnet::fixtures::{arbitrary7_local, arbitrary7_optimum, fixture};
use cellnet::multicell::TrafficMode;
use cellnet::topology::{logical_graph, ContentionGraph, EnumerationBudget};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_assignment(r: &mut impl Rng, n: usize, m: usize) -> ChannelAssignment {
    ChannelAssignment::new((0..n).map(|_| r.gen_range(1..=m)).collect(), m).unwrap()
}

/// Large-ρ utility by brute force on the logical graph.
fn utility_oracle(g: &ContentionGraph, c: &ChannelAssignment) -> f64 {
    let l = logical_graph(g, c).unwrap();
    let (_, eta, eta_i) = brute_mis(&l);
    eta_i.iter().map(|&k| k as f64 / eta as f64).sum::<f64>() / g.n_cells() as f64
}

fn arb_case() -> impl Strategy<Value = (ContentionGraph, ChannelAssignment)> {
    (1usize..=10, 0.0..0.8f64, 1usize..=4, any::<u64>()).prop_map(|(n, p, m, seed)| {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, p);
        let c = random_assignment(&mut r, n, m);
        (g, c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn utility_matches_brute_force((g, c) in arb_case()) {
        let u = utility_theta_bar(&g, &c).unwrap();
        prop_assert!((u - utility_oracle(&g, &c)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&u));
    }

    #[test]
    fn mask_path_matches_component_path((g, c) in arb_case()) {
        let budget = EnumerationBudget::default();
        let fast = theta_bar_inf_x(&g, &c, budget).unwrap();
        let slow = x_inf_by_components(&logical_graph(&g, &c).unwrap(), budget).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn utility_ignores_channel_names((g, c) in arb_case(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (1..=c.m()).collect();
        perm.shuffle(&mut rng(seed));
        let a = utility_theta_bar(&g, &c).unwrap();
        let b = utility_theta_bar(&g, &c.relabel(&perm)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn misa_output_is_structured_and_stable(n in 1usize..=10, p in 0.0..0.9f64, m in 1usize..=4, seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), n, p);
        let u = ThetaBarUtility { physical: g.clone() };
        for order in [OrderPolicy::Lexicographic, OrderPolicy::Random(seed)] {
            let c = misa(&g, m, order).unwrap();
            prop_assert!(misa_structure_ok(&g, &c));
            prop_assert!(is_nash_equilibrium(&g, &c, &u).unwrap().is_nash);
        }
    }
}

#[test]
fn automaton_rows_stay_stochastic() {
    let t = fixture("arbitrary7").unwrap();
    let u = ThetaBarUtility {
        physical: t.physical,
    };
    let mut state = LaState::uniform(7, 3, 0.05);
    let mut r = rng(4);
    for _ in 0..10_000 {
        lri_step(&mut state, &u, &mut r).unwrap();
        for row in &state.p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
    assert_eq!(state.step, 10_000);
}

#[test]
fn zero_reward_leaves_state_alone() {
    let mut s = LaState::uniform(3, 2, 0.1);
    let before = s.clone();
    s.update(&ChannelAssignment::uniform(3, 1, 2).unwrap(), 0.0)
        .unwrap();
    assert_eq!(s.p, before.p);
    assert!(s
        .update(&ChannelAssignment::uniform(3, 1, 2).unwrap(), 1.5)
        .is_err());
}

#[test]
fn reward_moves_toward_sample_by_hand() {
    let mut s = LaState::uniform(1, 2, 0.1);
    s.update(&ChannelAssignment::new(vec![2], 2).unwrap(), 0.5)
        .unwrap();
    assert!((s.p[0][1] - (0.5 + 0.05 * 0.5)).abs() < 1e-15);
    assert!((s.p[0][0] - 0.5 * 0.95).abs() < 1e-15);
}

#[test]
fn arbitrary7_reference_assignments() {
    let g = fixture("arbitrary7").unwrap().physical;
    let u = ThetaBarUtility {
        physical: g.clone(),
    };
    assert_eq!(u.eval(&arbitrary7_optimum()).unwrap(), 1.0);
    let local = arbitrary7_local();
    let r = is_nash_equilibrium(&g, &local, &u).unwrap();
    assert!((r.utility * 7.0 - 6.0).abs() < 1e-12);
    assert!(r.is_nash);
    let all_one = ChannelAssignment::uniform(7, 1, 2).unwrap();
    assert!((u.eval(&all_one).unwrap() * 7.0 - 4.0).abs() < 1e-12);
}

#[test]
fn search_dominates_heuristics() {
    for seed in 0..15 {
        let mut r = rng(seed);
        let n = r.gen_range(3..=8);
        let g = random_graph(&mut r, n, 0.5);
        let u = ThetaBarUtility {
            physical: g.clone(),
        };
        let (best, best_u) = exhaustive_search(&g, 2, &u, DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(is_nash_equilibrium(&g, &best, &u).unwrap().is_nash);
        for k in 0..(1u64 << n) {
            let c = ChannelAssignment::new(
                (0..n)
                    .map(|i| 1 + (k >> (n - 1 - i) & 1) as usize)
                    .collect(),
                2,
            )
            .unwrap();
            assert!(u.eval(&c).unwrap() <= best_u + 1e-12);
        }
        let m = misa(&g, 2, OrderPolicy::Lexicographic).unwrap();
        assert!(u.eval(&m).unwrap() <= best_u + 1e-12);
        let cfg = LriConfig {
            channels: 2,
            b: 0.05,
            seed,
            ..Default::default()
        };
        let out = run_lri(n, &cfg, None, &u).unwrap();
        assert!(out.converged);
        assert!(out.utility <= best_u + 1e-12);
        assert_eq!(out.trace.len() as u64, out.state.step);
    }
}

#[test]
fn search_tie_break_and_budget() {
    let g = ContentionGraph::edgeless(4);
    let u = ThetaBarUtility {
        physical: g.clone(),
    };
    let (c, v) = exhaustive_search(&g, 3, &u, DEFAULT_SEARCH_BUDGET).unwrap();
    assert_eq!(c.channels(), &[1, 1, 1, 1]);
    assert_eq!(v, 1.0);
    assert!(matches!(
        exhaustive_search(&g, 3, &u, 80),
        Err(cellnet::ModelError::BudgetExceeded { .. })
    ));
}

#[test]
fn enough_channels_colour_properly() {
    let g = fixture("hex7").unwrap().physical;
    let c = misa(&g, g.max_degree() + 1, OrderPolicy::Lexicographic).unwrap();
    assert_eq!(utility_theta_bar(&g, &c).unwrap(), 1.0);
    assert_eq!(logical_graph(&g, &c).unwrap().n_edges(), 0);
}

#[test]
fn lri_is_reproducible() {
    let g = fixture("path5").unwrap().physical;
    let u = ThetaBarUtility { physical: g };
    let cfg = LriConfig {
        channels: 2,
        b: 0.02,
        seed: 77,
        ..Default::default()
    };
    let a = run_lri(5, &cfg, None, &u).unwrap();
    let b = run_lri(5, &cfg, None, &u).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn finite_rho_utility_is_normalised() {
    let t = fixture("arbitrary7").unwrap();
    let u = FiniteRhoUtility {
        physical: t.physical,
        cells: t.cells,
        mac: MacParams::default(),
        mode: TrafficMode::Saturated,
    };
    let best = u.eval(&arbitrary7_optimum()).unwrap();
    let worst = u
        .eval(&ChannelAssignment::uniform(7, 1, 2).unwrap())
        .unwrap();
    assert!(best > worst);
    assert!(best <= 1.0 && worst > 0.0);
}

#[test]
fn closures_are_utilities() {
    let g = ContentionGraph::path(3);
    let u =
        |c: &ChannelAssignment| Ok(c.channels().iter().filter(|&&ch| ch == 2).count() as f64 / 3.0);
    let (c, v) = exhaustive_search(&g, 2, &u, 100).unwrap();
    assert_eq!(c.channels(), &[2, 2, 2]);
    assert_eq!(v, 1.0);
}

#[test]
fn bad_assignments_rejected() {
    assert!(ChannelAssignment::new(vec![1, 3], 2).is_err());
    assert!(ChannelAssignment::new(vec![0], 2).is_err());
    let g = ContentionGraph::path(3);
    let u = ThetaBarUtility {
        physical: g.clone(),
    };
    let c = ChannelAssignment::uniform(2, 1, 2).unwrap();
    assert!(is_nash_equilibrium(&g, &c, &u).is_err());
}
