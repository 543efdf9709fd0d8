use cellnet::ctmc_sim::*;
use cellnet::multicell::{stationary_distribution, unblocked_fractions_direct};
use cellnet::topology::{enumerate_state_space, ContentionGraph, GraphKind};
use cellnet::CellSet;

fn z(a: f64, b: f64, se: f64) -> f64 {
    (a - b).abs() / se
}

#[test]
fn path4_unit_rates_match_product_form() {
    let g = ContentionGraph::path(4);
    let cfg = SimConfig {
        horizon: 2e4,
        seed: 11,
        ..Default::default()
    };
    let est = simulate(&g, &[1.0; 4], &[1.0; 4], &cfg).unwrap();
    let empty = CellSet::empty(4);
    assert!(z(est.pi_hat_of(&empty), 0.125, est.pi_se_of(&empty)) < 4.0);
    // x_1 = 0.75 at unit ρ
    assert!(z(est.x_hat[0], 0.75, est.x_se[0]) < 4.0);
    assert_eq!(est.states.len(), 8);
    assert!((est.pi_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn unequal_rates_match_product_form() {
    let g =
        ContentionGraph::new(5, &[(1, 2), (2, 3), (3, 4), (1, 5)], GraphKind::Physical).unwrap();
    let lambda = [2.0, 0.5, 3.0, 1.0, 0.7];
    let mu = [1.0, 2.0, 1.5, 0.5, 1.0];
    let rho: Vec<f64> = lambda.iter().zip(&mu).map(|(l, m)| l / m).collect();
    let fam = enumerate_state_space(&g).unwrap();
    let pi = stationary_distribution(&fam, &rho);
    let x = unblocked_fractions_direct(&fam, &pi);
    let cfg = SimConfig {
        horizon: 3e4,
        seed: 5,
        ..Default::default()
    };
    let est = simulate(&g, &lambda, &mu, &cfg).unwrap();
    for (s, p) in fam.states().iter().zip(&pi) {
        let se = est.pi_se_of(&s.active);
        assert!(z(est.pi_hat_of(&s.active), *p, se) < 4.5, "{:?}", s.active);
    }
    for i in 0..5 {
        assert!(z(est.x_hat[i], x[i], est.x_se[i]) < 4.5);
    }
}

#[test]
fn deterministic_holding_times_give_same_occupancy() {
    let g = ContentionGraph::path(3);
    let lambda = [1.0, 2.0, 0.5];
    let mu = [1.0; 3];
    let base = SimConfig {
        horizon: 3e4,
        seed: 8,
        ..Default::default()
    };
    let e = simulate(&g, &lambda, &mu, &base).unwrap();
    let d = simulate(
        &g,
        &lambda,
        &mu,
        &SimConfig {
            active_time_distribution: ActiveTimeDistribution::Deterministic,
            ..base
        },
    )
    .unwrap();
    for i in 0..3 {
        let se = (e.x_se[i].powi(2) + d.x_se[i].powi(2)).sqrt();
        assert!(z(e.x_hat[i], d.x_hat[i], se) < 4.0);
    }
}

#[test]
fn replications_pool_batches() {
    let g = ContentionGraph::path(3);
    let cfg = SimConfig {
        horizon: 500.0,
        batches: 10,
        ..Default::default()
    };
    let r = simulate_replications(&g, &[1.0; 3], &[1.0; 3], &cfg, &[1, 2, 3]).unwrap();
    assert_eq!(r.batch_pi.len(), 30);
    let one = simulate(&g, &[1.0; 3], &[1.0; 3], &SimConfig { seed: 2, ..cfg }).unwrap();
    assert!(r.total_events > 2 * one.total_events);
}

#[test]
fn event_rate_prediction() {
    let g = ContentionGraph::path(4);
    let fam = enumerate_state_space(&g).unwrap();
    let pi = stationary_distribution(&fam, &[1.0; 4]);
    let rate = expected_event_rate(&fam, &pi, &[1.0; 4], &[1.0; 4]);
    // outgoing rates: {} 4; {1} 3; {2} 2; {3} 2; {4} 3; each pair 2
    let by_hand = (4.0 + 10.0 + 3.0 * 2.0) / 8.0;
    assert!((rate - by_hand).abs() < 1e-12);
    let cfg = SimConfig {
        horizon: 1e4,
        warmup_fraction: 0.0,
        ..Default::default()
    };
    let est = simulate(&g, &[1.0; 4], &[1.0; 4], &cfg).unwrap();
    let observed = est.total_events as f64 / 1e4;
    assert!((observed - rate).abs() / rate < 0.02);
}

#[test]
fn rejects_bad_input() {
    let g = ContentionGraph::path(2);
    let cfg = SimConfig::default();
    assert!(simulate(&g, &[1.0], &[1.0, 1.0], &cfg).is_err());
    assert!(simulate(&g, &[1.0, 1.0], &[0.0, 1.0], &cfg).is_err());
    let bad = SimConfig {
        horizon: -1.0,
        ..cfg
    };
    assert!(simulate(&g, &[1.0, 1.0], &[1.0, 1.0], &bad).is_err());
    assert!(matches!(
        simulate(&g, &[0.0, 0.0], &[1.0, 1.0], &cfg),
        Err(cellnet::ModelError::ZeroRate(_))
    ));
}
