//! Event-driven Monte Carlo simulation of the cell activity process.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::error::{ModelError, Result};
use crate::topology::ContentionGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ActiveTimeDistribution {
    #[default]
    Exponential,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Simulated time in seconds, warmup included.
    pub horizon: f64,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub active_time_distribution: ActiveTimeDistribution,
    /// Equal-length time batches used for the standard errors.
    pub batches: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 10.0,
            seed: 1,
            warmup_fraction: 0.1,
            active_time_distribution: ActiveTimeDistribution::Exponential,
            batches: 50,
        }
    }
}

/// Time-weighted occupancy estimates with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Visited states in canonical order.
    pub states: Vec<CellSet>,
    pub pi_hat: Vec<f64>,
    pub pi_se: Vec<f64>,
    /// Per 0-based cell.
    pub x_hat: Vec<f64>,
    pub x_se: Vec<f64>,
    pub total_events: u64,
    /// Occupancy fractions of each batch, aligned with `states`.
    pub batch_pi: Vec<Vec<f64>>,
    graph: ContentionGraph,
}

impl SimEstimate {
    /// Estimated probability of the state with active set `s` (0 if never visited).
    pub fn pi_hat_of(&self, s: &CellSet) -> f64 {
        self.states
            .binary_search(s)
            .map(|k| self.pi_hat[k])
            .unwrap_or(0.0)
    }

    pub fn pi_se_of(&self, s: &CellSet) -> f64 {
        self.states
            .binary_search(s)
            .map(|k| self.pi_se[k])
            .unwrap_or(0.0)
    }

    fn from_batches(
        graph: &ContentionGraph,
        mut states: Vec<CellSet>,
        mut batch_pi: Vec<Vec<f64>>,
        total_events: u64,
    ) -> Self {
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by(|&a, &b| states[a].cmp(&states[b]));
        states = order.iter().map(|&k| states[k].clone()).collect();
        for row in batch_pi.iter_mut() {
            row.resize(order.len(), 0.0);
            *row = order.iter().map(|&k| row[k]).collect();
        }

        let unblocked: Vec<CellSet> = states
            .iter()
            .map(|a| {
                let mut blocked = CellSet::empty(graph.n_cells());
                for i in a.iter() {
                    blocked.union_with(graph.adj(i));
                }
                blocked.difference_with(a);
                let mut u = graph.vertex_set().clone();
                u.difference_with(&blocked);
                u
            })
            .collect();
        let batch_x: Vec<Vec<f64>> = batch_pi
            .iter()
            .map(|row| {
                let mut x = vec![0.0; graph.n_cells()];
                for (p, u) in row.iter().zip(&unblocked) {
                    for i in u.iter() {
                        x[i] += p;
                    }
                }
                x
            })
            .collect();
        let (pi_hat, pi_se) = mean_and_se(&batch_pi, states.len());
        let (x_hat, x_se) = mean_and_se(&batch_x, graph.n_cells());
        SimEstimate {
            states,
            pi_hat,
            pi_se,
            x_hat,
            x_se,
            total_events,
            batch_pi,
            graph: graph.clone(),
        }
    }
}

fn mean_and_se(rows: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let b = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / b;
        }
    }
    let mut se = vec![0.0; width];
    if rows.len() > 1 {
        for (k, s) in se.iter_mut().enumerate() {
            let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (b - 1.0);
            *s = (var / b).sqrt();
        }
    }
    (mean, se)
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Simulates the chain in which every cell in backoff activates at rate
/// `lambda[i]` and every active cell releases the channel after a holding
/// time of mean `1/mu[i]`. Rates are indexed by 0-based cell.
pub fn simulate(
    graph: &ContentionGraph,
    lambda: &[f64],
    mu: &[f64],
    cfg: &SimConfig,
) -> Result<SimEstimate> {
    let n = graph.n_cells();
    if lambda.len() != n || mu.len() != n {
        return Err(ModelError::LengthMismatch {
            expected: n,
            found: lambda.len().min(mu.len()),
        });
    }
    if !(cfg.horizon > 0.0) || !(0.0..1.0).contains(&cfg.warmup_fraction) || cfg.batches == 0 {
        return Err(ModelError::InvalidParameter(
            "horizon must be positive, warmup in [0,1), batches >= 1".into(),
        ));
    }
    for v in graph.vertices() {
        let i = v - 1;
        if lambda[i] < 0.0 || !(mu[i] > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "cell {v}: need lambda >= 0 and mu > 0"
            )));
        }
    }

    let mut act_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    act_rng.set_stream(0);
    let mut cell_rng: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64 + 1);
            r
        })
        .collect();

    let t0 = cfg.horizon * cfg.warmup_fraction;
    let batch_len = (cfg.horizon - t0) / cfg.batches as f64;
    let mut index: HashMap<CellSet, usize> = HashMap::new();
    let mut states: Vec<CellSet> = Vec::new();
    let mut batch_pi = vec![Vec::<f64>::new(); cfg.batches];

    let mut active = CellSet::empty(n);
    let mut blockers = vec![0u32; n];
    let mut ends: Vec<f64> = vec![f64::INFINITY; n];
    let mut t = 0.0;
    let mut events = 0u64;

    let mut record = |state: &CellSet, from: f64, to: f64| {
        let (a, b) = (from.max(t0), to.min(cfg.horizon));
        if b <= a {
            return;
        }
        let k = *index.entry(state.clone()).or_insert_with(|| {
            states.push(state.clone());
            states.len() - 1
        });
        let first = (((a - t0) / batch_len) as usize).min(cfg.batches - 1);
        let last = (((b - t0) / batch_len) as usize).min(cfg.batches - 1);
        for (j, row) in batch_pi.iter_mut().enumerate().take(last + 1).skip(first) {
            let lo = a.max(t0 + j as f64 * batch_len);
            let hi = b.min(t0 + (j + 1) as f64 * batch_len);
            if hi > lo {
                if row.len() <= k {
                    row.resize(k + 1, 0.0);
                }
                row[k] += (hi - lo) / batch_len;
            }
        }
    };

    while t < cfg.horizon {
        let backoff: Vec<usize> = graph
            .vertex_set()
            .iter()
            .filter(|&i| blockers[i] == 0 && !active.contains(i))
            .collect();
        let total: f64 = backoff.iter().map(|&j| lambda[j]).sum();
        let next_act = if total > 0.0 {
            t + exp_sample(&mut act_rng, total)
        } else {
            f64::INFINITY
        };
        let (end_cell, next_end) =
            active
                .iter()
                .map(|i| (i, ends[i]))
                .fold((usize::MAX, f64::INFINITY), |acc, e| {
                    if e.1 < acc.1 {
                        e
                    } else {
                        acc
                    }
                });
        let next = next_act.min(next_end);
        if !next.is_finite() {
            return Err(ModelError::ZeroRate(active.ids()));
        }
        record(&active, t, next);
        t = next;
        if t >= cfg.horizon {
            break;
        }
        events += 1;
        if next_end <= next_act {
            active.remove(end_cell);
            ends[end_cell] = f64::INFINITY;
            for j in graph.adj(end_cell).iter() {
                blockers[j] -= 1;
            }
        } else {
            let mut pick = act_rng.gen::<f64>() * total;
            let mut chosen = *backoff.last().expect("positive rate implies a candidate");
            for &j in &backoff {
                if pick < lambda[j] {
                    chosen = j;
                    break;
                }
                pick -= lambda[j];
            }
            active.insert(chosen);
            for j in graph.adj(chosen).iter() {
                blockers[j] += 1;
            }
            let hold = match cfg.active_time_distribution {
                ActiveTimeDistribution::Exponential => {
                    exp_sample(&mut cell_rng[chosen], mu[chosen])
                }
                ActiveTimeDistribution::Deterministic => 1.0 / mu[chosen],
            };
            ends[chosen] = t + hold;
        }
    }

    Ok(SimEstimate::from_batches(graph, states, batch_pi, events))
}

/// Runs one simulation per seed and pools their batches.
pub fn simulate_replications(
    graph: &ContentionGraph,
    lambda: &[f64],
    mu: &[f64],
    cfg: &SimConfig,
    seeds: &[u64],
) -> Result<SimEstimate> {
    let run = |&seed: &u64| simulate(graph, lambda, mu, &SimConfig { seed, ..*cfg });
    #[cfg(feature = "parallel")]
    let runs: Vec<SimEstimate> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<SimEstimate> = seeds.iter().map(run).collect::<Result<_>>()?;

    let mut index: HashMap<CellSet, usize> = HashMap::new();
    let mut states: Vec<CellSet> = Vec::new();
    let mut batch_pi = Vec::new();
    let mut events = 0;
    for r in runs {
        events += r.total_events;
        let map: Vec<usize> = r
            .states
            .iter()
            .map(|s| {
                *index.entry(s.clone()).or_insert_with(|| {
                    states.push(s.clone());
                    states.len() - 1
                })
            })
            .collect();
        for row in r.batch_pi {
            let mut out = vec![0.0; states.len()];
            for (k, v) in row.into_iter().enumerate() {
                out[map[k]] = v;
            }
            batch_pi.push(out);
        }
    }
    Ok(SimEstimate::from_batches(graph, states, batch_pi, events))
}

/// Expected number of transitions per second, `Σ_A π(A) (Σ_{j∈U_A} λ_j + Σ_{i∈A} μ_i)`.
pub fn expected_event_rate(
    family: &crate::topology::IndependentSetFamily,
    pi: &[f64],
    lambda: &[f64],
    mu: &[f64],
) -> f64 {
    family
        .states()
        .iter()
        .zip(pi)
        .map(|(s, p)| {
            let up: f64 = s.backoff.iter().map(|j| lambda[j]).sum();
            let down: f64 = s.active.iter().map(|i| mu[i]).sum();
            p * (up + down)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let g = ContentionGraph::edgeless(1);
        let cfg = SimConfig {
            horizon: 1e4,
            seed: 3,
            ..Default::default()
        };
        let est = simulate(&g, &[1.0], &[1.0], &cfg).unwrap();
        assert!((est.x_hat[0] - 1.0).abs() < 1e-12);
        let on = est.pi_hat_of(&CellSet::from_indices(1, [0]));
        assert!((on - 0.5).abs() < 0.01, "{on}");
        assert!((est.pi_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reproducible() {
        let g = ContentionGraph::path(3);
        let cfg = SimConfig {
            horizon: 200.0,
            seed: 9,
            ..Default::default()
        };
        let a = simulate(&g, &[1.0, 2.0, 3.0], &[1.0; 3], &cfg).unwrap();
        let b = simulate(&g, &[1.0, 2.0, 3.0], &[1.0; 3], &cfg).unwrap();
        assert_eq!(a, b);
    }
}
