//! Multi-cell fixed point over the cell-level product-form chain.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::dcf::{self, g_of, mean_backoffs, MacParams};
use crate::error::{ModelError, Result};
use crate::topology::{
    closed_neighborhood_subgraph, enumerate_state_space_with, validate_cells, CellSpec,
    ContentionGraph, EnumerationBudget, IndependentSetFamily,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TrafficMode {
    #[default]
    #[serde(rename = "sat", alias = "saturated")]
    Saturated,
    #[serde(rename = "tcp", alias = "tcp_download")]
    TcpDownload,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub budget: EnumerationBudget,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            damping: dcf::DAMPING,
            tolerance: dcf::TOLERANCE,
            max_iterations: dcf::MAX_ITERATIONS,
            budget: EnumerationBudget::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiCellProblem {
    pub graph: ContentionGraph,
    pub cells: Vec<CellSpec>,
    pub mac: MacParams,
    pub traffic_mode: TrafficMode,
    pub options: SolverOptions,
}

impl MultiCellProblem {
    pub fn new(
        graph: ContentionGraph,
        cells: Vec<CellSpec>,
        mac: MacParams,
        traffic_mode: TrafficMode,
    ) -> Result<Self> {
        validate_cells(&cells)?;
        if graph.n_cells() != cells.len() {
            return Err(ModelError::LengthMismatch {
                expected: graph.n_cells(),
                found: cells.len(),
            });
        }
        mac.validate()?;
        Ok(MultiCellProblem {
            graph,
            cells,
            mac,
            traffic_mode,
            options: SolverOptions::default(),
        })
    }

    /// Node counts and MAC parameters the saturated analysis actually runs on.
    pub fn effective(&self) -> (Vec<u32>, MacParams) {
        match self.traffic_mode {
            TrafficMode::Saturated => (
                self.cells.iter().map(|c| c.n_nodes).collect(),
                self.mac.clone(),
            ),
            TrafficMode::TcpDownload => {
                let (n, eff) = dcf::tcp_equivalent_cell(&self.mac);
                (vec![n; self.cells.len()], eff)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    /// Node count per cell used by the analysis (2 for every cell in TCP mode).
    pub n_eff: Vec<u32>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Cells that are never in backoff; their γ is reported as 1.
    pub starved: Vec<bool>,
    pub lambda: Vec<f64>,
    pub mu_inv: Vec<f64>,
    pub rho: Vec<f64>,
    pub family: IndependentSetFamily,
    /// Stationary probability of each state of `family`, same order.
    pub pi: Vec<f64>,
    pub x: Vec<f64>,
    pub x_inf: Vec<f64>,
    /// Θ_{n,singlecell} for each cell's effective node count.
    pub theta_single: Vec<f64>,
    pub theta_cell: Vec<f64>,
    pub theta_node: Vec<f64>,
    pub theta_node_inf: Vec<f64>,
    pub theta_bar: f64,
    pub theta_bar_inf: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl FixedPointSolution {
    /// Stationary probability of the state whose active set is `ids`.
    pub fn pi_of(&self, ids: &[usize]) -> Option<f64> {
        let n = self.family.graph().n_cells();
        let target = CellSet::from_indices(n, ids.iter().map(|&i| i.wrapping_sub(1)));
        self.family
            .states()
            .iter()
            .position(|s| s.active == target)
            .map(|k| self.pi[k])
    }

    pub fn mu(&self) -> Vec<f64> {
        self.mu_inv.iter().map(|m| 1.0 / m).collect()
    }

    pub fn jain(&self) -> (f64, bool) {
        jain_fairness(&self.x)
    }
}

/// λ_i: cell activation rate out of backoff, per second.
pub fn activation_rate(beta: f64, n: u32, sigma: f64) -> f64 {
    (1.0 - (1.0 - beta).powi(n as i32)) / sigma
}

/// 1/μ_i: mean channel holding time of an activation, seconds.
pub fn mean_active_duration(beta: f64, n: u32, t_s: f64, t_c: f64) -> f64 {
    if beta <= 0.0 || n == 1 {
        return t_s;
    }
    let p_tr = 1.0 - (1.0 - beta).powi(n as i32);
    let p_succ = n as f64 * beta * (1.0 - beta).powi(n as i32 - 1) / p_tr;
    p_succ * t_s + (1.0 - p_succ) * t_c
}

/// Product-form π over the states of `family`; `rho` is indexed by 0-based cell.
pub fn stationary_distribution(family: &IndependentSetFamily, rho: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = family
        .states()
        .iter()
        .map(|s| s.active.iter().map(|j| rho[j]).product())
        .collect();
    let total: f64 = w.iter().sum();
    if total.is_finite() && total > 0.0 {
        return w.into_iter().map(|v| v / total).collect();
    }
    // Products overflowed: redo in log space.
    let lw: Vec<f64> = family
        .states()
        .iter()
        .map(|s| s.active.iter().map(|j| rho[j].ln()).sum())
        .collect();
    let top = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Per-cell conditional collision probability and the starved flag.
pub fn collision_probabilities(
    family: &IndependentSetFamily,
    pi: &[f64],
    beta: &[f64],
    n_nodes: &[u32],
) -> (Vec<f64>, Vec<bool>) {
    let g = family.graph();
    let n = g.n_cells();
    let idle: Vec<f64> = (0..n)
        .map(|j| (1.0 - beta[j]).powi(n_nodes[j] as i32))
        .collect();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (s, &p) in family.states().iter().zip(pi) {
        for i in s.backoff.iter() {
            let mut clear = (1.0 - beta[i]).powi(n_nodes[i] as i32 - 1);
            for j in g.adj(i).iter() {
                if s.backoff.contains(j) {
                    clear *= idle[j];
                }
            }
            num[i] += p * (1.0 - clear);
            den[i] += p;
        }
    }
    let mut gamma = vec![0.0; n];
    let mut starved = vec![false; n];
    for i in family.graph().vertex_set().iter() {
        if den[i] < 1e-300 {
            gamma[i] = 1.0;
            starved[i] = true;
        } else {
            gamma[i] = num[i] / den[i];
        }
    }
    (gamma, starved)
}

/// x_i = Σ π(A) over states in which cell i is active or in backoff.
pub fn unblocked_fractions_direct(family: &IndependentSetFamily, pi: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; family.graph().n_cells()];
    for (s, &p) in family.states().iter().zip(pi) {
        for i in s.active.iter().chain(s.backoff.iter()) {
            x[i] += p;
        }
    }
    x
}

/// x_i = (1 + ρ_i) Δ_i / Δ, with Δ_i taken over the graph left after
/// removing cell i and its neighbours.
pub fn unblocked_fractions_theorem1(g: &ContentionGraph, rho: &[f64]) -> Result<Vec<f64>> {
    unblocked_fractions_theorem1_with(g, rho, EnumerationBudget::default())
}

pub fn unblocked_fractions_theorem1_with(
    g: &ContentionGraph,
    rho: &[f64],
    budget: EnumerationBudget,
) -> Result<Vec<f64>> {
    let delta = enumerate_state_space_with(g, budget)?.delta(rho);
    let mut x = vec![0.0; g.n_cells()];
    for id in g.vertices() {
        let gi = closed_neighborhood_subgraph(g, id)?;
        let delta_i = enumerate_state_space_with(&gi, budget)?.delta(rho);
        x[id - 1] = (1.0 + rho[id - 1]) * delta_i / delta;
    }
    Ok(x)
}

/// Θ_i = x_i Θ_{n_i,singlecell} and θ_i = Θ_i / n_i.
pub fn cell_throughputs(
    x: &[f64],
    n_nodes: &[u32],
    mac: &MacParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let single = single_cell_table(n_nodes, mac)?;
    let cell: Vec<f64> = x.iter().zip(&single).map(|(x, s)| x * s).collect();
    let node = cell
        .iter()
        .zip(n_nodes)
        .map(|(c, &n)| c / n as f64)
        .collect();
    Ok((cell, node))
}

fn single_cell_table(n_nodes: &[u32], mac: &MacParams) -> Result<Vec<f64>> {
    let mut cache: HashMap<u32, f64> = HashMap::new();
    n_nodes
        .iter()
        .map(|&n| {
            if let Some(&v) = cache.get(&n) {
                return Ok(v);
            }
            let v = dcf::single_cell_throughput(n, mac)?;
            cache.insert(n, v);
            Ok(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeRhoLimits {
    /// η_i / η per 0-based cell (0 for cells outside the graph).
    pub x_inf: Vec<f64>,
    /// α(G).
    pub theta_bar_inf: f64,
}

pub fn large_rho_limits(family: &IndependentSetFamily) -> LargeRhoLimits {
    let eta = family.eta() as f64;
    LargeRhoLimits {
        x_inf: family.eta_i().iter().map(|&e| e as f64 / eta).collect(),
        theta_bar_inf: family.alpha() as f64,
    }
}

/// Jain's index `(Σx)² / (N Σx²)`. The second value is true when every x is
/// zero, in which case the index is reported as 1.
pub fn jain_fairness(x: &[f64]) -> (f64, bool) {
    let s: f64 = x.iter().sum();
    let s2: f64 = x.iter().map(|v| v * v).sum();
    if s2 == 0.0 {
        return (1.0, true);
    }
    (s * s / (x.len() as f64 * s2), false)
}

/// Largest relative violation of `π(A) λ_i = π(A ∪ {i}) μ_i` over all states
/// and all cells in backoff.
pub fn detailed_balance_residual(
    family: &IndependentSetFamily,
    pi: &[f64],
    lambda: &[f64],
    mu: &[f64],
) -> f64 {
    let index: HashMap<&CellSet, usize> = family
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| (&s.active, k))
        .collect();
    let mut worst: f64 = 0.0;
    for (k, s) in family.states().iter().enumerate() {
        for i in s.backoff.iter() {
            let mut up = s.active.clone();
            up.insert(i);
            let Some(&u) = index.get(&up) else {
                return f64::INFINITY;
            };
            let a = pi[k] * lambda[i];
            let b = pi[u] * mu[i];
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

struct Rates {
    lambda: Vec<f64>,
    mu_inv: Vec<f64>,
    rho: Vec<f64>,
}

fn rates(beta: &[f64], n_nodes: &[u32], mac: &MacParams) -> Rates {
    let d = dcf::frame_durations(mac);
    let lambda: Vec<f64> = beta
        .iter()
        .zip(n_nodes)
        .map(|(&b, &n)| activation_rate(b, n, mac.slot_time))
        .collect();
    let mu_inv: Vec<f64> = beta
        .iter()
        .zip(n_nodes)
        .map(|(&b, &n)| mean_active_duration(b, n, d.t_s, d.t_c))
        .collect();
    let rho = lambda.iter().zip(&mu_inv).map(|(l, m)| l * m).collect();
    Rates {
        lambda,
        mu_inv,
        rho,
    }
}

/// Solves the N-cell fixed point `β = G(γ(β))` by damped iteration from
/// `β_i = G(0)` and evaluates all derived quantities at the solution.
pub fn solve_fixed_point(problem: &MultiCellProblem) -> Result<FixedPointSolution> {
    let opts = problem.options;
    let (n_eff, mac) = problem.effective();
    let family = enumerate_state_space_with(&problem.graph, opts.budget)?;
    let b = mean_backoffs(&mac);
    let n = problem.cells.len();

    let gamma_of = |beta: &[f64]| {
        let r = rates(beta, &n_eff, &mac);
        let pi = stationary_distribution(&family, &r.rho);
        collision_probabilities(&family, &pi, beta, &n_eff).0
    };

    let mut beta = vec![g_of(0.0, &b); n];
    let mut iterations = 0;
    let mut tail: Vec<f64> = Vec::new();
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let gamma = gamma_of(&beta);
        let mut step: f64 = 0.0;
        for i in 0..n {
            let next = (1.0 - opts.damping) * beta[i] + opts.damping * g_of(gamma[i], &b);
            step = step.max((next - beta[i]).abs());
            beta[i] = next;
        }
        if opts.max_iterations - iterations < 8 {
            tail.push(step);
        }
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }

    let r = rates(&beta, &n_eff, &mac);
    let pi = stationary_distribution(&family, &r.rho);
    let (gamma, starved) = collision_probabilities(&family, &pi, &beta, &n_eff);
    let residual = beta
        .iter()
        .zip(&gamma)
        .map(|(bi, gi)| (bi - g_of(*gi, &b)).abs())
        .fold(0.0, f64::max);
    if !converged {
        return Err(ModelError::NonConvergence {
            iterations,
            residual,
            tail,
        });
    }

    let x = unblocked_fractions_direct(&family, &pi);
    let limits = large_rho_limits(&family);
    let theta_single = single_cell_table(&n_eff, &mac)?;
    let theta_cell: Vec<f64> = x.iter().zip(&theta_single).map(|(a, s)| a * s).collect();
    let per_node =
        |v: &[f64]| -> Vec<f64> { v.iter().zip(&n_eff).map(|(c, &k)| c / k as f64).collect() };
    let theta_node = per_node(&theta_cell);
    let theta_cell_inf: Vec<f64> = limits
        .x_inf
        .iter()
        .zip(&theta_single)
        .map(|(a, s)| a * s)
        .collect();
    let theta_node_inf = per_node(&theta_cell_inf);

    Ok(FixedPointSolution {
        n_eff,
        beta,
        gamma,
        starved,
        lambda: r.lambda,
        mu_inv: r.mu_inv,
        rho: r.rho,
        theta_bar: x.iter().sum(),
        theta_bar_inf: limits.theta_bar_inf,
        family,
        pi,
        x,
        x_inf: limits.x_inf,
        theta_single,
        theta_cell,
        theta_node,
        theta_node_inf,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::enumerate_state_space;

    #[test]
    fn activation_rate_arithmetic() {
        assert_eq!(activation_rate(0.0, 4, 20e-6), 0.0);
        assert!((activation_rate(0.3, 1, 20e-6) - 0.3 / 20e-6).abs() < 1e-9);
        let want = (1.0 - 0.95f64.powi(5)) / 2e-5;
        assert!((activation_rate(0.05, 5, 20e-6) - want).abs() < 1e-9);
        assert!((want - 11_309.0).abs() < 5.0);
    }

    #[test]
    fn active_duration_limits() {
        assert!((mean_active_duration(0.2, 1, 3.0, 1.0) - 3.0).abs() < 1e-15);
        assert_eq!(mean_active_duration(0.0, 4, 3.0, 1.0), 3.0);
        assert!((mean_active_duration(1.0 - 1e-12, 3, 3.0, 1.0) - 1.0).abs() < 1e-9);
        let ps = 5.0 * 0.05 * 0.95f64.powi(4) / (1.0 - 0.95f64.powi(5));
        assert!((ps - 0.900_13).abs() < 1e-5);
        assert!((mean_active_duration(0.05, 5, 3.0, 1.0) - (ps * 3.0 + (1.0 - ps))).abs() < 1e-12);
    }

    #[test]
    fn path4_unit_rho() {
        let f = enumerate_state_space(&ContentionGraph::path(4)).unwrap();
        let pi = stationary_distribution(&f, &[1.0; 4]);
        assert!((pi[0] - 0.125).abs() < 1e-15);
        let x = unblocked_fractions_direct(&f, &pi);
        assert!((x[0] - 0.75).abs() < 1e-15);
        let t = unblocked_fractions_theorem1(&ContentionGraph::path(4), &[1.0; 4]).unwrap();
        for (a, b) in x.iter().zip(&t) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn overflowing_weights_fall_back_to_logs() {
        let f = enumerate_state_space(&ContentionGraph::edgeless(3)).unwrap();
        let pi = stationary_distribution(&f, &[1e200; 3]);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((pi[pi.len() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jain_edges() {
        let (j, flag) = jain_fairness(&[0.3, 0.3, 0.3]);
        assert!((j - 1.0).abs() < 1e-15 && !flag);
        assert_eq!(jain_fairness(&[1.0, 0.0]), (0.5, false));
        assert_eq!(jain_fairness(&[0.0, 0.0]), (1.0, true));
    }

    #[test]
    fn starved_cell_is_flagged() {
        let f = enumerate_state_space(&ContentionGraph::path(3)).unwrap();
        // Cell 2 is blocked whenever cell 1 or cell 3 holds the channel.
        let mut pi = vec![0.0; f.len()];
        for s in [vec![1], vec![3]] {
            let k = f
                .states()
                .iter()
                .position(|st| st.active.ids() == s)
                .unwrap();
            pi[k] = 0.5;
        }
        let (g, starved) = collision_probabilities(&f, &pi, &[0.1; 3], &[2; 3]);
        assert_eq!(starved, vec![false, true, false]);
        assert_eq!(g[1], 1.0);
    }
}
