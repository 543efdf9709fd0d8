//! Channel assignment: learning automata, mISA, Nash checks and brute force.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::dcf::MacParams;
use crate::error::{ModelError, Result};
use crate::multicell::{large_rho_limits, solve_fixed_point, MultiCellProblem, TrafficMode};
use crate::topology::{
    enumerate_state_space_with, logical_graph, maximal_independent_set, CellSpec, ContentionGraph,
    EnumerationBudget,
};

/// Channel per cell, 1-based, out of `m` channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelAssignment {
    channels: Vec<usize>,
    m: usize,
}

impl ChannelAssignment {
    pub fn new(channels: Vec<usize>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(ModelError::InvalidParameter(
                "need at least one channel".into(),
            ));
        }
        if let Some(&bad) = channels.iter().find(|&&c| c == 0 || c > m) {
            return Err(ModelError::InvalidParameter(format!(
                "channel {bad} outside 1..={m}"
            )));
        }
        Ok(ChannelAssignment { channels, m })
    }

    pub fn uniform(n: usize, channel: usize, m: usize) -> Result<Self> {
        Self::new(vec![channel; n], m)
    }

    /// Channels indexed by 0-based cell.
    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Same assignment with cell `id` moved to `channel`.
    pub fn with(&self, id: usize, channel: usize) -> Self {
        let mut c = self.clone();
        c.channels[id - 1] = channel;
        c
    }

    /// Channels relabelled through `perm`, where `perm[k-1]` is the new label of channel k.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        ChannelAssignment {
            channels: self.channels.iter().map(|&c| perm[c - 1]).collect(),
            m: self.m,
        }
    }
}

/// Objective for channel assignment, expected in `[0, 1]`.
pub trait Utility: Sync {
    fn eval(&self, c: &ChannelAssignment) -> Result<f64>;
}

impl<F> Utility for F
where
    F: Fn(&ChannelAssignment) -> Result<f64> + Sync,
{
    fn eval(&self, c: &ChannelAssignment) -> Result<f64> {
        self(c)
    }
}

/// Mean unblocked fraction under the large-ρ limit: every co-channel
/// component contributes η_i/η for each of its cells.
pub fn utility_theta_bar(physical: &ContentionGraph, c: &ChannelAssignment) -> Result<f64> {
    theta_bar_inf_x(physical, c, EnumerationBudget::default())
        .map(|x| x.iter().sum::<f64>() / x.len() as f64)
}

/// Per-cell large-ρ unblocked fractions on the logical graph of `c`.
pub fn theta_bar_inf_x(
    physical: &ContentionGraph,
    c: &ChannelAssignment,
    budget: EnumerationBudget,
) -> Result<Vec<f64>> {
    let logical = logical_graph(physical, c)?;
    if logical.n_cells() <= 64 {
        small_graph_x_inf(&logical, budget)
    } else {
        x_inf_by_components(&logical, budget)
    }
}

/// η_i/η of each cell within its connected component of `g`, computed from
/// the enumerated state space of every component.
pub fn x_inf_by_components(g: &ContentionGraph, budget: EnumerationBudget) -> Result<Vec<f64>> {
    let mut x = vec![0.0; g.n_cells()];
    for comp in g.components() {
        if comp.len() == 1 {
            x[comp.iter().next().unwrap()] = 1.0;
            continue;
        }
        let fam = enumerate_state_space_with(&g.induced(&comp), budget)?;
        let limits = large_rho_limits(&fam);
        for i in comp.iter() {
            x[i] = limits.x_inf[i];
        }
    }
    Ok(x)
}

/// Same result as the component-wise enumeration above, on `u64` masks.
fn small_graph_x_inf(g: &ContentionGraph, budget: EnumerationBudget) -> Result<Vec<f64>> {
    let n = g.n_cells();
    let adj: Vec<u64> = (0..n)
        .map(|i| g.adj(i).iter().fold(0u64, |m, j| m | 1 << j))
        .collect();
    let mut x = vec![0.0; n];
    let mut left = g.vertex_set().iter().fold(0u64, |m, i| m | 1 << i);
    while left != 0 {
        let mut comp = left & left.wrapping_neg();
        let mut frontier = comp;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[v] & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        left &= !comp;
        if comp.count_ones() == 1 {
            x[comp.trailing_zeros() as usize] = 1.0;
            continue;
        }
        if comp.count_ones() as usize > budget.max_vertices {
            return Err(ModelError::BudgetExceeded {
                what: format!("state-space enumeration on {} vertices", comp.count_ones()),
                limit: budget.max_vertices as u64,
            });
        }
        let mut stats = MisStats {
            alpha: 0,
            eta: 0,
            eta_i: [0; 64],
        };
        stats.visit(&adj, 0, 0, comp);
        for (i, xi) in x.iter_mut().enumerate() {
            if comp >> i & 1 == 1 {
                *xi = stats.eta_i[i] as f64 / stats.eta as f64;
            }
        }
    }
    Ok(x)
}

struct MisStats {
    alpha: u32,
    eta: u64,
    eta_i: [u64; 64],
}

impl MisStats {
    fn visit(&mut self, adj: &[u64], set: u64, size: u32, candidates: u64) {
        // Even taking every candidate cannot reach the current best.
        if size + candidates.count_ones() < self.alpha {
            return;
        }
        if candidates == 0 {
            if size > self.alpha {
                self.alpha = size;
                self.eta = 0;
                self.eta_i = [0; 64];
            }
            self.eta += 1;
            let mut s = set;
            while s != 0 {
                self.eta_i[s.trailing_zeros() as usize] += 1;
                s &= s - 1;
            }
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let rest = candidates & !(1 << v);
        self.visit(adj, set | 1 << v, size + 1, rest & !adj[v]);
        self.visit(adj, set, size, rest);
    }
}

/// The large-ρ utility bound to a physical graph.
#[derive(Debug, Clone)]
pub struct ThetaBarUtility {
    pub physical: ContentionGraph,
}

impl Utility for ThetaBarUtility {
    fn eval(&self, c: &ChannelAssignment) -> Result<f64> {
        utility_theta_bar(&self.physical, c)
    }
}

/// Mean x from the full fixed point on the logical graph.
#[derive(Debug, Clone)]
pub struct FiniteRhoUtility {
    pub physical: ContentionGraph,
    pub cells: Vec<CellSpec>,
    pub mac: MacParams,
    pub mode: TrafficMode,
}

impl Utility for FiniteRhoUtility {
    fn eval(&self, c: &ChannelAssignment) -> Result<f64> {
        let g = logical_graph(&self.physical, c)?;
        let p = MultiCellProblem::new(g, self.cells.clone(), self.mac.clone(), self.mode)?;
        let s = solve_fixed_point(&p)?;
        Ok(s.theta_bar / self.cells.len() as f64)
    }
}

/// L_R-I automaton state: one probability row per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaState {
    pub p: Vec<Vec<f64>>,
    pub step: u64,
    pub b: f64,
}

impl LaState {
    pub fn uniform(n: usize, m: usize, b: f64) -> Self {
        LaState {
            p: vec![vec![1.0 / m as f64; m]; n],
            step: 0,
            b,
        }
    }

    /// Each cell puts `weight` on its channel in `target`, the rest spread evenly.
    pub fn biased(target: &ChannelAssignment, weight: f64, b: f64) -> Self {
        let m = target.m();
        let other = if m > 1 {
            (1.0 - weight) / (m - 1) as f64
        } else {
            0.0
        };
        let p = target
            .channels()
            .iter()
            .map(|&c| {
                (1..=m)
                    .map(|j| if j == c { weight.min(1.0) } else { other })
                    .collect()
            })
            .collect();
        LaState { p, step: 0, b }
    }

    pub fn m(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    /// Row-wise most likely channel.
    pub fn argmax(&self) -> ChannelAssignment {
        let channels = self
            .p
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best + 1
            })
            .collect();
        ChannelAssignment {
            channels,
            m: self.m(),
        }
    }

    pub fn converged(&self, threshold: f64) -> bool {
        self.p
            .iter()
            .all(|row| row.iter().cloned().fold(0.0, f64::max) > 1.0 - threshold)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ChannelAssignment {
        let channels = self
            .p
            .iter()
            .map(|row| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    acc += v;
                    if u < acc {
                        return j + 1;
                    }
                }
                row.iter().rposition(|&v| v > 0.0).unwrap_or(0) + 1
            })
            .collect();
        ChannelAssignment {
            channels,
            m: self.m(),
        }
    }

    /// Reward-inaction update toward the sampled channels with reward `u`.
    pub fn update(&mut self, c: &ChannelAssignment, u: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&u) {
            return Err(ModelError::UtilityOutOfRange(u));
        }
        let step = self.b * u;
        for (row, &ci) in self.p.iter_mut().zip(c.channels()) {
            for (j, v) in row.iter_mut().enumerate() {
                let target = if j + 1 == ci { 1.0 } else { 0.0 };
                *v += step * (target - *v);
            }
        }
        self.step += 1;
        Ok(())
    }
}

/// One automaton round: sample, evaluate, update.
pub fn lri_step(
    state: &mut LaState,
    utility: &dyn Utility,
    rng: &mut impl Rng,
) -> Result<(ChannelAssignment, f64)> {
    let c = state.sample(rng);
    let u = utility.eval(&c)?;
    state.update(&c, u)?;
    Ok((c, u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LriConfig {
    pub channels: usize,
    pub b: f64,
    pub max_steps: u64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for LriConfig {
    fn default() -> Self {
        LriConfig {
            channels: 2,
            b: 0.01,
            max_steps: 1_000_000,
            threshold: 1e-3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LriOutcome {
    pub assignment: ChannelAssignment,
    /// Utility of the final argmax assignment.
    pub utility: f64,
    /// Utility of the sampled assignment at every step.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub state: LaState,
}

/// Runs L_R-I until every row has an entry above `1 - threshold` or the
/// step budget is spent. Utilities are memoised per assignment.
pub fn run_lri(
    n_cells: usize,
    cfg: &LriConfig,
    init: Option<LaState>,
    utility: &dyn Utility,
) -> Result<LriOutcome> {
    if !(cfg.b > 0.0 && cfg.b < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "learning rate b must be in (0,1), got {}",
            cfg.b
        )));
    }
    let mut state = init.unwrap_or_else(|| LaState::uniform(n_cells, cfg.channels, cfg.b));
    if state.p.len() != n_cells {
        return Err(ModelError::LengthMismatch {
            expected: n_cells,
            found: state.p.len(),
        });
    }
    state.b = cfg.b;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut memo: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut trace = Vec::new();
    let mut converged = state.converged(cfg.threshold);
    while !converged && state.step < cfg.max_steps {
        let c = state.sample(&mut rng);
        let u = match memo.get(c.channels()) {
            Some(&u) => u,
            None => {
                let u = utility.eval(&c)?;
                memo.insert(c.channels().to_vec(), u);
                u
            }
        };
        state.update(&c, u)?;
        trace.push(u);
        converged = state.converged(cfg.threshold);
    }
    let assignment = state.argmax();
    let utility = utility.eval(&assignment)?;
    Ok(LriOutcome {
        assignment,
        utility,
        trace,
        converged,
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderPolicy {
    Lexicographic,
    Random(u64),
}

/// mISA: peel a maximal independent set per channel `1..M-1`, then put all
/// remaining cells on channel `M`.
pub fn misa(physical: &ContentionGraph, m: usize, order: OrderPolicy) -> Result<ChannelAssignment> {
    if m == 0 {
        return Err(ModelError::InvalidParameter(
            "need at least one channel".into(),
        ));
    }
    let n = physical.n_cells();
    let mut rng = match order {
        OrderPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        OrderPolicy::Lexicographic => None,
    };
    let mut channels = vec![m; n];
    let mut residual = physical.vertex_set().clone();
    for j in 1..m {
        if residual.is_empty() {
            break;
        }
        let g = physical.induced(&residual);
        let mut ord = g.vertices();
        if let Some(r) = rng.as_mut() {
            ord.shuffle(r);
        }
        for id in maximal_independent_set(&g, &ord)? {
            channels[id - 1] = j;
            residual.remove(id - 1);
        }
    }
    ChannelAssignment::new(channels, m)
}

/// Best of `tries` random-order mISA runs (ties keep the earliest).
pub fn misa_best_of(
    physical: &ContentionGraph,
    m: usize,
    tries: usize,
    seed: u64,
    utility: &dyn Utility,
) -> Result<(ChannelAssignment, f64)> {
    let mut best = misa(physical, m, OrderPolicy::Lexicographic)?;
    let mut best_u = utility.eval(&best)?;
    for t in 0..tries as u64 {
        let c = misa(physical, m, OrderPolicy::Random(seed.wrapping_add(t)))?;
        let u = utility.eval(&c)?;
        if u > best_u + TIE_EPS {
            best = c;
            best_u = u;
        }
    }
    Ok((best, best_u))
}

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub cell: usize,
    pub channel: usize,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub is_nash: bool,
    pub utility: f64,
    pub improving: Vec<Deviation>,
}

/// Checks every single-cell channel change for a strict utility gain.
pub fn is_nash_equilibrium(
    physical: &ContentionGraph,
    c: &ChannelAssignment,
    utility: &dyn Utility,
) -> Result<NashReport> {
    if c.len() != physical.n_cells() {
        return Err(ModelError::LengthMismatch {
            expected: physical.n_cells(),
            found: c.len(),
        });
    }
    let base = utility.eval(c)?;
    let candidates: Vec<(usize, usize)> = (1..=c.len())
        .flat_map(|id| (1..=c.m()).map(move |ch| (id, ch)))
        .filter(|&(id, ch)| c.channels()[id - 1] != ch)
        .collect();
    let evaluated = map_maybe_parallel(&candidates, |&(id, ch)| {
        utility.eval(&c.with(id, ch)).map(|u| Deviation {
            cell: id,
            channel: ch,
            utility: u,
        })
    })?;
    let improving: Vec<Deviation> = evaluated
        .into_iter()
        .filter(|d| d.utility > base + TIE_EPS)
        .collect();
    Ok(NashReport {
        is_nash: improving.is_empty(),
        utility: base,
        improving,
    })
}

pub const DEFAULT_SEARCH_BUDGET: u64 = 2_000_000;

/// Exact argmax over all `M^N` assignments; ties go to the lexicographically
/// smallest channel vector.
pub fn exhaustive_search(
    physical: &ContentionGraph,
    m: usize,
    utility: &dyn Utility,
    budget: u64,
) -> Result<(ChannelAssignment, f64)> {
    let n = physical.n_cells();
    if m == 0 {
        return Err(ModelError::InvalidParameter(
            "need at least one channel".into(),
        ));
    }
    let total = (m as u64).checked_pow(n as u32).filter(|&t| t <= budget);
    let Some(total) = total else {
        return Err(ModelError::BudgetExceeded {
            what: format!("exhaustive search over {m}^{n} assignments"),
            limit: budget,
        });
    };
    let decode = |mut k: u64| {
        let mut ch = vec![1; n];
        for slot in ch.iter_mut().rev() {
            *slot = (k % m as u64) as usize + 1;
            k /= m as u64;
        }
        ChannelAssignment { channels: ch, m }
    };
    let chunk = 4096u64;
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    let partial = map_maybe_parallel(&starts, |&s| {
        let mut best: Option<(u64, f64)> = None;
        for k in s..(s + chunk).min(total) {
            let u = utility.eval(&decode(k))?;
            if best.is_none_or(|(_, bu)| u > bu + TIE_EPS) {
                best = Some((k, u));
            }
        }
        Ok(best)
    })?;
    let mut best: Option<(u64, f64)> = None;
    for (k, u) in partial.into_iter().flatten() {
        if best.is_none_or(|(_, bu)| u > bu + TIE_EPS) {
            best = Some((k, u));
        }
    }
    let (k, u) = best.expect("at least one assignment");
    Ok((decode(k), u))
}

#[cfg(feature = "parallel")]
fn map_maybe_parallel<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_maybe_parallel<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    items.iter().map(f).collect()
}

/// Checks the structure mISA promises: channels `1..M-1` each hold a set
/// that is independent and maximal in the graph left by earlier rounds.
pub fn misa_structure_ok(physical: &ContentionGraph, c: &ChannelAssignment) -> bool {
    let mut residual = physical.vertex_set().clone();
    for j in 1..c.m() {
        if residual.is_empty() {
            return c.channels().iter().all(|&ch| ch < j);
        }
        let set = CellSet::from_indices(
            physical.n_cells(),
            (0..c.len()).filter(|&i| c.channels()[i] == j),
        );
        if !set.is_subset(&residual) || !physical.is_independent(&set) {
            return false;
        }
        let mut rest = residual.clone();
        rest.difference_with(&set);
        if rest.iter().any(|v| !physical.adj(v).intersects(&set)) {
            return false;
        }
        residual = rest;
    }
    true
}
