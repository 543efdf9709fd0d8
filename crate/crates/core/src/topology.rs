//! Cell-level contention graphs and independent-set machinery.

use serde::{Deserialize, Serialize};

use crate::assign::ChannelAssignment;
use crate::cellset::CellSet;
use crate::error::{ModelError, Result};

/// One cell: an AP and the nodes contending inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: usize,
    pub position: Option<(f64, f64)>,
    pub n_nodes: u32,
}

impl CellSpec {
    pub fn new(id: usize, n_nodes: u32) -> Self {
        CellSpec {
            id,
            position: None,
            n_nodes,
        }
    }

    pub fn at(id: usize, n_nodes: u32, x: f64, y: f64) -> Self {
        CellSpec {
            id,
            position: Some((x, y)),
            n_nodes,
        }
    }
}

/// Checks that ids are exactly `1..=N` in order and every cell has a node.
pub fn validate_cells(cells: &[CellSpec]) -> Result<()> {
    if cells.is_empty() {
        return Err(ModelError::InvalidTopology("no cells".into()));
    }
    for (k, c) in cells.iter().enumerate() {
        if c.id != k + 1 {
            return Err(ModelError::InvalidTopology(format!(
                "cell ids must be 1..{} in order; position {} has id {}",
                cells.len(),
                k + 1,
                c.id
            )));
        }
        if c.n_nodes == 0 {
            return Err(ModelError::InvalidTopology(format!(
                "cell {} has n_nodes = 0",
                c.id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Physical,
    Logical,
}

/// Undirected graph over cells `1..=n_cells`.
///
/// A graph may cover only a subset of the cell ids (see
/// [`closed_neighborhood_subgraph`]); ids keep their meaning so results can
/// be mapped back onto the full network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionGraph {
    n_cells: usize,
    vertices: CellSet,
    adj: Vec<CellSet>,
    kind: GraphKind,
}

impl ContentionGraph {
    /// Builds a graph on all of `1..=n_cells` from 1-based edge pairs.
    pub fn new(n_cells: usize, edges: &[(usize, usize)], kind: GraphKind) -> Result<Self> {
        let mut g = ContentionGraph {
            n_cells,
            vertices: CellSet::full(n_cells),
            adj: vec![CellSet::empty(n_cells); n_cells],
            kind,
        };
        for &(i, j) in edges {
            if i == 0 || i > n_cells {
                return Err(ModelError::InvalidCell(i));
            }
            if j == 0 || j > n_cells {
                return Err(ModelError::InvalidCell(j));
            }
            if i == j {
                return Err(ModelError::InvalidTopology(format!(
                    "self-loop at cell {i}"
                )));
            }
            g.adj[i - 1].insert(j - 1);
            g.adj[j - 1].insert(i - 1);
        }
        Ok(g)
    }

    pub fn edgeless(n_cells: usize) -> Self {
        Self::new(n_cells, &[], GraphKind::Physical).expect("edgeless graph is valid")
    }

    pub fn path(n_cells: usize) -> Self {
        let edges: Vec<_> = (1..n_cells).map(|i| (i, i + 1)).collect();
        Self::new(n_cells, &edges, GraphKind::Physical).expect("path graph is valid")
    }

    pub fn complete(n_cells: usize) -> Self {
        let mut edges = Vec::new();
        for i in 1..=n_cells {
            for j in i + 1..=n_cells {
                edges.push((i, j));
            }
        }
        Self::new(n_cells, &edges, GraphKind::Physical).expect("complete graph is valid")
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Self {
        self.kind = kind;
        self
    }

    /// Ids of the cells present in this graph.
    pub fn vertices(&self) -> Vec<usize> {
        self.vertices.ids()
    }

    pub fn vertex_set(&self) -> &CellSet {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        id >= 1 && self.vertices.contains(id - 1)
    }

    /// Sorted edge list with `i < j`, 1-based.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in self.vertices.iter() {
            for j in self.adj[i].iter() {
                if i < j {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.vertices
            .iter()
            .map(|i| self.adj[i].len())
            .sum::<usize>()
            / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.contains(i) && self.contains(j) && self.adj[i - 1].contains(j - 1)
    }

    pub fn neighbors(&self, id: usize) -> Result<Vec<usize>> {
        if !self.contains(id) {
            return Err(ModelError::InvalidCell(id));
        }
        Ok(self.adj[id - 1].ids())
    }

    /// Neighbour bitset of the 0-based vertex `i`.
    pub(crate) fn adj(&self, i: usize) -> &CellSet {
        &self.adj[i]
    }

    pub fn degree(&self, id: usize) -> usize {
        if self.contains(id) {
            self.adj[id - 1].len()
        } else {
            0
        }
    }

    /// Maximum degree D(G).
    pub fn max_degree(&self) -> usize {
        self.vertices
            .iter()
            .map(|i| self.adj[i].len())
            .max()
            .unwrap_or(0)
    }

    /// Subgraph induced on `keep` (0-based set); ids are preserved.
    pub fn induced(&self, keep: &CellSet) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.intersect_with(keep);
        let adj = (0..self.n_cells)
            .map(|i| {
                if vertices.contains(i) {
                    let mut a = self.adj[i].clone();
                    a.intersect_with(&vertices);
                    a
                } else {
                    CellSet::empty(self.n_cells)
                }
            })
            .collect();
        ContentionGraph {
            n_cells: self.n_cells,
            vertices,
            adj,
            kind: self.kind,
        }
    }

    /// Connected components as 0-based vertex sets, ordered by smallest member.
    pub fn components(&self) -> Vec<CellSet> {
        let mut seen = CellSet::empty(self.n_cells);
        let mut out = Vec::new();
        for start in self.vertices.iter() {
            if seen.contains(start) {
                continue;
            }
            let mut comp = CellSet::empty(self.n_cells);
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(v) = stack.pop() {
                comp.insert(v);
                for u in self.adj[v].iter() {
                    if !seen.contains(u) {
                        seen.insert(u);
                        stack.push(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_independent(&self, set: &CellSet) -> bool {
        set.iter().all(|i| !self.adj[i].intersects(set))
    }
}

/// Physical graph from AP coordinates: an edge joins every pair of cells
/// whose APs are within carrier-sense range `r_cs` of each other.
pub fn build_physical_graph(cells: &[CellSpec], r_cs: f64) -> Result<ContentionGraph> {
    validate_cells(cells)?;
    if !(r_cs > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "r_cs must be positive, got {r_cs}"
        )));
    }
    let mut pos = Vec::with_capacity(cells.len());
    for c in cells {
        pos.push(
            c.position
                .ok_or(ModelError::GeometryUnavailable { cell: c.id })?,
        );
    }
    let mut edges = Vec::new();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let d = (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1);
            if d <= r_cs * (1.0 + 1e-12) {
                edges.push((i + 1, j + 1));
            }
        }
    }
    ContentionGraph::new(cells.len(), &edges, GraphKind::Physical)
}

/// Keeps only the physical edges whose endpoints share a channel.
pub fn logical_graph(
    physical: &ContentionGraph,
    assignment: &ChannelAssignment,
) -> Result<ContentionGraph> {
    let c = assignment.channels();
    if c.len() != physical.n_cells() {
        return Err(ModelError::LengthMismatch {
            expected: physical.n_cells(),
            found: c.len(),
        });
    }
    let mut g = physical.clone();
    for i in 0..g.n_cells {
        let same: Vec<usize> = g.adj[i].iter().filter(|&j| c[j] != c[i]).collect();
        for j in same {
            g.adj[i].remove(j);
        }
    }
    g.kind = GraphKind::Logical;
    Ok(g)
}

/// G_i: the graph with cell `i` and all of its neighbours removed.
pub fn closed_neighborhood_subgraph(g: &ContentionGraph, i: usize) -> Result<ContentionGraph> {
    if !g.contains(i) {
        return Err(ModelError::InvalidCell(i));
    }
    let mut keep = g.vertices.clone();
    keep.remove(i - 1);
    keep.difference_with(&g.adj[i - 1]);
    Ok(g.induced(&keep))
}

/// Greedy maximal independent set: scan `order` and keep every cell with no
/// neighbour already kept. `order` must list each vertex of `g` exactly once.
pub fn maximal_independent_set(g: &ContentionGraph, order: &[usize]) -> Result<Vec<usize>> {
    let mut seen = CellSet::empty(g.n_cells);
    for &id in order {
        if !g.contains(id) || seen.contains(id - 1) {
            return Err(ModelError::InvalidParameter(format!(
                "order is not a permutation of the graph's vertices (id {id})"
            )));
        }
        seen.insert(id - 1);
    }
    if seen != g.vertices {
        return Err(ModelError::InvalidParameter(
            "order does not cover every vertex".into(),
        ));
    }
    let mut chosen = CellSet::empty(g.n_cells);
    for &id in order {
        if !g.adj[id - 1].intersects(&chosen) {
            chosen.insert(id - 1);
        }
    }
    Ok(chosen.ids())
}

/// Limits on independent-set enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_vertices: usize,
    pub max_states: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_vertices: 25,
            max_states: 10_000_000,
        }
    }
}

/// A CTMC state: the active set and the induced partition of the vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePartition {
    pub active: CellSet,
    pub blocked: CellSet,
    pub backoff: CellSet,
}

/// All independent sets of a graph with their partitions and MIS statistics.
#[derive(Debug, Clone)]
pub struct IndependentSetFamily {
    graph: ContentionGraph,
    states: Vec<StatePartition>,
    mis_list: Vec<CellSet>,
    alpha: usize,
    eta: u64,
    eta_i: Vec<u64>,
}

impl IndependentSetFamily {
    pub fn graph(&self) -> &ContentionGraph {
        &self.graph
    }

    /// States in canonical order; the first is always the empty set.
    pub fn states(&self) -> &[StatePartition] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Maximum independent sets.
    pub fn mis_list(&self) -> &[CellSet] {
        &self.mis_list
    }

    /// Independence number α(G).
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Number of maximum independent sets η.
    pub fn eta(&self) -> u64 {
        self.eta
    }

    /// η_i for cell id `i`: how many maximum independent sets contain it.
    pub fn eta_of(&self, id: usize) -> u64 {
        self.eta_i.get(id.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// η_i indexed by 0-based cell index over the whole id range.
    pub fn eta_i(&self) -> &[u64] {
        &self.eta_i
    }

    /// Δ = Σ over states of Π_{j ∈ A} ρ_j, with `rho` indexed by 0-based cell.
    pub fn delta(&self, rho: &[f64]) -> f64 {
        self.states
            .iter()
            .map(|s| s.active.iter().map(|j| rho[j]).product::<f64>())
            .sum()
    }
}

pub fn enumerate_state_space(g: &ContentionGraph) -> Result<IndependentSetFamily> {
    enumerate_state_space_with(g, EnumerationBudget::default())
}

pub fn enumerate_state_space_with(
    g: &ContentionGraph,
    budget: EnumerationBudget,
) -> Result<IndependentSetFamily> {
    if g.n_vertices() > budget.max_vertices {
        return Err(ModelError::BudgetExceeded {
            what: format!("state-space enumeration on {} vertices", g.n_vertices()),
            limit: budget.max_vertices as u64,
        });
    }
    let n = g.n_cells;
    let mut sets = Vec::new();
    let mut current = CellSet::empty(n);
    collect_independent(
        g,
        &mut current,
        g.vertices.clone(),
        &mut sets,
        budget.max_states,
    )?;
    sets.sort();

    let alpha = sets.iter().map(CellSet::len).max().unwrap_or(0);
    let mis_list: Vec<CellSet> = sets.iter().filter(|s| s.len() == alpha).cloned().collect();
    let mut eta_i = vec![0u64; n];
    for s in &mis_list {
        for i in s.iter() {
            eta_i[i] += 1;
        }
    }

    let states = sets
        .into_iter()
        .map(|active| {
            let mut blocked = CellSet::empty(n);
            for i in active.iter() {
                blocked.union_with(&g.adj[i]);
            }
            blocked.difference_with(&active);
            let mut backoff = g.vertices.clone();
            backoff.difference_with(&active);
            backoff.difference_with(&blocked);
            StatePartition {
                active,
                blocked,
                backoff,
            }
        })
        .collect();

    Ok(IndependentSetFamily {
        graph: g.clone(),
        states,
        eta: mis_list.len() as u64,
        mis_list,
        alpha,
        eta_i,
    })
}

fn collect_independent(
    g: &ContentionGraph,
    current: &mut CellSet,
    candidates: CellSet,
    out: &mut Vec<CellSet>,
    max_states: usize,
) -> Result<()> {
    if out.len() >= max_states {
        return Err(ModelError::BudgetExceeded {
            what: "number of independent sets".into(),
            limit: max_states as u64,
        });
    }
    out.push(current.clone());
    let mut rest = candidates;
    while let Some(v) = rest.first() {
        rest.remove(v);
        let mut next = rest.clone();
        next.difference_with(&g.adj[v]);
        current.insert(v);
        collect_independent(g, current, next, out, max_states)?;
        current.remove(v);
    }
    Ok(())
}
