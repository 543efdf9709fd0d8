#![allow(dead_code)]

use cellnet::topology::{ContentionGraph, GraphKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph on `n` cells with edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> ContentionGraph {
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    ContentionGraph::new(n, &edges, GraphKind::Physical).unwrap()
}

/// Adjacency as bitmasks over 0-based vertices.
pub fn masks(g: &ContentionGraph) -> Vec<u32> {
    let mut m = vec![0u32; g.n_cells()];
    for (i, j) in g.edges() {
        m[i - 1] |= 1 << (j - 1);
        m[j - 1] |= 1 << (i - 1);
    }
    m
}

/// Every independent subset, by brute force over all 2^N subsets.
pub fn brute_independent_sets(g: &ContentionGraph) -> Vec<u32> {
    let m = masks(g);
    let n = g.n_cells();
    (0u32..1 << n)
        .filter(|&s| (0..n).all(|i| s >> i & 1 == 0 || m[i] & s == 0))
        .collect()
}

/// (α, η, η_i) by brute force.
pub fn brute_mis(g: &ContentionGraph) -> (usize, u64, Vec<u64>) {
    let sets = brute_independent_sets(g);
    let alpha = sets.iter().map(|s| s.count_ones()).max().unwrap() as usize;
    let mis: Vec<u32> = sets
        .into_iter()
        .filter(|s| s.count_ones() as usize == alpha)
        .collect();
    let eta_i = (0..g.n_cells())
        .map(|i| mis.iter().filter(|&&s| s >> i & 1 == 1).count() as u64)
        .collect();
    (alpha, mis.len() as u64, eta_i)
}

/// x_i by brute force: Σ over independent sets A with no neighbour of i in A
/// of Π ρ, divided by the total.
pub fn brute_x(g: &ContentionGraph, rho: &[f64]) -> Vec<f64> {
    let m = masks(g);
    let sets = brute_independent_sets(g);
    let w = |s: u32| -> f64 {
        (0..g.n_cells())
            .filter(|&i| s >> i & 1 == 1)
            .map(|i| rho[i])
            .product()
    };
    let total: f64 = sets.iter().map(|&s| w(s)).sum();
    (0..g.n_cells())
        .map(|i| {
            sets.iter()
                .filter(|&&s| m[i] & s == 0)
                .map(|&s| w(s))
                .sum::<f64>()
                / total
        })
        .collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}
