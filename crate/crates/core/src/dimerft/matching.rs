//! Exhaustive perfect-matching sums by memoized vertex elimination.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::WeightedBipartiteGraph;

/// Largest graph the enumerator accepts, in vertices.
pub const MAX_VERTICES: usize = 128;
/// Largest number of memoized partial states.
pub const MAX_STATES: usize = 2_000_000;

struct Solver<'a> {
    adj: Vec<Vec<(usize, usize)>>,
    g: &'a WeightedBipartiteGraph,
    weights: &'a [f64],
    memo: HashMap<u128, f64>,
}

impl Solver<'_> {
    /// Picks the unmatched vertex with the fewest free neighbors.
    fn pivot(&self, used: u128) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..self.g.n_vertices {
            if used >> v & 1 == 1 {
                continue;
            }
            let deg = self.adj[v].iter().filter(|(u, _)| used >> u & 1 == 0).count();
            if best.is_none_or(|(_, d)| deg < d) {
                best = Some((v, deg));
                if deg <= 1 {
                    break;
                }
            }
        }
        best
    }

    fn sum(&mut self, used: u128) -> Result<f64> {
        let Some((v, deg)) = self.pivot(used) else { return Ok(1.0) };
        if deg == 0 {
            return Ok(0.0);
        }
        if let Some(&z) = self.memo.get(&used) {
            return Ok(z);
        }
        if self.memo.len() >= MAX_STATES {
            return Err(Error::Budget(format!("matching enumeration exceeded {MAX_STATES} states")));
        }
        let mut z = 0.0;
        for k in 0..self.adj[v].len() {
            let (u, e) = self.adj[v][k];
            if used >> u & 1 == 1 {
                continue;
            }
            z += self.weights[e] * self.sum(used | 1 << v | 1 << u)?;
        }
        self.memo.insert(used, z);
        Ok(z)
    }
}

fn adjacency(g: &WeightedBipartiteGraph) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); g.n_vertices];
    for (k, e) in g.edges.iter().enumerate() {
        adj[e.black].push((e.white, k));
        adj[e.white].push((e.black, k));
    }
    adj
}

fn check_size(g: &WeightedBipartiteGraph) -> Result<()> {
    if g.n_vertices > MAX_VERTICES {
        return Err(Error::Budget(format!("{} vertices, enumeration accepts at most {MAX_VERTICES}", g.n_vertices)));
    }
    Ok(())
}

/// Weighted sum over all perfect matchings.
pub fn matching_sum(g: &WeightedBipartiteGraph) -> Result<f64> {
    check_size(g)?;
    let weights: Vec<f64> = g.edges.iter().map(|e| e.weight).collect();
    let mut s = Solver { adj: adjacency(g), g, weights: &weights, memo: HashMap::new() };
    s.sum(0)
}

/// Every perfect matching as a sorted list of edge indices, up to `limit` matchings.
pub fn enumerate(g: &WeightedBipartiteGraph, limit: usize) -> Result<Vec<Vec<usize>>> {
    check_size(g)?;
    let adj = adjacency(g);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fn rec(
        g: &WeightedBipartiteGraph,
        adj: &[Vec<(usize, usize)>],
        used: u128,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> Result<()> {
        let Some(v) = (0..g.n_vertices).find(|&v| used >> v & 1 == 0) else {
            let mut m = stack.clone();
            m.sort_unstable();
            out.push(m);
            return if out.len() > limit { Err(Error::Budget(format!("more than {limit} matchings"))) } else { Ok(()) };
        };
        for &(u, e) in &adj[v] {
            if used >> u & 1 == 0 {
                stack.push(e);
                rec(g, adj, used | 1 << v | 1 << u, stack, out, limit)?;
                stack.pop();
            }
        }
        Ok(())
    }
    rec(g, &adj, 0, &mut stack, &mut out, limit)?;
    Ok(out)
}
