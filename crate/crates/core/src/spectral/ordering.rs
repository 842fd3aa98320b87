//! Deterministic nested-dissection ordering from breadth-first level structures.

const LEAF: usize = 64;

struct Workspace<'a> {
    adj: &'a [Vec<usize>],
    stamp: Vec<u32>,
    level: Vec<u32>,
    clock: u32,
}

impl Workspace<'_> {
    fn tick(&mut self) -> u32 {
        self.clock += 1;
        self.clock
    }

    /// Breadth-first levels from `root` inside the vertices stamped `inside`.
    fn bfs(&mut self, root: usize, inside: u32) -> Vec<Vec<usize>> {
        let seen = self.tick();
        let mut levels = vec![vec![root]];
        self.level[root] = seen;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &u in &self.adj[v] {
                    if self.stamp[u] == inside && self.level[u] != seen {
                        self.level[u] = seen;
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    }

    fn order(&mut self, set: Vec<usize>, out: &mut Vec<usize>) {
        if set.len() <= LEAF {
            out.extend(set);
            return;
        }
        let inside = self.tick();
        for &v in &set {
            self.stamp[v] = inside;
        }
        // Split into connected components first.
        let mut levels = self.bfs(set[0], inside);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < set.len() {
            let comp_mark = self.level[set[0]];
            let (first, rest): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&v| self.level[v] == comp_mark);
            self.order(first, out);
            self.order(rest, out);
            return;
        }
        // Pseudo-peripheral root.
        for _ in 0..4 {
            let far = *levels.last().unwrap().iter().min().unwrap();
            let cand = self.bfs(far, inside);
            if cand.len() <= levels.len() {
                break;
            }
            levels = cand;
        }
        let m = levels.len();
        if m < 3 {
            out.extend(set);
            return;
        }
        let n = set.len();
        let mut before = 0usize;
        let mut best: Option<(usize, usize)> = None;
        for (s, lvl) in levels.iter().enumerate() {
            let after = n - before - lvl.len();
            if s > 0 && s + 1 < m && 4 * before >= n && 4 * after >= n {
                if best.is_none_or(|(_, size)| lvl.len() < size) {
                    best = Some((s, lvl.len()));
                }
            }
            before += lvl.len();
        }
        let s = best.map(|b| b.0).unwrap_or(m / 2).clamp(1, m - 2);
        let a: Vec<usize> = levels[..s].concat();
        let b: Vec<usize> = levels[s + 1..].concat();
        let sep = levels[s].clone();
        self.order(a, out);
        self.order(b, out);
        out.extend(sep);
    }
}

/// Permutation `perm[new] = old` for a symmetric adjacency structure.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut ws = Workspace { adj, stamp: vec![0; n], level: vec![0; n], clock: 0 };
    let mut out = Vec::with_capacity(n);
    ws.order((0..n).collect(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_a_permutation() {
        let n = 40;
        let idx = |i: usize, j: usize| j * n + i;
        let mut adj = vec![Vec::new(); n * n];
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    adj[idx(i, j)].push(idx(i + 1, j));
                    adj[idx(i + 1, j)].push(idx(i, j));
                }
                if j + 1 < n {
                    adj[idx(i, j)].push(idx(i, j + 1));
                    adj[idx(i, j + 1)].push(idx(i, j));
                }
            }
        }
        let mut p = nested_dissection(&adj);
        p.sort_unstable();
        assert_eq!(p, (0..n * n).collect::<Vec<_>>());
    }
}
