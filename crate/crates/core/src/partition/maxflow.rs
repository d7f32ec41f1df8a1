//! Dinic max-flow on real capacities.

use std::collections::VecDeque;

const EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
}

#[derive(Clone, Debug)]
pub struct FlowGraph {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        FlowGraph { arcs: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Arc `u → v` with capacity `cap` and reverse capacity `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        debug_assert!(cap >= 0.0 && rev_cap >= 0.0);
        self.adj[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap });
        self.adj[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: rev_cap });
    }

    /// Maximum flow from `s` to `t`; residual capacities stay in the graph.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adj.len();
        let mut flow = 0.0;
        let mut level = vec![usize::MAX; n];
        let mut it = vec![0usize; n];
        loop {
            level.fill(usize::MAX);
            level[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &e in &self.adj[u] {
                    let a = &self.arcs[e];
                    if a.cap > EPS && level[a.to] == usize::MAX {
                        level[a.to] = level[u] + 1;
                        q.push_back(a.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return flow;
            }
            it.fill(0);
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut it);
                if f <= EPS {
                    break;
                }
                flow += f;
            }
        }
    }

    fn push(&mut self, u: usize, t: usize, limit: f64, level: &[usize], it: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while it[u] < self.adj[u].len() {
            let e = self.adj[u][it[u]];
            let (to, cap) = (self.arcs[e].to, self.arcs[e].cap);
            if cap > EPS && level[to] == level[u] + 1 {
                let f = self.push(to, t, limit.min(cap), level, it);
                if f > EPS {
                    self.arcs[e].cap -= f;
                    self.arcs[e ^ 1].cap += f;
                    return f;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    /// Nodes reachable from `s` in the residual graph (the source side of a
    /// minimum cut after [`max_flow`](Self::max_flow)).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let a = &self.arcs[e];
                if a.cap > EPS && !seen[a.to] {
                    seen[a.to] = true;
                    q.push_back(a.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn textbook_network() {
        // CLRS figure: max flow 23
        let mut g = FlowGraph::new(6);
        for (u, v, c) in [(0, 1, 16.), (0, 2, 13.), (2, 1, 4.), (1, 3, 12.), (3, 2, 9.), (2, 4, 14.), (4, 3, 7.), (3, 5, 20.), (4, 5, 4.)] {
            g.add_edge(u, v, c, 0.0);
        }
        assert!((g.max_flow(0, 5) - 23.0).abs() < 1e-12);
        let side = g.source_side(0);
        assert!(side[0] && !side[5]);
    }

    #[test]
    fn matches_brute_force_min_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let n = 6;
            let mut caps = vec![vec![0.0; n]; n];
            let mut g = FlowGraph::new(n);
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.5) {
                        let c = rng.gen_range(0.0..5.0);
                        caps[u][v] += c;
                        g.add_edge(u, v, c, 0.0);
                    }
                }
            }
            let f = g.max_flow(0, n - 1);
            let mut best = f64::INFINITY;
            for mask in 0..(1u32 << (n - 2)) {
                let side = |v: usize| v == 0 || (v != n - 1 && mask >> (v - 1) & 1 == 1);
                let mut cut = 0.0;
                for u in 0..n {
                    for v in 0..n {
                        if side(u) && !side(v) {
                            cut += caps[u][v];
                        }
                    }
                }
                best = f64::min(best, cut);
            }
            assert!((f - best).abs() < 1e-9, "flow {f} vs cut {best}");
        }
    }
}
