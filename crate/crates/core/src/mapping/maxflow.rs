//! Dinic max-flow on a directed graph with `f64` capacities.

use std::collections::VecDeque;

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

/// Residual capacities at or below this are treated as saturated.
const EPS: f64 = 1e-12;

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Adds `a -> b` with capacity `cap` and `b -> a` with `rev_cap`.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64, rev_cap: f64) {
        self.adj[a].push(self.arcs.len());
        self.arcs.push(Arc { to: b, cap });
        self.adj[b].push(self.arcs.len());
        self.arcs.push(Arc { to: a, cap: rev_cap });
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let a = &self.arcs[e];
                if a.cap > EPS && level[a.to] < 0 {
                    level[a.to] = level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, pushed: f64, level: &[i64], next: &mut [usize]) -> f64 {
        if u == t {
            return pushed;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let (to, cap) = (self.arcs[e].to, self.arcs[e].cap);
            if cap > EPS && level[to] == level[u] + 1 {
                let got = self.augment(to, t, pushed.min(cap), level, next);
                if got > 0.0 {
                    self.arcs[e].cap -= got;
                    self.arcs[e ^ 1].cap += got;
                    return got;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    /// Maximum flow from `s` to `t`; leaves the residual graph in place.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return flow;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let got = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if got <= 0.0 {
                    break;
                }
                flow += got;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph, i.e. the source side
    /// of the minimum cut after [`max_flow`](Self::max_flow).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).iter().map(|l| *l >= 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1, max flow 23
        let mut g = FlowGraph::new(6);
        for (a, b, c) in [
            (0, 1, 16.0),
            (0, 2, 13.0),
            (2, 1, 4.0),
            (1, 3, 12.0),
            (3, 2, 9.0),
            (2, 4, 14.0),
            (4, 3, 7.0),
            (3, 5, 20.0),
            (4, 5, 4.0),
        ] {
            g.add_edge(a, b, c, 0.0);
        }
        assert_eq!(g.max_flow(0, 5), 23.0);
        let side = g.source_side(0);
        assert!(side[0] && !side[5]);
    }

    #[test]
    fn disconnected_sink() {
        let mut g = FlowGraph::new(3);
        g.add_edge(0, 1, 2.0, 2.0);
        assert_eq!(g.max_flow(0, 2), 0.0);
        assert_eq!(g.source_side(0), vec![true, true, false]);
    }
}
