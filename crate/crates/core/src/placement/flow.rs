//! Successive-shortest-path min-cost flow with integer capacities.
//!
//! Graphs here are a few hundred nodes, so Dijkstra runs in dense O(V^2)
//! form; ties go to the lowest node index, which keeps results deterministic.

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResult {
    pub flow: i64,
    pub cost: f64,
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        MinCostFlow {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds an arc and returns its handle for [`MinCostFlow::flow_on`].
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        debug_assert!(cost >= 0.0, "arc costs must be non-negative");
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    pub fn flow_on(&self, arc: usize) -> i64 {
        self.arcs[arc ^ 1].cap
    }

    /// Pushes up to `limit` units from `source` to `sink` at minimum cost.
    pub fn run(&mut self, source: usize, sink: usize, limit: i64) -> FlowResult {
        let n = self.adj.len();
        let mut potential = vec![0.0f64; n];
        let mut flow = 0;
        let mut cost = 0.0;

        while flow < limit {
            let mut dist = vec![f64::INFINITY; n];
            let mut via: Vec<Option<usize>> = vec![None; n];
            let mut done = vec![false; n];
            dist[source] = 0.0;
            loop {
                let mut u = None;
                for v in 0..n {
                    if !done[v] && dist[v].is_finite() && u.is_none_or(|w: usize| dist[v] < dist[w]) {
                        u = Some(v);
                    }
                }
                let Some(u) = u else { break };
                done[u] = true;
                for &a in &self.adj[u] {
                    let arc = &self.arcs[a];
                    if arc.cap <= 0 || done[arc.to] {
                        continue;
                    }
                    // rounding can leave reduced costs a hair below zero
                    let reduced = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                    let d = dist[u] + reduced;
                    if d < dist[arc.to] {
                        dist[arc.to] = d;
                        via[arc.to] = Some(a);
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }

            let mut push = limit - flow;
            let mut v = sink;
            while let Some(a) = via[v] {
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = sink;
            while let Some(a) = via[v] {
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                cost += push as f64 * self.arcs[a].cost;
                v = self.arcs[a ^ 1].to;
            }
            flow += push;
        }
        FlowResult { flow, cost }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_route_until_saturated() {
        // 0 -> 1 -> 3 cheap but capacity 2; 0 -> 2 -> 3 dear
        let mut g = MinCostFlow::new(4);
        let a = g.add_arc(0, 1, 2, 1.0);
        g.add_arc(1, 3, 5, 1.0);
        let b = g.add_arc(0, 2, 5, 3.0);
        g.add_arc(2, 3, 5, 3.0);
        let r = g.run(0, 3, 4);
        assert_eq!(r.flow, 4);
        assert!((r.cost - (2.0 * 2.0 + 2.0 * 6.0)).abs() < 1e-12);
        assert_eq!(g.flow_on(a), 2);
        assert_eq!(g.flow_on(b), 2);
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // classic case where the first greedy path must be partly undone
        let mut g = MinCostFlow::new(4);
        g.add_arc(0, 1, 1, 1.0);
        g.add_arc(0, 2, 1, 2.0);
        g.add_arc(1, 2, 1, 0.0);
        g.add_arc(1, 3, 1, 3.0);
        g.add_arc(2, 3, 1, 1.0);
        let r = g.run(0, 3, 2);
        assert_eq!(r.flow, 2);
        // best: 0-1-3 (4) + 0-2-3 (3)
        assert!((r.cost - 7.0).abs() < 1e-12);
    }

    #[test]
    fn reports_shortfall() {
        let mut g = MinCostFlow::new(3);
        g.add_arc(0, 1, 3, 0.0);
        g.add_arc(1, 2, 1, 0.0);
        assert_eq!(g.run(0, 2, 3).flow, 1);
    }
}
