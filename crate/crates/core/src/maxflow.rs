//! Dinic's maximum flow on real-valued capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    flow: f64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// `true` for vertices on the source side of a minimum cut.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self { arcs: Vec::new(), out: vec![Vec::new(); n], eps: 0.0 }
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    /// Adds the arc `u -> v`; returns its id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: f64) -> usize {
        assert!(cap >= 0.0 && cap.is_finite(), "capacity must be finite and non-negative");
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap, flow: 0.0 });
        self.arcs.push(Arc { to: u, cap: 0.0, flow: 0.0 });
        self.out[u].push(id);
        self.out[v].push(id + 1);
        id
    }

    pub fn flow_on(&self, arc: usize) -> f64 {
        self.arcs[arc].flow
    }

    fn residual(&self, a: usize) -> f64 {
        self.arcs[a].cap - self.arcs[a].flow
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.out.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.out[u] {
                let v = self.arcs[a].to;
                if level[v] == usize::MAX && self.residual(a) > self.eps {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    }

    /// Saturates the level graph, walking augmenting paths iteratively.
    fn blocking_flow(&mut self, s: usize, t: usize, level: &[usize]) -> f64 {
        let mut next = vec![0; self.out.len()];
        let mut path: Vec<usize> = Vec::new();
        let mut total = 0.0;
        let mut u = s;
        loop {
            if u == t {
                let push = path.iter().map(|&a| self.residual(a)).fold(f64::INFINITY, f64::min);
                for &a in &path {
                    self.arcs[a].flow += push;
                    self.arcs[a ^ 1].flow -= push;
                }
                total += push;
                path.clear();
                u = s;
                continue;
            }
            let mut advanced = false;
            while next[u] < self.out[u].len() {
                let a = self.out[u][next[u]];
                let v = self.arcs[a].to;
                if level[v] == level[u] + 1 && self.residual(a) > self.eps {
                    path.push(a);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                match path.pop() {
                    None => return total,
                    Some(a) => {
                        u = self.arcs[a ^ 1].to;
                        next[u] += 1;
                    }
                }
            }
        }
    }

    /// Maximum `s`–`t` flow and the cut of vertices reachable from `s` in
    /// the final residual network.
    pub fn max_flow(&mut self, s: usize, t: usize) -> MaxFlow {
        let scale = self.arcs.iter().map(|a| a.cap).fold(0.0, f64::max);
        self.eps = scale * 1e-12;
        let mut value = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                let source_side = level.iter().map(|&l| l != usize::MAX).collect();
                return MaxFlow { value, source_side };
            }
            value += self.blocking_flow(s, t, &level);
        }
    }

    /// Total capacity of arcs leaving the `side` set.
    pub fn cut_capacity(&self, side: &[bool]) -> f64 {
        let mut c = 0.0;
        for (u, arcs) in self.out.iter().enumerate() {
            for &a in arcs {
                if a % 2 == 0 && side[u] && !side[self.arcs[a].to] {
                    c += self.arcs[a].cap;
                }
            }
        }
        c
    }

    /// Net flow out of `u`.
    pub fn excess_out(&self, u: usize) -> f64 {
        self.out[u].iter().filter(|&&a| a % 2 == 0).map(|&a| self.arcs[a].flow).sum::<f64>()
            - self.out[u].iter().filter(|&&a| a % 2 == 1).map(|&a| self.arcs[a ^ 1].flow).sum::<f64>()
    }
}
