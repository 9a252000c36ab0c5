use std::collections::VecDeque;

use super::dist::Distribution;
use super::space::StateSpace;
use crate::error::{Error, Result};

/// Default limit on the state count for dominance checks.
pub const DOMINANCE_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceCheck {
    pub dominates: bool,
    /// Mass that can be moved downwards along the order; 1 iff `p ⪰ q`.
    pub flow: f64,
}

struct Edge {
    to: usize,
    cap: f64,
}

struct FlowNet {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const EPS: f64 = 1e-15;

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    fn add(&mut self, a: usize, b: usize, cap: f64) {
        self.adj[a].push(self.edges.len());
        self.edges.push(Edge { to: b, cap });
        self.adj[b].push(self.edges.len());
        self.edges.push(Edge { to: a, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let Edge { to, cap } = self.edges[e];
                if cap > EPS && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    queue.push_back(to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: f64) -> f64 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let Edge { to, cap } = self.edges[e];
            if cap > EPS && self.level[to] == self.level[v] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.edges[e].cap -= got;
                    self.edges[e ^ 1].cap += got;
                    return got;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Decides `p ⪰ q` by searching for a coupling supported on `{(a, b) : a ≥ b}`
/// as a maximum flow: mass leaves each state of `p` and travels down the
/// order to the states of `q`.
pub fn dominance_check_capped(
    space: &StateSpace,
    p: &Distribution,
    q: &Distribution,
    cap: usize,
) -> Result<DominanceCheck> {
    p.check_space(space)?;
    q.check_space(space)?;
    let n = space.size();
    if n > cap {
        return Err(Error::CapExceeded {
            size: n as u128,
            cap: cap as u128,
        });
    }
    let (source, sink) = (n, n + 1);
    let mut net = FlowNet::new(n + 2);
    for i in 0..n {
        if p.get(i) > 0.0 {
            net.add(source, i, p.get(i));
        }
        if q.get(i) > 0.0 {
            net.add(i, sink, q.get(i));
        }
        for j in space.up_moves(i) {
            net.add(j, i, f64::INFINITY);
        }
    }
    let flow = net.max_flow(source, sink);
    Ok(DominanceCheck {
        dominates: flow >= 1.0 - 1e-9,
        flow,
    })
}

pub fn dominance_check(
    space: &StateSpace,
    p: &Distribution,
    q: &Distribution,
) -> Result<DominanceCheck> {
    dominance_check_capped(space, p, q, DOMINANCE_CAP)
}
