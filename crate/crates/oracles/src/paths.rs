//! Plain shortest-path and exhaustive path enumeration on a layered grid
//! where each layer only has edges along one axis.

use std::collections::{HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    /// Layer `l` edge from `(x, y)` to `(x + 1, y)`.
    East(usize, usize, usize),
    /// Layer `l` edge from `(x, y)` to `(x, y + 1)`.
    North(usize, usize, usize),
    /// `(l, x, y)` to `(l + 1, x, y)`.
    Up(usize, usize, usize),
}

pub type Node = (usize, usize, usize);

pub struct Lattice<'a> {
    pub nx: usize,
    pub ny: usize,
    /// `true` for layers running along x.
    pub horizontal: Vec<bool>,
    pub capacity: &'a dyn Fn(Edge) -> u32,
}

impl Lattice<'_> {
    fn neighbors(&self, (l, x, y): Node) -> Vec<(Node, Edge)> {
        let mut out = Vec::new();
        if self.horizontal[l] {
            if x + 1 < self.nx {
                out.push(((l, x + 1, y), Edge::East(l, x, y)));
            }
            if x > 0 {
                out.push(((l, x - 1, y), Edge::East(l, x - 1, y)));
            }
        } else {
            if y + 1 < self.ny {
                out.push(((l, x, y + 1), Edge::North(l, x, y)));
            }
            if y > 0 {
                out.push(((l, x, y - 1), Edge::North(l, x, y - 1)));
            }
        }
        if l + 1 < self.horizontal.len() {
            out.push(((l + 1, x, y), Edge::Up(l, x, y)));
        }
        if l > 0 {
            out.push(((l - 1, x, y), Edge::Up(l - 1, x, y)));
        }
        out.retain(|&(_, e)| (self.capacity)(e) > 0);
        out
    }

    /// Fewest edges between `a` and `b`.
    pub fn bfs(&self, a: Node, b: Node) -> Option<usize> {
        let mut dist: HashMap<Node, usize> = HashMap::from([(a, 0)]);
        let mut q = VecDeque::from([a]);
        while let Some(v) = q.pop_front() {
            if v == b {
                return Some(dist[&v]);
            }
            let d = dist[&v];
            for (w, _) in self.neighbors(v) {
                dist.entry(w).or_insert_with(|| {
                    q.push_back(w);
                    d + 1
                });
            }
        }
        None
    }

    /// Every simple path from `a` to `b` as an edge list.
    pub fn simple_paths(&self, a: Node, b: Node) -> Vec<Vec<Edge>> {
        let mut out = Vec::new();
        let mut seen = vec![a];
        let mut path = Vec::new();
        self.dfs(a, b, &mut seen, &mut path, &mut out);
        out
    }

    fn dfs(
        &self,
        v: Node,
        b: Node,
        seen: &mut Vec<Node>,
        path: &mut Vec<Edge>,
        out: &mut Vec<Vec<Edge>>,
    ) {
        if v == b {
            out.push(path.clone());
            return;
        }
        for (w, e) in self.neighbors(v) {
            if seen.contains(&w) {
                continue;
            }
            seen.push(w);
            path.push(e);
            self.dfs(w, b, seen, path, out);
            path.pop();
            seen.pop();
        }
    }

    /// Least total edge count over all pairs of simple paths for two
    /// 2-terminal nets such that no edge carries more nets than its
    /// capacity.
    pub fn best_two_net_total(&self, a: (Node, Node), b: (Node, Node)) -> Option<usize> {
        let pa = self.simple_paths(a.0, a.1);
        let pb = self.simple_paths(b.0, b.1);
        let mut best: Option<usize> = None;
        for p in &pa {
            for q in &pb {
                let total = p.len() + q.len();
                if best.is_some_and(|b| total >= b) {
                    continue;
                }
                let fits = q.iter().all(|e| {
                    let used = 1 + p.contains(e) as u32;
                    used <= (self.capacity)(*e)
                }) && p.iter().all(|e| (self.capacity)(*e) >= 1);
                if fits {
                    best = Some(total);
                }
            }
        }
        best
    }
}
