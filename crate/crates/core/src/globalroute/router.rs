use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::congestion::CongestionMap;
use super::graph::{terminal_gcells, GridShape, RoutingGraph};
use crate::fabric::CellLibrary;
use crate::netlist::Netlist;
use crate::placement::Placement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteParams {
    pub max_iters: usize,
    /// Part of the run configuration; the router itself draws no random
    /// numbers.
    pub seed: u64,
    /// Reroute the nets of one batch on the rayon pool.
    pub parallel: bool,
}

impl Default for RouteParams {
    fn default() -> Self {
        Self {
            max_iters: 40,
            seed: 1,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("{0}")]
    Netlist(String),
    #[error("net {0} cannot reach all of its terminals")]
    Unroutable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetRoute {
    /// Index into `netlist.nets`.
    pub net: usize,
    pub id: String,
    /// Sorted edge ids.
    pub edges: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteOutcome {
    pub routes: Vec<NetRoute>,
    pub map: CongestionMap,
    pub iterations: usize,
    /// Ids of nets with fewer than two terminals.
    pub skipped: Vec<String>,
}

const PRES_START: f64 = 0.5;
const PRES_GROWTH: f64 = 1.5;
const MAX_BATCH: usize = 256;
/// Searches stay within the net's bounding box grown by this many gcells,
/// falling back to the whole lattice when that fails.
const BOX_MARGIN: usize = 3;
/// Passes without a new best total overflow before giving up.
const STALL_PASSES: usize = 8;

/// Candidate lattice nodes of each terminal of one net.
#[derive(Debug, Clone)]
pub(crate) struct NetTerms {
    pub terms: Vec<Vec<u32>>,
    /// `(x0, y0, x1, y1)` over all candidates, in gcells.
    pub bbox: (usize, usize, usize, usize),
}

pub(crate) fn net_terms(shape: &GridShape, cands: &[Vec<(usize, usize, u32)>]) -> NetTerms {
    let mut terms: Vec<Vec<u32>> = Vec::with_capacity(cands.len());
    let mut bbox = (usize::MAX, usize::MAX, 0, 0);
    for c in cands {
        let mut nodes: Vec<u32> = c
            .iter()
            .filter(|&&(_, _, l)| l >= 1 && (l as usize) <= shape.nl())
            .map(|&(x, y, l)| {
                bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
                shape.node(l as usize - 1, x, y)
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        terms.push(nodes);
    }
    NetTerms { terms, bbox }
}

/// Negotiated-congestion global routing.
///
/// Nets are routed in order of decreasing bounding-box half perimeter
/// (ties by id). Each net grows a tree terminal by terminal in Prim order
/// over rectilinear distance, connecting each terminal by a multi-source
/// A* search from the whole tree, so existing tree edges are reused for
/// free. All access points of a connected pin join the tree. After each
/// pass, history cost grows by each edge's overflow, the present-congestion
/// factor grows by 1.5x, and nets on overflowing edges are ripped up and
/// rerouted. The loop ends at zero overflow, after `max_iters` passes, or
/// after 8 passes without a new best; the best pass by total overflow is
/// returned.
///
/// Rerouted nets are grouped into batches of consecutive nets with
/// disjoint bounding boxes. All nets of a batch are routed against the
/// same demand snapshot and committed in order, so the result does not
/// depend on `params.parallel`.
pub fn route(
    netlist: &Netlist,
    lib: &CellLibrary,
    placement: &Placement,
    mut graph: RoutingGraph,
    params: &RouteParams,
) -> Result<RouteOutcome, RouteError> {
    let conn = netlist
        .connectivity()
        .map_err(|f| RouteError::Netlist(f.message))?;
    let shape = graph.shape.clone();
    let mut nets: Vec<Option<NetTerms>> = Vec::with_capacity(netlist.nets.len());
    let mut skipped = Vec::new();
    for (ni, pins) in conn.net_pins.iter().enumerate() {
        if pins.len() < 2 {
            skipped.push(netlist.nets[ni].id.clone());
            nets.push(None);
            continue;
        }
        let cands: Vec<_> = pins
            .iter()
            .map(|&p| terminal_gcells(&shape, lib, netlist, placement, p))
            .collect();
        nets.push(Some(net_terms(&shape, &cands)));
    }
    let ids: Vec<&str> = netlist.nets.iter().map(|n| n.id.as_str()).collect();
    let (routes, iterations) = negotiate(&mut graph, &nets, &ids, params)?;
    let routes: Vec<NetRoute> = routes
        .into_iter()
        .enumerate()
        .filter_map(|(ni, r)| {
            r.map(|edges| NetRoute {
                net: ni,
                id: netlist.nets[ni].id.clone(),
                edges,
            })
        })
        .collect();
    Ok(RouteOutcome {
        map: CongestionMap::from_graph(&graph),
        routes,
        iterations,
        skipped,
    })
}

/// A net given directly as lattice terminals: one list of
/// `(gx, gy, layer)` candidates per pin, layer 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphNet {
    pub id: String,
    pub terminals: Vec<Vec<(usize, usize, u32)>>,
}

/// [`route`] on a bare lattice. Leaves the final demand in `graph` and
/// returns each net's sorted edges (empty for nets with fewer than two
/// terminals) and the number of passes.
pub fn route_graph(
    graph: &mut RoutingGraph,
    nets: &[GraphNet],
    params: &RouteParams,
) -> Result<(Vec<Vec<u32>>, usize), RouteError> {
    let terms: Vec<Option<NetTerms>> = nets
        .iter()
        .map(|n| (n.terminals.len() >= 2).then(|| net_terms(&graph.shape, &n.terminals)))
        .collect();
    let ids: Vec<&str> = nets.iter().map(|n| n.id.as_str()).collect();
    let (routes, iters) = negotiate(graph, &terms, &ids, params)?;
    Ok((
        routes.into_iter().map(Option::unwrap_or_default).collect(),
        iters,
    ))
}

/// Edge ids of one net.
type Route = Vec<u32>;

pub(crate) fn negotiate(
    graph: &mut RoutingGraph,
    nets: &[Option<NetTerms>],
    ids: &[&str],
    params: &RouteParams,
) -> Result<(Vec<Option<Route>>, usize), RouteError> {
    let mut order: Vec<usize> = (0..nets.len()).filter(|&i| nets[i].is_some()).collect();
    let hp = |i: usize| {
        let b = nets[i].as_ref().unwrap().bbox;
        (b.2 - b.0) + (b.3 - b.1)
    };
    order.sort_by(|&a, &b| {
        hp(b)
            .cmp(&hp(a))
            .then_with(|| ids[a].cmp(ids[b]))
            .then(a.cmp(&b))
    });

    let mut routes: Vec<Option<Vec<u32>>> = vec![None; nets.len()];
    let mut best: Option<(u64, Vec<Option<Vec<u32>>>)> = None;
    let mut pres = PRES_START;
    let mut todo = order.clone();
    let mut iters = 0;
    let mut stall = 0;
    for _ in 0..params.max_iters.max(1) {
        iters += 1;
        for batch in batches(&todo, nets) {
            for &ni in &batch {
                if let Some(old) = routes[ni].take() {
                    for e in old {
                        graph.demand[e as usize] -= 1;
                    }
                }
            }
            let snapshot: &RoutingGraph = graph;
            let work =
                |&ni: &usize| route_net(snapshot, nets[ni].as_ref().unwrap(), pres).ok_or(ni);
            let results: Vec<Result<Vec<u32>, usize>> = if params.parallel {
                batch.par_iter().map(work).collect()
            } else {
                batch.iter().map(work).collect()
            };
            for (&ni, r) in batch.iter().zip(results) {
                let edges = r.map_err(|ni| RouteError::Unroutable(ids[ni].to_string()))?;
                for &e in &edges {
                    graph.demand[e as usize] += 1;
                }
                routes[ni] = Some(edges);
            }
        }
        let (_, total) = graph.overflow();
        if best.as_ref().map_or(true, |b| total < b.0) {
            best = Some((total, routes.clone()));
            stall = 0;
        } else {
            stall += 1;
        }
        if total == 0 || stall >= STALL_PASSES {
            break;
        }
        for e in 0..graph.demand.len() {
            let (d, c) = (graph.demand[e], graph.capacity[e]);
            if d > c {
                graph.history[e] += (d - c) as f64;
            }
        }
        pres *= PRES_GROWTH;
        todo = order
            .iter()
            .copied()
            .filter(|&ni| {
                routes[ni].as_ref().is_some_and(|r| {
                    r.iter()
                        .any(|&e| graph.demand[e as usize] > graph.capacity[e as usize])
                })
            })
            .collect();
    }

    let (_, best) = best.expect("at least one pass");
    graph.demand.iter_mut().for_each(|d| *d = 0);
    for r in best.iter().flatten() {
        for &e in r {
            graph.demand[e as usize] += 1;
        }
    }
    Ok((best, iters))
}

fn overlaps(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> bool {
    a.0 <= b.2 && b.0 <= a.2 && a.1 <= b.3 && b.1 <= a.3
}

/// Greedy runs of consecutive nets whose bounding boxes are pairwise
/// disjoint.
fn batches(todo: &[usize], nets: &[Option<NetTerms>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for &ni in todo {
        let b = nets[ni].as_ref().unwrap().bbox;
        let clash = cur.len() >= MAX_BATCH
            || cur
                .iter()
                .any(|&o| overlaps(nets[o].as_ref().unwrap().bbox, b));
        if clash {
            out.push(std::mem::take(&mut cur));
        }
        cur.push(ni);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
struct Key {
    f: f64,
    node: u32,
}

impl Eq for Key {}

impl Ord for Key {
    // min-heap on (f, node)
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then_with(|| o.node.cmp(&self.node))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

pub(crate) fn edge_cost(g: &RoutingGraph, e: u32, pres: f64) -> f64 {
    let e = e as usize;
    let d = g.demand[e] as f64;
    let c = g.capacity[e] as f64;
    1.0 + 0.1 * d / c.max(1.0) + pres * (d + 1.0 - c).max(0.0) + g.history[e]
}

/// Routes one net against the current costs; `None` if some terminal is
/// unreachable.
pub(crate) fn route_net(g: &RoutingGraph, net: &NetTerms, pres: f64) -> Option<Vec<u32>> {
    let shape = &g.shape;
    let k = net.terms.len();
    if k == 0 {
        return Some(Vec::new());
    }
    if net.terms.iter().any(Vec::is_empty) {
        return None;
    }
    let rep: Vec<(usize, usize)> = net
        .terms
        .iter()
        .map(|t| {
            let (_, x, y) = shape.coords(t[0]);
            (x, y)
        })
        .collect();

    let n = shape.num_nodes();
    let mut in_tree = vec![false; n];
    let mut tree: Vec<u32> = Vec::new();
    let mut edges: Vec<u32> = Vec::new();
    let mut done = vec![false; k];
    let mut dist_to_tree: Vec<usize> = vec![usize::MAX; k];

    let join = |t: usize, in_tree: &mut Vec<bool>, tree: &mut Vec<u32>| {
        for &v in &net.terms[t] {
            if !in_tree[v as usize] {
                in_tree[v as usize] = true;
                tree.push(v);
            }
        }
    };
    join(0, &mut in_tree, &mut tree);
    done[0] = true;

    let mut search = Search::new(n);
    for _ in 1..k {
        // Prim: nearest unconnected terminal to any connected one
        let last = (0..k).filter(|&t| done[t]).collect::<Vec<_>>();
        for t in 0..k {
            if done[t] {
                continue;
            }
            for &s in &last {
                let d = rep[t].0.abs_diff(rep[s].0) + rep[t].1.abs_diff(rep[s].1);
                dist_to_tree[t] = dist_to_tree[t].min(d);
            }
        }
        let next = (0..k)
            .filter(|&t| !done[t])
            .min_by_key(|&t| (dist_to_tree[t], t))?;
        done[next] = true;
        if net.terms[next].iter().any(|&v| in_tree[v as usize]) {
            join(next, &mut in_tree, &mut tree);
            continue;
        }
        let (x0, y0, x1, y1) = net.bbox;
        let boxed = (
            x0.saturating_sub(BOX_MARGIN),
            y0.saturating_sub(BOX_MARGIN),
            (x1 + BOX_MARGIN).min(shape.nx - 1),
            (y1 + BOX_MARGIN).min(shape.ny - 1),
        );
        let path = match search.run(g, &tree, &net.terms[next], pres, boxed) {
            Some(p) => p,
            None => search.run(
                g,
                &tree,
                &net.terms[next],
                pres,
                (0, 0, shape.nx - 1, shape.ny - 1),
            )?,
        };
        for (node, e) in path {
            edges.push(e);
            if !in_tree[node as usize] {
                in_tree[node as usize] = true;
                tree.push(node);
            }
        }
        join(next, &mut in_tree, &mut tree);
    }
    edges.sort_unstable();
    edges.dedup();
    Some(edges)
}

struct Search {
    dist: Vec<f64>,
    parent: Vec<(u32, u32)>,
    closed: Vec<bool>,
    is_target: Vec<bool>,
    touched: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl Search {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            parent: vec![(NONE, NONE); n],
            closed: vec![false; n],
            is_target: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            let v = v as usize;
            self.dist[v] = f64::INFINITY;
            self.parent[v] = (NONE, NONE);
            self.closed[v] = false;
            self.is_target[v] = false;
        }
        self.touched.clear();
    }

    fn touch(&mut self, v: u32) {
        if self.dist[v as usize].is_infinite() && !self.is_target[v as usize] {
            self.touched.push(v);
        }
    }

    /// Cheapest path from any source to any target through gcells inside
    /// `region`, as `(node, edge)` pairs walking back from the reached
    /// target (sources excluded).
    fn run(
        &mut self,
        g: &RoutingGraph,
        sources: &[u32],
        targets: &[u32],
        pres: f64,
        region: (usize, usize, usize, usize),
    ) -> Option<Vec<(u32, u32)>> {
        let shape = &g.shape;
        let tc: Vec<(usize, usize, usize)> = targets.iter().map(|&t| shape.coords(t)).collect();
        let h = |v: u32| {
            let (l, x, y) = shape.coords(v);
            tc.iter()
                .map(|&(tl, tx, ty)| l.abs_diff(tl) + x.abs_diff(tx) + y.abs_diff(ty))
                .min()
                .unwrap_or(0) as f64
        };
        for &t in targets {
            self.touch(t);
            self.is_target[t as usize] = true;
        }
        let mut heap = BinaryHeap::new();
        for &s in sources {
            self.touch(s);
            self.dist[s as usize] = 0.0;
            heap.push(Key { f: h(s), node: s });
        }
        let mut reached = None;
        while let Some(Key { node, .. }) = heap.pop() {
            if self.closed[node as usize] {
                continue;
            }
            self.closed[node as usize] = true;
            if self.is_target[node as usize] {
                reached = Some(node);
                break;
            }
            let gd = self.dist[node as usize];
            shape.for_each_neighbor(node, |nb, e| {
                if !g.usable(e) || self.closed[nb as usize] {
                    return;
                }
                let (_, x, y) = shape.coords(nb);
                if x < region.0 || x > region.2 || y < region.1 || y > region.3 {
                    return;
                }
                let nd = gd + edge_cost(g, e, pres);
                if nd < self.dist[nb as usize] {
                    self.touch(nb);
                    self.dist[nb as usize] = nd;
                    self.parent[nb as usize] = (node, e);
                    heap.push(Key {
                        f: nd + h(nb),
                        node: nb,
                    });
                }
            });
        }
        let out = reached.map(|mut v| {
            let mut path = Vec::new();
            while self.parent[v as usize].0 != NONE {
                let (p, e) = self.parent[v as usize];
                path.push((v, e));
                v = p;
            }
            path
        });
        self.reset();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::Direction;
    use crate::globalroute::graph::EdgeKind;

    fn graph(nx: usize, ny: usize, nl: usize, cap: u32) -> RoutingGraph {
        let dirs = (0..nl)
            .map(|l| {
                if l % 2 == 0 {
                    Direction::Horizontal
                } else {
                    Direction::Vertical
                }
            })
            .collect();
        let shape = GridShape::new(nx, ny, dirs, 1);
        let n = shape.num_edges();
        RoutingGraph {
            shape,
            capacity: vec![cap; n],
            demand: vec![0; n],
            history: vec![0.0; n],
        }
    }

    fn terms(g: &RoutingGraph, pts: &[(usize, usize, u32)]) -> NetTerms {
        let c: Vec<_> = pts.iter().map(|&p| vec![p]).collect();
        net_terms(&g.shape, &c)
    }

    #[test]
    fn straight_two_pin() {
        let g = graph(5, 1, 1, 4);
        let r = route_net(&g, &terms(&g, &[(0, 0, 1), (4, 0, 1)]), PRES_START).unwrap();
        assert_eq!(r, vec![0, 1, 2, 3]);
    }

    #[test]
    fn bend_needs_vias() {
        let g = graph(3, 3, 2, 4);
        let r = route_net(&g, &terms(&g, &[(0, 0, 1), (2, 2, 1)]), PRES_START).unwrap();
        let vias = r
            .iter()
            .filter(|&&e| matches!(g.shape.kind(e), EdgeKind::Via(..)))
            .count();
        assert_eq!(vias, 2);
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn shared_tree_edges_are_free() {
        let g = graph(5, 1, 1, 4);
        let r = route_net(
            &g,
            &terms(&g, &[(0, 0, 1), (4, 0, 1), (2, 0, 1)]),
            PRES_START,
        )
        .unwrap();
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn blocked_is_unroutable() {
        let mut g = graph(3, 1, 1, 4);
        g.capacity[1] = 0;
        assert!(route_net(&g, &terms(&g, &[(0, 0, 1), (2, 0, 1)]), PRES_START).is_none());
        let nets = vec![Some(terms(&g, &[(0, 0, 1), (2, 0, 1)]))];
        let e = negotiate(&mut g, &nets, &["n"], &RouteParams::default()).unwrap_err();
        assert_eq!(e, RouteError::Unroutable("n".into()));
    }

    #[test]
    fn negotiation_spreads_nets() {
        // two nets wanting the same capacity-1 row; a detour row exists
        let mut g = graph(4, 2, 2, 1);
        let a = terms(&g, &[(0, 0, 1), (3, 0, 1)]);
        let b = terms(&g, &[(0, 0, 1), (3, 0, 1)]);
        let nets = vec![Some(a), Some(b)];
        let (routes, _) = negotiate(&mut g, &nets, &["a", "b"], &RouteParams::default()).unwrap();
        assert!(routes.iter().all(Option::is_some));
        assert_eq!(g.overflow().1, 0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let base = graph(12, 12, 4, 2);
        let mut nets = Vec::new();
        let mut ids = Vec::new();
        for i in 0..40usize {
            let p = |k: usize| {
                (
                    (i * 7 + k * 5) % 12,
                    (i * 3 + k * 11) % 12,
                    (1 + (i + k) % 2) as u32,
                )
            };
            nets.push(Some(terms(&base, &[p(0), p(1), p(2)])));
            ids.push(format!("n{i}"));
        }
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        let run = |parallel| {
            let mut g = base.clone();
            let params = RouteParams {
                parallel,
                ..RouteParams::default()
            };
            let r = negotiate(&mut g, &nets, &ids, &params).unwrap();
            (r, g.demand)
        };
        assert_eq!(run(false), run(true));
    }
}
