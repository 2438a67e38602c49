use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::graph::{EdgeKind, GridShape, RoutingGraph};
use super::router::NetRoute;

/// Final per-edge demand and capacity of a routed design.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionMap {
    pub shape: GridShape,
    pub capacity: Vec<u32>,
    pub demand: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Planar,
    Via,
}

/// Demand/capacity summary of one routing layer or one via level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRatio {
    /// 1-based; for vias, the lower layer.
    pub layer: u32,
    pub kind: ResourceKind,
    pub demand: u64,
    pub capacity: u64,
    /// `demand / capacity` summed over the layer.
    pub ratio: f64,
    pub max_edge_ratio: f64,
    pub overflow_edges: usize,
    pub overflow: u64,
}

fn ratio(d: u64, c: u64) -> f64 {
    match (d, c) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        _ => d as f64 / c as f64,
    }
}

impl CongestionMap {
    pub fn from_graph(g: &RoutingGraph) -> Self {
        Self {
            shape: g.shape.clone(),
            capacity: g.capacity.clone(),
            demand: g.demand.clone(),
        }
    }

    pub fn edge_ratio(&self, e: u32) -> f64 {
        ratio(
            self.demand[e as usize] as u64,
            self.capacity[e as usize] as u64,
        )
    }

    /// `(edges over capacity, total excess demand)`, vias included.
    pub fn overflow(&self) -> (usize, u64) {
        let mut n = 0;
        let mut t = 0;
        for (&d, &c) in self.demand.iter().zip(&self.capacity) {
            if d > c {
                n += 1;
                t += (d - c) as u64;
            }
        }
        (n, t)
    }

    pub fn is_congested(&self) -> bool {
        self.overflow().1 > 0
    }

    /// Planar layers first, then via levels.
    pub fn layer_ratios(&self) -> Vec<LayerRatio> {
        let nl = self.shape.nl();
        let blank = |layer: usize, kind| LayerRatio {
            layer: layer as u32 + 1,
            kind,
            demand: 0,
            capacity: 0,
            ratio: 0.0,
            max_edge_ratio: 0.0,
            overflow_edges: 0,
            overflow: 0,
        };
        let mut rows: Vec<LayerRatio> = (0..nl).map(|l| blank(l, ResourceKind::Planar)).collect();
        rows.extend((0..nl.saturating_sub(1)).map(|l| blank(l, ResourceKind::Via)));
        for e in 0..self.shape.num_edges() as u32 {
            let row = match self.shape.kind(e) {
                EdgeKind::Planar(l, ..) => &mut rows[l],
                EdgeKind::Via(l, ..) => &mut rows[nl + l],
            };
            let (d, c) = (
                self.demand[e as usize] as u64,
                self.capacity[e as usize] as u64,
            );
            row.demand += d;
            row.capacity += c;
            row.max_edge_ratio = row.max_edge_ratio.max(ratio(d, c));
            if d > c {
                row.overflow_edges += 1;
                row.overflow += d - c;
            }
        }
        for r in &mut rows {
            r.ratio = ratio(r.demand, r.capacity);
        }
        rows
    }

    /// Highest aggregate demand/capacity ratio over the planar layers.
    pub fn max_layer_ratio(&self) -> f64 {
        self.layer_ratios()
            .iter()
            .filter(|r| r.kind == ResourceKind::Planar)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    }

    /// `layer,x,y,dir,demand,capacity,ratio` for the planar edges of layer
    /// `l` (0-based) and the vias from `l` up to `l + 1`.
    pub fn layer_csv(&self, l: usize) -> String {
        let mut out = String::from("layer,x,y,dir,demand,capacity,ratio\n");
        for e in 0..self.shape.num_edges() as u32 {
            let (x, y, dir) = match self.shape.kind(e) {
                EdgeKind::Planar(el, x, y) if el == l => {
                    (x, y, self.shape.dirs[l].letter().to_string())
                }
                EdgeKind::Via(el, x, y) if el == l => (x, y, "via".to_string()),
                _ => continue,
            };
            let (d, c) = (self.demand[e as usize], self.capacity[e as usize]);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.4}",
                l + 1,
                x,
                y,
                dir,
                d,
                c,
                self.edge_ratio(e)
            );
        }
        out
    }
}

/// Per-layer ratios of a congestion map.
pub fn demand_resource_ratios(map: &CongestionMap) -> Vec<LayerRatio> {
    map.layer_ratios()
}

/// `net,edges` with edges as space-separated names.
pub fn routes_text(shape: &GridShape, routes: &[NetRoute]) -> String {
    let mut out = String::from("net,edges\n");
    for r in routes {
        let names: Vec<String> = r.edges.iter().map(|&e| shape.edge_name(e)).collect();
        let _ = writeln!(out, "{},{}", r.id, names.join(" "));
    }
    out
}
