//! Gcell lattice construction and negotiated-congestion global routing.

mod congestion;
mod graph;
mod router;

pub use congestion::{
    demand_resource_ratios, routes_text, CongestionMap, LayerRatio, ResourceKind,
};
pub use graph::{apply_obstacles, build_grid, terminal_gcells, EdgeKind, GridShape, RoutingGraph};
pub use router::{route, route_graph, GraphNet, NetRoute, RouteError, RouteOutcome, RouteParams};
