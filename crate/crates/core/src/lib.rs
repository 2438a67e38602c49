//! Placement, global routing and routability analysis for comparing planar
//! CMOS, transistor-level monolithic 3D and Skybridge-style vertical
//! nanowire fabrics.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fabric;
pub mod flow;
pub mod globalroute;
pub mod metrics;
pub mod netlist;
pub mod placement;
pub mod rent;
