//! Technology fabrics: routing-layer stacks and cell masters with
//! multi-layer pin access.

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::netlist::Netlist;

pub use config::{
    default_energy_table, load_fabric, parse_energy_table, write_fabric, CellEnergyEntry,
    EnergyTable, FabricError, FabricErrorKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FabricKind {
    Planar2D,
    TransistorMonolithic3D,
    SkybridgeS3DC,
}

impl FabricKind {
    pub const ALL: [FabricKind; 3] = [
        Self::Planar2D,
        Self::TransistorMonolithic3D,
        Self::SkybridgeS3DC,
    ];

    /// Short name used in configs, reports and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Self::Planar2D => "2d",
            Self::TransistorMonolithic3D => "tmi",
            Self::SkybridgeS3DC => "s3dc",
        }
    }
}

impl fmt::Display for FabricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for FabricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "2d" | "planar2d" | "planar" => Ok(Self::Planar2D),
            "tmi" | "t-mi" | "tl-mi" | "transistormonolithic3d" => Ok(Self::TransistorMonolithic3D),
            "s3dc" | "skybridge" | "skybridges3dc" => Ok(Self::SkybridgeS3DC),
            _ => Err(format!("unknown fabric kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    pub fn letter(self) -> char {
        match self {
            Self::Horizontal => 'h',
            Self::Vertical => 'v',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingLayer {
    /// 1-based, M1 = 1.
    pub index: u32,
    pub preferred_direction: Direction,
    pub track_pitch_nm: f64,
    /// Tracks per gcell edge; 0 blocks the layer for inter-cell routing.
    pub capacity: u32,
    /// fF/µm
    pub cap_per_um: f64,
    /// Ω/µm
    pub res_per_um: f64,
}

/// Axis-aligned rectangle in site units, `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        Rect {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub layer: u32,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabricSpec {
    pub kind: FabricKind,
    pub layers: Vec<RoutingLayer>,
    /// Layers carrying pin access points; N is their count.
    pub pin_access_layers: Vec<u32>,
    pub footprint_scale_vs_2d: f64,
    pub supply_voltage: f64,
    pub via_stack_exclusive: bool,
    /// Signals per via edge when stacks are not exclusive.
    pub via_capacity: u32,
    pub site_nm: f64,
    /// Standard cell footprint in sites.
    pub cell_width: u32,
    pub cell_height: u32,
    /// Wirelength charged per via hop, µm.
    pub via_length_um: f64,
    /// Obstacles present in every cell, relative to the cell origin.
    pub cell_obstacles: Vec<Obstacle>,
}

const PLANAR_CELL_AREA_NM2: f64 = 8.0 * 2.0 * 200.0 * 200.0;
const DEFAULT_TRACKS: u32 = 10;
const DEFAULT_PITCH_NM: f64 = 64.0;
const DEFAULT_CAP: f64 = 0.2;
const DEFAULT_RES: f64 = 2.0;
const RAIL_HEIGHT: f64 = 0.25;

pub(crate) fn default_layer(index: u32) -> RoutingLayer {
    RoutingLayer {
        index,
        preferred_direction: if index % 2 == 1 {
            Direction::Horizontal
        } else {
            Direction::Vertical
        },
        track_pitch_nm: DEFAULT_PITCH_NM,
        capacity: DEFAULT_TRACKS,
        cap_per_um: DEFAULT_CAP,
        res_per_um: DEFAULT_RES,
    }
}

/// Supply rails: VSS along the bottom edge on M1, VDD along the top edge
/// on M1 for planar cells and on M9 for S3DC, whose supply sits at the
/// top of the nanowires.
pub(crate) fn rails(kind: FabricKind, w: f64, h: f64) -> Vec<Obstacle> {
    let (bottom_layer, top_layer) = if kind == FabricKind::SkybridgeS3DC {
        (1, 9)
    } else {
        (1, 1)
    };
    vec![
        Obstacle {
            layer: bottom_layer,
            rect: Rect {
                x0: 0.0,
                y0: 0.0,
                x1: w,
                y1: RAIL_HEIGHT,
            },
        },
        Obstacle {
            layer: top_layer,
            rect: Rect {
                x0: 0.0,
                y0: h - RAIL_HEIGHT,
                x1: w,
                y1: h,
            },
        },
    ]
}

/// Built-in stack for each technology.
pub fn builtin_fabric(kind: FabricKind) -> FabricSpec {
    let (nlayers, pins, site, w, h, exclusive, via_cap) = match kind {
        FabricKind::Planar2D => (8, vec![1], 200.0, 8, 2, false, 4),
        FabricKind::TransistorMonolithic3D => (8, vec![1], 200.0, 8, 1, false, 4),
        FabricKind::SkybridgeS3DC => (13, vec![2, 3, 4, 5, 6], 80.0, 3, 3, true, 1),
    };
    let mut spec = FabricSpec {
        kind,
        layers: (1..=nlayers).map(default_layer).collect(),
        pin_access_layers: pins,
        footprint_scale_vs_2d: 0.0,
        supply_voltage: 0.8,
        via_stack_exclusive: exclusive,
        via_capacity: via_cap,
        site_nm: site,
        cell_width: w,
        cell_height: h,
        via_length_um: 0.0,
        cell_obstacles: rails(kind, w as f64, h as f64),
    };
    spec.footprint_scale_vs_2d = spec.cell_area_nm2() / PLANAR_CELL_AREA_NM2;
    spec
}

impl FabricSpec {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// N, the number of layers carrying pin accesses.
    pub fn pin_access_layer_count(&self) -> usize {
        self.pin_access_layers.len()
    }

    pub fn layer(&self, index: u32) -> Option<&RoutingLayer> {
        self.layers.get(index.checked_sub(1)? as usize)
    }

    pub fn cell_area_nm2(&self) -> f64 {
        self.cell_width as f64 * self.cell_height as f64 * self.site_nm * self.site_nm
    }

    pub fn site_um(&self) -> f64 {
        self.site_nm / 1000.0
    }

    /// Effective via capacity between adjacent layers.
    pub fn via_edge_capacity(&self) -> u32 {
        if self.via_stack_exclusive {
            1
        } else {
            self.via_capacity
        }
    }

    /// Checks the structural invariants. Returned strings describe each
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        if self.layers.is_empty() {
            return Err("fabric has no routing layers".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.index as usize != i + 1 {
                return Err(format!(
                    "layer indices must be contiguous from 1; found M{} at position {}",
                    l.index,
                    i + 1
                ));
            }
            if !(l.track_pitch_nm > 0.0) {
                return Err(format!("M{} pitch must be positive", l.index));
            }
            if !(l.cap_per_um >= 0.0 && l.res_per_um >= 0.0) {
                return Err(format!("M{} RC must be non-negative", l.index));
            }
        }
        if self.pin_access_layers.is_empty() {
            return Err("at least one pin access layer is required".into());
        }
        for (i, &p) in self.pin_access_layers.iter().enumerate() {
            if p == 0 || p as usize > self.layers.len() {
                return Err(format!("pin access layer {p} outside the stack"));
            }
            if self.pin_access_layers[..i].contains(&p) {
                return Err(format!("pin access layer {p} listed twice"));
            }
        }
        if self.cell_width == 0 || self.cell_height == 0 || !(self.site_nm > 0.0) {
            return Err("cell footprint must be positive".into());
        }
        if !(self.supply_voltage > 0.0) {
            return Err("supply voltage must be positive".into());
        }
        for o in &self.cell_obstacles {
            if o.layer == 0 || o.layer as usize > self.layers.len() {
                return Err(format!("obstacle on missing layer {}", o.layer));
            }
        }
        Ok(())
    }

    /// Pin access counts for a generic master: inputs cycle through the
    /// NAND3 A/B/C counts, the output uses the OUT count.
    pub fn access_counts(&self) -> ([usize; 3], usize) {
        match self.kind {
            FabricKind::Planar2D => ([5, 6, 5], 4),
            FabricKind::TransistorMonolithic3D => ([3, 2, 3], 3),
            FabricKind::SkybridgeS3DC => ([5, 5, 5], 4),
        }
    }

    /// Physical masters for every master in `netlist`.
    pub fn library(&self, netlist: &Netlist) -> CellLibrary {
        let (inputs, out) = self.access_counts();
        let mut masters = BTreeMap::new();
        for m in netlist.masters.values() {
            let last = m.pins.len().saturating_sub(1);
            let spec: Vec<PinSpec> = m
                .pins
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i == last {
                        PinSpec::new(p, PinDirection::Output, out)
                    } else {
                        PinSpec::new(p, PinDirection::Input, inputs[i % 3])
                    }
                })
                .collect();
            masters.insert(m.name.clone(), make_cell_master(self, &m.name, &spec));
        }
        CellLibrary { masters }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PinDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub layer: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinDef {
    pub name: String,
    pub direction: PinDirection,
    pub accesses: Vec<AccessPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMaster {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub pins: Vec<PinDef>,
    pub obstacles: Vec<Obstacle>,
}

impl CellMaster {
    pub fn pin(&self, name: &str) -> Option<&PinDef> {
        self.pins.iter().find(|p| p.name == name)
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

#[derive(Debug, Clone)]
pub struct PinSpec {
    pub name: String,
    pub direction: PinDirection,
    pub access_count: usize,
}

impl PinSpec {
    pub fn new(name: &str, direction: PinDirection, access_count: usize) -> Self {
        Self {
            name: name.to_string(),
            direction,
            access_count,
        }
    }
}

/// Builds a master with the fabric's cell footprint. Pins occupy evenly
/// spaced columns. Planar and T-MI accesses stack along the column on M1;
/// S3DC accesses sit at the column centre and climb through the pin
/// access layers, wrapping when there are more accesses than layers.
pub fn make_cell_master(fabric: &FabricSpec, name: &str, pins: &[PinSpec]) -> CellMaster {
    let w = fabric.cell_width as f64;
    let h = fabric.cell_height as f64;
    let np = pins.len().max(1) as f64;
    let layers = &fabric.pin_access_layers;
    let stacked = fabric.kind == FabricKind::SkybridgeS3DC;
    let defs = pins
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = (i as f64 + 0.5) * w / np;
            let count = p.access_count.max(1);
            let accesses = (0..count)
                .map(|j| {
                    if stacked {
                        AccessPoint {
                            layer: layers[j % layers.len()],
                            x,
                            y: h / 2.0,
                        }
                    } else {
                        AccessPoint {
                            layer: layers[0],
                            x,
                            y: (j as f64 + 0.5) * h / count as f64,
                        }
                    }
                })
                .collect();
            PinDef {
                name: p.name.clone(),
                direction: p.direction,
                accesses,
            }
        })
        .collect();
    CellMaster {
        name: name.to_string(),
        width: fabric.cell_width,
        height: fabric.cell_height,
        pins: defs,
        obstacles: fabric.cell_obstacles.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLibrary {
    pub masters: BTreeMap<String, CellMaster>,
}

impl CellLibrary {
    pub fn get(&self, name: &str) -> Option<&CellMaster> {
        self.masters.get(name)
    }
}
