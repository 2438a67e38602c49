//! Die sizing, HPWL-driven placement and placement persistence.

mod anneal;
mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{CellLibrary, FabricSpec};
use crate::netlist::Netlist;
use crate::rent::PinDensityInput;

pub use anneal::{place, place_with, PlaceParams, PlaceStats};
pub use io::{
    parse_placement_meta, read_placement, write_placement_csv, write_placement_meta, PlacementMeta,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlaceError {
    #[error("netlist has no cells")]
    EmptyNetlist,
    #[error("utilization {0} outside (0, 1]")]
    Utilization(f64),
    #[error("die holds {slots} cell slots but the netlist has {cells} cells")]
    Infeasible { cells: usize, slots: usize },
    #[error("{0}")]
    Netlist(String),
    #[error("cell {0} is not placed")]
    Unplaced(String),
    #[error("cell {cell} at ({x}, {y}) {problem}")]
    Illegal {
        cell: String,
        x: u32,
        y: u32,
        problem: String,
    },
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Die {
    /// sites
    pub width: u32,
    pub height: u32,
    pub site_nm: f64,
    pub utilization: f64,
}

impl Die {
    pub fn sites(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn area_um2(&self) -> f64 {
        let s = self.site_nm / 1000.0;
        self.sites() as f64 * s * s
    }

    /// Cell slots when cells of `w x h` sites are packed in rows.
    pub fn slots(&self, w: u32, h: u32) -> (u32, u32) {
        (self.width / w.max(1), self.height / h.max(1))
    }
}

/// Smallest near-square die with cell area / die area at most
/// `utilization`: width `ceil(sqrt(area))`, height `ceil(area / width)`,
/// widened one site at a time until the cells fit as whole slots.
pub fn size_die(
    netlist: &Netlist,
    fabric: &FabricSpec,
    utilization: f64,
) -> Result<Die, PlaceError> {
    if !(utilization > 0.0 && utilization <= 1.0) {
        return Err(PlaceError::Utilization(utilization));
    }
    let n = netlist.cells.len();
    if n == 0 {
        return Err(PlaceError::EmptyNetlist);
    }
    let (cw, ch) = (fabric.cell_width, fabric.cell_height);
    let cell_area = n as f64 * cw as f64 * ch as f64;
    // guard against 60 / 0.6 = 100.00000000000001
    let area = (cell_area / utilization * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let mut width = ((area as f64).sqrt().ceil() as u64).max(1);
    let height_for = |w: u64| area.div_ceil(w);
    loop {
        let height = height_for(width).max(ch as u64);
        let w = width.max(cw as u64);
        if (w / cw as u64) * (height / ch as u64) >= n as u64 {
            return Ok(Die {
                width: w as u32,
                height: height as u32,
                site_nm: fabric.site_nm,
                utilization,
            });
        }
        width += 1;
    }
}

/// Cell origins in site units, indexed like `netlist.cells`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub die: Die,
    pub positions: Vec<(u32, u32)>,
}

impl Placement {
    pub fn translate(&self, dx: i64, dy: i64) -> Placement {
        Placement {
            die: self.die,
            positions: self
                .positions
                .iter()
                .map(|&(x, y)| ((x as i64 + dx) as u32, (y as i64 + dy) as u32))
                .collect(),
        }
    }
}

/// Pin offsets are snapped to 1/1024 site so every terminal coordinate is
/// exact in f64 and HPWL does not change under translation.
pub const PIN_OFFSET_GRID: f64 = 1024.0;

pub fn snap(offset: f64) -> f64 {
    (offset * PIN_OFFSET_GRID).round() / PIN_OFFSET_GRID
}

/// Terminal locations of each net as `(cell, dx, dy)`, the offset being
/// the pin's first access point.
pub(crate) struct PinModel {
    pub nets: Vec<Vec<(usize, f64, f64)>>,
    pub cell_nets: Vec<Vec<usize>>,
}

impl PinModel {
    pub fn new(netlist: &Netlist, lib: &CellLibrary) -> Result<Self, PlaceError> {
        let conn = netlist
            .connectivity()
            .map_err(|f| PlaceError::Netlist(f.message))?;
        let nets = conn
            .net_pins
            .iter()
            .map(|pins| {
                pins.iter()
                    .map(|p| {
                        let m = &netlist.cells[p.cell].master;
                        let master = lib.get(m).ok_or_else(|| {
                            PlaceError::Netlist(format!("no library master for {m}"))
                        })?;
                        let a = master.pins[p.pin].accesses[0];
                        Ok((p.cell, snap(a.x), snap(a.y)))
                    })
                    .collect::<Result<Vec<_>, PlaceError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            nets,
            cell_nets: conn.cell_nets,
        })
    }

    pub fn net_cost(&self, ni: usize, pos: &[(u32, u32)]) -> f64 {
        let pts = self.nets[ni]
            .iter()
            .map(|&(c, dx, dy)| (pos[c].0 as f64 + dx, pos[c].1 as f64 + dy));
        net_hpwl(pts)
    }

    pub fn total(&self, pos: &[(u32, u32)]) -> f64 {
        (0..self.nets.len())
            .map(|ni| self.net_cost(ni, pos))
            .fold(0.0, |a, b| a + b)
    }
}

/// Bounding-box half perimeter of a point set; 0 for fewer than two points.
pub fn net_hpwl(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut it = points.into_iter();
    let Some((x, y)) = it.next() else { return 0.0 };
    let (mut x0, mut x1, mut y0, mut y1) = (x, x, y, y);
    for (x, y) in it {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x1 - x0) + (y1 - y0)
}

/// Total HPWL in site units over first-access terminal locations.
pub fn hpwl(
    netlist: &Netlist,
    lib: &CellLibrary,
    placement: &Placement,
) -> Result<f64, PlaceError> {
    if placement.positions.len() != netlist.cells.len() {
        let missing = netlist
            .cells
            .get(placement.positions.len())
            .map_or_else(String::new, |c| c.id.clone());
        return Err(PlaceError::Unplaced(missing));
    }
    Ok(PinModel::new(netlist, lib)?.total(&placement.positions))
}

/// Checks that every cell lies inside the die and no two footprints
/// overlap.
pub fn check_legal(
    netlist: &Netlist,
    fabric: &FabricSpec,
    placement: &Placement,
) -> Result<(), PlaceError> {
    if placement.positions.len() != netlist.cells.len() {
        let missing = netlist
            .cells
            .get(placement.positions.len())
            .map_or_else(String::new, |c| c.id.clone());
        return Err(PlaceError::Unplaced(missing));
    }
    let die = placement.die;
    let (cw, ch) = (fabric.cell_width, fabric.cell_height);
    let mut owner = vec![u32::MAX; die.sites() as usize];
    for (i, &(x, y)) in placement.positions.iter().enumerate() {
        let illegal = |problem: String| PlaceError::Illegal {
            cell: netlist.cells[i].id.clone(),
            x,
            y,
            problem,
        };
        if x as u64 + cw as u64 > die.width as u64 || y as u64 + ch as u64 > die.height as u64 {
            return Err(illegal("extends outside the die".into()));
        }
        for yy in y..y + ch {
            for xx in x..x + cw {
                let s = &mut owner[yy as usize * die.width as usize + xx as usize];
                if *s != u32::MAX {
                    return Err(illegal(format!(
                        "overlaps {}",
                        netlist.cells[*s as usize].id
                    )));
                }
                *s = i as u32;
            }
        }
    }
    Ok(())
}

/// Pin count, die area in µm² and pin access layer count for the
/// analytic demand model.
pub fn pin_density_of(
    placement: &Placement,
    netlist: &Netlist,
    fabric: &FabricSpec,
) -> PinDensityInput {
    PinDensityInput {
        total_pins: netlist.total_terminals() as u64,
        die_area: placement.die.area_um2(),
        pin_access_layers: fabric.pin_access_layer_count() as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{builtin_fabric, FabricKind};
    use crate::netlist::{CellInstance, MasterDecl};

    pub(crate) fn unit_fabric() -> FabricSpec {
        let mut f = builtin_fabric(FabricKind::Planar2D);
        f.cell_width = 1;
        f.cell_height = 1;
        f.cell_obstacles.clear();
        f
    }

    pub(crate) fn chain(n: usize) -> Netlist {
        let mut nl = Netlist::new("chain");
        nl.masters
            .insert("BUF".into(), MasterDecl::new("BUF", ["A", "Y"]));
        for i in 0..n {
            nl.cells.push(CellInstance {
                id: format!("c{i}"),
                master: "BUF".into(),
                is_sequential: false,
            });
        }
        for i in 1..n {
            nl.nets.push(crate::netlist::Net {
                id: format!("n{i}"),
                terminals: vec![
                    crate::netlist::Terminal::new(format!("c{}", i - 1), "Y"),
                    crate::netlist::Terminal::new(format!("c{i}"), "A"),
                ],
                driver: Some(0),
            });
        }
        nl
    }

    #[test]
    fn die_sizing() {
        let f = unit_fabric();
        let d = size_die(&chain(60), &f, 0.6).unwrap();
        assert_eq!((d.width, d.height), (10, 10));
        let d = size_die(&chain(60), &f, 1.0).unwrap();
        assert_eq!((d.width, d.height), (8, 8));
        assert!(d.width * d.height >= 60);
        assert_eq!(
            size_die(&Netlist::new("x"), &f, 0.6),
            Err(PlaceError::EmptyNetlist)
        );
        assert_eq!(
            size_die(&chain(3), &f, 0.0),
            Err(PlaceError::Utilization(0.0))
        );
    }

    #[test]
    fn die_holds_whole_cells() {
        for k in FabricKind::ALL {
            let f = builtin_fabric(k);
            for n in [1, 7, 100, 1234] {
                let d = size_die(&chain(n), &f, 0.6).unwrap();
                let (c, r) = d.slots(f.cell_width, f.cell_height);
                assert!((c * r) as usize >= n);
                assert!(
                    d.sites() as f64 * 0.6
                        >= (n as u32 * f.cell_width * f.cell_height) as f64 - 1e-9
                );
            }
        }
    }

    #[test]
    fn hpwl_examples() {
        assert_eq!(net_hpwl([(0.0, 0.0), (3.0, 4.0)]), 7.0);
        assert_eq!(net_hpwl([(0.0, 0.0), (2.0, 5.0), (4.0, 1.0)]), 9.0);
        assert_eq!(net_hpwl([(2.0, 2.0)]), 0.0);
    }

    #[test]
    fn pin_density_counts() {
        let f = unit_fabric();
        let nl = chain(10);
        let die = size_die(&nl, &f, 0.6).unwrap();
        let p = Placement {
            die,
            positions: vec![(0, 0); 10],
        };
        let d = pin_density_of(&p, &nl, &f);
        assert_eq!(d.total_pins, 18);
        assert_eq!(d.pin_access_layers, 1);
        let s = pin_density_of(&p, &nl, &builtin_fabric(FabricKind::SkybridgeS3DC));
        assert_eq!(s.pin_access_layers, 5);
    }

    #[test]
    fn legality_checks() {
        let f = unit_fabric();
        let nl = chain(2);
        let die = Die {
            width: 2,
            height: 1,
            site_nm: 200.0,
            utilization: 1.0,
        };
        assert!(check_legal(
            &nl,
            &f,
            &Placement {
                die,
                positions: vec![(0, 0), (1, 0)]
            }
        )
        .is_ok());
        assert!(matches!(
            check_legal(
                &nl,
                &f,
                &Placement {
                    die,
                    positions: vec![(0, 0), (0, 0)]
                }
            ),
            Err(PlaceError::Illegal { .. })
        ));
        assert!(matches!(
            check_legal(
                &nl,
                &f,
                &Placement {
                    die,
                    positions: vec![(0, 0), (2, 0)]
                }
            ),
            Err(PlaceError::Illegal { .. })
        ));
        assert!(matches!(
            check_legal(
                &nl,
                &f,
                &Placement {
                    die,
                    positions: vec![(0, 0)]
                }
            ),
            Err(PlaceError::Unplaced(_))
        ));
    }
}
