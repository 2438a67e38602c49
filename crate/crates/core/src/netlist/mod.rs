//! Gate-level netlists: data model, validation, text format and a
//! Rent-parameterized synthetic generator.

mod parse;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

pub use parse::{parse_netlist, write_netlist, ParseError, ParseErrorKind};
pub use synth::{generate_synthetic, SynthError, SynthesisParams};

/// A master as seen by the netlist: a name and an ordered pin list.
///
/// The last pin is the cell output; every other pin is an input. Geometry
/// (footprint, pin access points) is attached later by the fabric library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterDecl {
    pub name: String,
    pub pins: Vec<String>,
}

impl MasterDecl {
    pub fn new(name: impl Into<String>, pins: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            pins: pins.into_iter().map(Into::into).collect(),
        }
    }

    pub fn pin_index(&self, pin: &str) -> Option<usize> {
        self.pins.iter().position(|p| p == pin)
    }

    pub fn output_pin(&self) -> Option<&str> {
        self.pins.last().map(String::as_str)
    }

    pub fn is_output(&self, pin_index: usize) -> bool {
        pin_index + 1 == self.pins.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellInstance {
    pub id: String,
    pub master: String,
    pub is_sequential: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Terminal {
    pub cell: String,
    pub pin: String,
}

impl Terminal {
    pub fn new(cell: impl Into<String>, pin: impl Into<String>) -> Self {
        Self {
            cell: cell.into(),
            pin: pin.into(),
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.cell, self.pin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub id: String,
    pub terminals: Vec<Terminal>,
    /// Index into `terminals` of the driving pin, if any.
    pub driver: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Netlist {
    pub name: String,
    pub masters: BTreeMap<String, MasterDecl>,
    pub cells: Vec<CellInstance>,
    pub nets: Vec<Net>,
}

impl Netlist {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn total_terminals(&self) -> usize {
        self.nets.iter().map(|n| n.terminals.len()).sum()
    }

    /// Resolves every terminal to `(cell index, pin index)`.
    ///
    /// Fails on the first reference that does not resolve; duplicate ids are
    /// resolved to their first occurrence. Run [`validate`] first for a full
    /// diagnosis.
    pub fn connectivity(&self) -> Result<Connectivity, Finding> {
        let mut cell_index = HashMap::with_capacity(self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            cell_index.entry(c.id.as_str()).or_insert(i);
        }
        let mut cell_master = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let m = self.masters.get(&c.master).ok_or_else(|| {
                Finding::error(
                    FindingKind::UnknownMaster,
                    format!("cell {} uses unknown master {}", c.id, c.master),
                )
            })?;
            cell_master.push(m);
        }

        let mut net_pins = Vec::with_capacity(self.nets.len());
        let mut cell_nets = vec![Vec::new(); self.cells.len()];
        for (ni, net) in self.nets.iter().enumerate() {
            let mut pins = Vec::with_capacity(net.terminals.len());
            for t in &net.terminals {
                let &ci = cell_index.get(t.cell.as_str()).ok_or_else(|| {
                    Finding::error(
                        FindingKind::UnknownCell,
                        format!("net {} references unknown cell {}", net.id, t.cell),
                    )
                })?;
                let pi = cell_master[ci].pin_index(&t.pin).ok_or_else(|| {
                    Finding::error(
                        FindingKind::UnknownPin,
                        format!("net {} references unknown pin {}", net.id, t),
                    )
                })?;
                pins.push(PinRef { cell: ci, pin: pi });
                if cell_nets[ci].last() != Some(&ni) {
                    cell_nets[ci].push(ni);
                }
            }
            net_pins.push(pins);
        }
        Ok(Connectivity {
            net_pins,
            cell_nets,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PinRef {
    pub cell: usize,
    pub pin: usize,
}

/// Index-resolved view of a netlist used by placement and routing.
#[derive(Debug, Clone)]
pub struct Connectivity {
    /// Terminals of each net, in netlist order.
    pub net_pins: Vec<Vec<PinRef>>,
    /// Distinct nets touching each cell, in ascending net order.
    pub cell_nets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    DuplicateCellId,
    DuplicateNetId,
    DuplicatePin,
    UnknownMaster,
    UnknownCell,
    UnknownPin,
    DuplicateTerminal,
    EmptyNet,
    DanglingNet,
    BadDriver,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub message: String,
}

impl Finding {
    fn error(kind: FindingKind, message: String) -> Self {
        Self {
            severity: Severity::Error,
            kind,
            message,
        }
    }

    fn warning(kind: FindingKind, message: String) -> Self {
        Self {
            severity: Severity::Warning,
            kind,
            message,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

impl std::error::Error for Finding {}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }
}

/// Checks every netlist invariant. Dangling (single-terminal) nets are
/// warnings; everything else is an error.
pub fn validate(netlist: &Netlist) -> ValidationReport {
    let mut findings = Vec::new();

    for m in netlist.masters.values() {
        let mut seen = HashSet::new();
        for p in &m.pins {
            if !seen.insert(p.as_str()) {
                findings.push(Finding::error(
                    FindingKind::DuplicatePin,
                    format!("master {} declares pin {} twice", m.name, p),
                ));
            }
        }
    }

    let mut cells: HashMap<&str, &CellInstance> = HashMap::new();
    for c in &netlist.cells {
        if cells.insert(c.id.as_str(), c).is_some() {
            findings.push(Finding::error(
                FindingKind::DuplicateCellId,
                format!("duplicate cell id {}", c.id),
            ));
        }
        if !netlist.masters.contains_key(&c.master) {
            findings.push(Finding::error(
                FindingKind::UnknownMaster,
                format!("cell {} uses unknown master {}", c.id, c.master),
            ));
        }
    }

    let mut net_ids = HashSet::new();
    for net in &netlist.nets {
        if !net_ids.insert(net.id.as_str()) {
            findings.push(Finding::error(
                FindingKind::DuplicateNetId,
                format!("duplicate net id {}", net.id),
            ));
        }
        match net.terminals.len() {
            0 => findings.push(Finding::error(
                FindingKind::EmptyNet,
                format!("net {} has no terminals", net.id),
            )),
            1 => findings.push(Finding::warning(
                FindingKind::DanglingNet,
                format!("dangling net {}", net.id),
            )),
            _ => {}
        }
        if let Some(d) = net.driver {
            if d >= net.terminals.len() {
                findings.push(Finding::error(
                    FindingKind::BadDriver,
                    format!("net {} driver index {} out of range", net.id, d),
                ));
            }
        }
        let mut seen = HashSet::new();
        for t in &net.terminals {
            if !seen.insert(t) {
                findings.push(Finding::error(
                    FindingKind::DuplicateTerminal,
                    format!("net {} lists terminal {} twice", net.id, t),
                ));
            }
            let Some(cell) = cells.get(t.cell.as_str()) else {
                findings.push(Finding::error(
                    FindingKind::UnknownCell,
                    format!("net {} references unknown cell {}", net.id, t.cell),
                ));
                continue;
            };
            if let Some(m) = netlist.masters.get(&cell.master) {
                if m.pin_index(&t.pin).is_none() {
                    findings.push(Finding::error(
                        FindingKind::UnknownPin,
                        format!("net {} references unknown pin {}", net.id, t),
                    ));
                }
            }
        }
    }

    ValidationReport { findings }
}
