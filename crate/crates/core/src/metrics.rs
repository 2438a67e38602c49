//! Wirelength, dynamic power, footprint and PPA, plus comparison reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{EnergyTable, FabricSpec};
use crate::globalroute::{EdgeKind, GridShape, NetRoute};
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no energy entry for master {0}")]
    MissingEnergy(String),
    #[error("{0}")]
    Netlist(String),
    #[error("baseline {0} not among the report rows")]
    NoBaseline(String),
    #[error("row {0} has zero power or footprint")]
    Degenerate(String),
    #[error("power parameter {0} out of range")]
    Params(&'static str),
    #[error("malformed report: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    /// GHz
    pub clock_freq: f64,
    /// V
    pub supply_voltage: f64,
    pub switching_activity: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            clock_freq: 1.0,
            supply_voltage: 0.8,
            switching_activity: 0.2,
        }
    }
}

impl PowerParams {
    pub fn check(&self) -> Result<(), MetricsError> {
        if !(self.clock_freq > 0.0 && self.clock_freq.is_finite()) {
            return Err(MetricsError::Params("clock_freq"));
        }
        if !(self.supply_voltage > 0.0 && self.supply_voltage.is_finite()) {
            return Err(MetricsError::Params("supply_voltage"));
        }
        if !(self.switching_activity > 0.0 && self.switching_activity <= 1.0) {
            return Err(MetricsError::Params("switching_activity"));
        }
        Ok(())
    }

    // fF -> mW at f GHz: 1e-15 * 1e9 * 1e3
    fn cap_to_mw(&self, cap_ff: f64) -> f64 {
        self.switching_activity
            * self.clock_freq
            * self.supply_voltage
            * self.supply_voltage
            * cap_ff
            * 1e-3
    }
}

/// Length in µm of a gcell edge; via edges use the fabric's via length.
fn edge_um(shape: &GridShape, fabric: &FabricSpec, e: u32) -> (usize, f64) {
    match shape.kind(e) {
        EdgeKind::Planar(l, ..) => (l, shape.gcell as f64 * fabric.site_um()),
        EdgeKind::Via(l, ..) => (l, fabric.via_length_um),
    }
}

/// Total routed length in mm.
pub fn total_wirelength(routes: &[NetRoute], shape: &GridShape, fabric: &FabricSpec) -> f64 {
    let um: f64 = routes
        .iter()
        .flat_map(|r| &r.edges)
        .map(|&e| edge_um(shape, fabric, e).1)
        // `sum` of nothing is -0.0
        .fold(0.0, |a, b| a + b);
    um / 1000.0
}

/// Summed wire capacitance in fF; vias are charged at their lower layer's
/// capacitance per µm.
pub fn wire_capacitance(routes: &[NetRoute], shape: &GridShape, fabric: &FabricSpec) -> f64 {
    routes
        .iter()
        .flat_map(|r| &r.edges)
        .map(|&e| {
            let (l, len) = edge_um(shape, fabric, e);
            len * fabric.layers[l].cap_per_um
        })
        .fold(0.0, |a, b| a + b)
}

/// `activity * f * V^2 * C_wire` in mW.
pub fn wire_power(
    routes: &[NetRoute],
    shape: &GridShape,
    fabric: &FabricSpec,
    p: &PowerParams,
) -> f64 {
    p.cap_to_mw(wire_capacitance(routes, shape, fabric))
}

/// `(pin, internal)` power in mW: switched input-pin capacitance of every
/// connected input, and per-toggle internal energy of every cell.
pub fn cell_powers(
    netlist: &Netlist,
    energy: &EnergyTable,
    p: &PowerParams,
) -> Result<(f64, f64), MetricsError> {
    let conn = netlist
        .connectivity()
        .map_err(|f| MetricsError::Netlist(f.message))?;
    let entry = |master: &str| {
        energy
            .get(master)
            .ok_or_else(|| MetricsError::MissingEnergy(master.to_string()))
    };
    let mut pin_cap = 0.0;
    for pins in &conn.net_pins {
        for pr in pins {
            let m = &netlist.cells[pr.cell].master;
            if !netlist.masters[m].is_output(pr.pin) {
                pin_cap += entry(m)?.input_pin_cap;
            }
        }
    }
    let mut energy_fj = 0.0;
    for c in &netlist.cells {
        energy_fj += entry(&c.master)?.internal_energy;
    }
    // fJ * GHz = µW
    let internal = p.switching_activity * p.clock_freq * energy_fj * 1e-3;
    Ok((p.cap_to_mw(pin_cap), internal))
}

/// One row of a fabric comparison. Powers in mW, wirelength in mm,
/// footprint in µm².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub label: String,
    pub cell_count: usize,
    pub clock_freq: f64,
    pub total_wirelength: f64,
    pub wire_power: f64,
    pub pin_power: f64,
    pub internal_power: f64,
    pub total_power: f64,
    pub footprint: f64,
    pub footprint_normalized: f64,
    pub density_normalized: f64,
    pub ppa_normalized: f64,
    pub max_layer_ratio: f64,
    pub overflow_edges: usize,
}

impl BenchmarkReport {
    /// Row normalized against itself; see [`normalize`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: &str,
        cell_count: usize,
        clock_freq: f64,
        total_wirelength: f64,
        (wire_power, pin_power, internal_power): (f64, f64, f64),
        footprint: f64,
        max_layer_ratio: f64,
        overflow_edges: usize,
    ) -> Self {
        Self {
            label: label.to_string(),
            cell_count,
            clock_freq,
            total_wirelength,
            wire_power,
            pin_power,
            internal_power,
            total_power: wire_power + pin_power + internal_power,
            footprint,
            footprint_normalized: 1.0,
            density_normalized: 1.0,
            ppa_normalized: 1.0,
            max_layer_ratio,
            overflow_edges,
        }
    }

    fn raw_ppa(&self) -> f64 {
        self.clock_freq / (self.total_power * self.footprint)
    }
}

/// `(f / (P * S)) / (f_base / (P_base * S_base))` for every row.
pub fn ppa(rows: &[BenchmarkReport], baseline: &str) -> Result<Vec<f64>, MetricsError> {
    for r in rows {
        if !(r.total_power > 0.0 && r.footprint > 0.0) {
            return Err(MetricsError::Degenerate(r.label.clone()));
        }
    }
    let b = rows
        .iter()
        .find(|r| r.label == baseline)
        .ok_or_else(|| MetricsError::NoBaseline(baseline.to_string()))?;
    let base = b.raw_ppa();
    Ok(rows
        .iter()
        .map(|r| {
            if r.label == baseline {
                1.0
            } else {
                r.raw_ppa() / base
            }
        })
        .collect())
}

/// Fills the normalized columns against `baseline`.
pub fn normalize(rows: &mut [BenchmarkReport], baseline: &str) -> Result<(), MetricsError> {
    let p = ppa(rows, baseline)?;
    let bs = rows
        .iter()
        .find(|r| r.label == baseline)
        .map(|r| r.footprint)
        .unwrap_or(1.0);
    for (r, p) in rows.iter_mut().zip(p) {
        r.ppa_normalized = p;
        r.footprint_normalized = if r.label == baseline {
            1.0
        } else {
            r.footprint / bs
        };
        r.density_normalized = 1.0 / r.footprint_normalized;
    }
    Ok(())
}

/// Signed whole-percent change, `-69%` style.
pub fn percent_delta(value: f64, base: f64) -> String {
    if value == base {
        return "0%".into();
    }
    if base == 0.0 || !value.is_finite() || !base.is_finite() {
        return "n/a".into();
    }
    let d = ((value / base - 1.0) * 100.0).round() as i64;
    if d > 0 {
        format!("+{d}%")
    } else {
        format!("{d}%")
    }
}

const DELTA_COLUMNS: [&str; 6] = [
    "total_wirelength",
    "wire_power",
    "pin_power",
    "internal_power",
    "total_power",
    "footprint",
];

fn delta_values(r: &BenchmarkReport) -> [f64; 6] {
    [
        r.total_wirelength,
        r.wire_power,
        r.pin_power,
        r.internal_power,
        r.total_power,
        r.footprint,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Numbers as six-decimal fixed point so CSV and JSON carry the same
/// values.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "null".into()
    }
}

/// Renders rows with `<column>_delta` percent changes against the first
/// row, which is taken as the baseline.
pub fn emit_report(rows: &[BenchmarkReport], format: ReportFormat) -> String {
    let base = rows.first().map(delta_values).unwrap_or([0.0; 6]);
    let cells = |r: &BenchmarkReport| -> Vec<(String, String, bool)> {
        let mut v = vec![
            ("label".to_string(), r.label.clone(), true),
            ("cell_count".into(), r.cell_count.to_string(), false),
            ("clock_freq".into(), num(r.clock_freq), false),
            ("total_wirelength".into(), num(r.total_wirelength), false),
            ("wire_power".into(), num(r.wire_power), false),
            ("pin_power".into(), num(r.pin_power), false),
            ("internal_power".into(), num(r.internal_power), false),
            ("total_power".into(), num(r.total_power), false),
            ("footprint".into(), num(r.footprint), false),
            (
                "footprint_normalized".into(),
                num(r.footprint_normalized),
                false,
            ),
            (
                "density_normalized".into(),
                num(r.density_normalized),
                false,
            ),
            ("ppa_normalized".into(), num(r.ppa_normalized), false),
            ("max_layer_ratio".into(), num(r.max_layer_ratio), false),
            ("overflow_edges".into(), r.overflow_edges.to_string(), false),
        ];
        for ((name, x), b) in DELTA_COLUMNS.iter().zip(delta_values(r)).zip(base) {
            v.push((format!("{name}_delta"), percent_delta(x, b), true));
        }
        v
    };
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            if let Some(r) = rows.first() {
                let head: Vec<String> = cells(r).into_iter().map(|c| c.0).collect();
                let _ = writeln!(out, "{}", head.join(","));
            }
            for r in rows {
                let vals: Vec<String> = cells(r).into_iter().map(|c| c.1).collect();
                let _ = writeln!(out, "{}", vals.join(","));
            }
        }
        ReportFormat::Json => {
            out.push_str("[\n");
            for (i, r) in rows.iter().enumerate() {
                let fields: Vec<String> = cells(r)
                    .into_iter()
                    .map(|(k, v, quoted)| {
                        let v = if quoted {
                            serde_json::to_string(&v).unwrap_or_default()
                        } else {
                            v
                        };
                        format!("\"{k}\": {v}")
                    })
                    .collect();
                let sep = if i + 1 < rows.len() { "," } else { "" };
                let _ = writeln!(out, "  {{{}}}{sep}", fields.join(", "));
            }
            out.push_str("]\n");
        }
    }
    out
}

/// Reads rows back from the JSON form of [`emit_report`]; delta columns
/// are recomputed on output and ignored here.
pub fn parse_report_json(text: &str) -> Result<Vec<BenchmarkReport>, MetricsError> {
    serde_json::from_str(text).map_err(|e| MetricsError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{builtin_fabric, default_energy_table, CellEnergyEntry, FabricKind};
    use crate::netlist::{CellInstance, MasterDecl, Net, Terminal};

    fn row(label: &str, f: f64, p: f64, s: f64) -> BenchmarkReport {
        BenchmarkReport::new(label, 1, f, 1.0, (p, 0.0, 0.0), s, 0.0, 0)
    }

    #[test]
    fn wire_power_example() {
        let mut fabric = builtin_fabric(FabricKind::Planar2D);
        fabric.site_nm = 1000.0;
        let shape = GridShape::new(
            101,
            1,
            fabric
                .layers
                .iter()
                .map(|l| l.preferred_direction)
                .collect(),
            1,
        );
        let routes = vec![NetRoute {
            net: 0,
            id: "n".into(),
            edges: (0..100).collect(),
        }];
        assert!((total_wirelength(&routes, &shape, &fabric) - 0.1).abs() < 1e-12);
        let p = wire_power(&routes, &shape, &fabric, &PowerParams::default());
        // 2.56 µW
        assert!((p - 2.56e-3).abs() < 1e-15);
        assert_eq!(total_wirelength(&[], &shape, &fabric), 0.0);
    }

    #[test]
    fn cell_power_example() {
        let mut nl = Netlist::new("t");
        nl.masters
            .insert("INV".into(), MasterDecl::new("INV", ["A", "Y"]));
        nl.cells.push(CellInstance {
            id: "u".into(),
            master: "INV".into(),
            is_sequential: false,
        });
        let mut e = EnergyTable::new();
        e.insert(
            "INV".into(),
            CellEnergyEntry {
                internal_energy: 1.0,
                input_pin_cap: 1.0,
                drive_res: 1.0,
            },
        );
        let (pin, internal) = cell_powers(&nl, &e, &PowerParams::default()).unwrap();
        assert_eq!(pin, 0.0);
        assert!((internal - 2e-4).abs() < 1e-18);
        nl.cells.push(CellInstance {
            id: "v".into(),
            master: "INV".into(),
            is_sequential: false,
        });
        nl.nets.push(Net {
            id: "n".into(),
            terminals: vec![Terminal::new("u", "Y"), Terminal::new("v", "A")],
            driver: Some(0),
        });
        let (pin, _) = cell_powers(&nl, &e, &PowerParams::default()).unwrap();
        assert!((pin - 0.2 * 0.64 * 1e-3).abs() < 1e-18);
        nl.masters
            .insert("NAND".into(), MasterDecl::new("NAND", ["A", "B", "Y"]));
        nl.cells.push(CellInstance {
            id: "w".into(),
            master: "NAND".into(),
            is_sequential: false,
        });
        assert_eq!(
            cell_powers(&nl, &e, &PowerParams::default()),
            Err(MetricsError::MissingEnergy("NAND".into()))
        );
        assert!(cell_powers(
            &nl,
            &default_energy_table(FabricKind::SkybridgeS3DC, &nl),
            &PowerParams::default()
        )
        .is_ok());
    }

    #[test]
    fn ppa_examples() {
        let rows = [
            row("2d", 1.0, 2.0, 10.0),
            row("x", 1.0, 1.0, 5.0),
            row("same", 1.0, 2.0, 10.0),
        ];
        assert_eq!(ppa(&rows, "2d").unwrap(), vec![1.0, 4.0, 1.0]);
        assert_eq!(
            ppa(&rows, "nope"),
            Err(MetricsError::NoBaseline("nope".into()))
        );
        assert!(ppa(&[row("z", 1.0, 0.0, 1.0)], "z").is_err());
    }

    #[test]
    fn deltas() {
        assert_eq!(percent_delta(30.69, 99.00), "-69%");
        assert_eq!(percent_delta(1.0, 1.0), "0%");
        assert_eq!(percent_delta(1.2, 1.0), "+20%");
        assert_eq!(percent_delta(1.0, 0.0), "n/a");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut rows = vec![row("2d", 1.0, 2.0, 10.0), row("s3dc", 0.9, 0.7, 1.1)];
        normalize(&mut rows, "2d").unwrap();
        let csv = emit_report(&rows, ReportFormat::Csv);
        let json = emit_report(&rows, ReportFormat::Json);
        let parsed: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
        let mut lines = csv.lines();
        let head: Vec<&str> = lines.next().unwrap().split(',').collect();
        for (line, obj) in lines.zip(&parsed) {
            for (k, v) in head.iter().zip(line.split(',')) {
                let j = &obj[*k];
                match j {
                    serde_json::Value::String(s) => assert_eq!(s, v),
                    other => assert_eq!(other.as_f64().unwrap(), v.parse::<f64>().unwrap(), "{k}"),
                }
            }
        }
        assert_eq!(parse_report_json(&json).unwrap().len(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with("0%,0%,0%,0%,0%,0%"));
    }
}
