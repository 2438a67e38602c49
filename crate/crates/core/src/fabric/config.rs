use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{builtin_fabric, default_layer, rails, Direction, FabricKind, FabricSpec};
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct FabricError {
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub kind: FabricErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FabricErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown fabric kind `{0}`")]
    UnknownKind(String),
    #[error("missing `kind` line")]
    MissingKind,
    #[error("layer indices are not contiguous: M{0} is missing")]
    NonContiguous(u32),
    #[error("negative capacity {value} on M{layer}")]
    NegativeCapacity { layer: u32, value: i64 },
    #[error("negative value {value} for {what}")]
    Negative { what: String, value: f64 },
    #[error("invalid fabric: {0}")]
    Invalid(String),
}

const MAX_LAYERS: u32 = 64;

fn err(line: usize, kind: FabricErrorKind) -> FabricError {
    FabricError { line, kind }
}

fn syntax(line: usize, msg: impl Into<String>) -> FabricError {
    err(line, FabricErrorKind::Syntax(msg.into()))
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, FabricError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

/// Parses a fabric config. Fields not mentioned keep the built-in default
/// of the declared kind.
///
/// ```text
/// kind s3dc
/// layers 13
/// layer 5 dir h pitch 64 cap 12 c 0.2 r 2.0
/// pin_layers 2 3 4 5 6
/// vdd 0.8
/// via_cap 4
/// site 80
/// cell 3 3
/// via_len 0.0
/// ```
///
/// `layers <n>` truncates or extends the default stack; `layer` lines
/// override keys on an existing layer or define a new one. `pin_layers`
/// takes either an explicit list or a count of layers starting at the
/// first default pin layer. `cellpower` lines are ignored here.
pub fn load_fabric(text: &str) -> Result<FabricSpec, FabricError> {
    let mut kind = None;
    for (ln, toks) in lines(text) {
        if toks[0] == "kind" {
            if toks.len() != 2 {
                return Err(syntax(ln, "expected `kind <name>`"));
            }
            if kind.is_some() {
                return Err(syntax(ln, "`kind` given twice"));
            }
            let k: FabricKind = toks[1]
                .parse()
                .map_err(|_| err(ln, FabricErrorKind::UnknownKind(toks[1].to_string())))?;
            kind = Some(k);
        }
    }
    let kind = kind.ok_or(err(0, FabricErrorKind::MissingKind))?;
    let mut spec = builtin_fabric(kind);
    let mut defined: BTreeMap<u32, usize> = spec.layers.iter().map(|l| (l.index, 0)).collect();

    for (ln, toks) in lines(text) {
        match toks[0] {
            "kind" | "cellpower" => {}
            "layers" => {
                if toks.len() != 2 {
                    return Err(syntax(ln, "expected `layers <count>`"));
                }
                let n: u32 = num(ln, toks[1], "layer count")?;
                if n > MAX_LAYERS {
                    return Err(syntax(
                        ln,
                        format!("at most {MAX_LAYERS} layers are supported"),
                    ));
                }
                spec.layers = (1..=n)
                    .map(|i| spec.layer(i).cloned().unwrap_or_else(|| default_layer(i)))
                    .collect();
                defined = (1..=n).map(|i| (i, ln)).collect();
            }
            "layer" => {
                if toks.len() < 2 || toks.len() % 2 != 0 {
                    return Err(syntax(ln, "expected `layer <idx> [key value]...`"));
                }
                let idx: u32 = num(ln, toks[1], "layer index")?;
                if idx == 0 || idx > MAX_LAYERS {
                    return Err(syntax(
                        ln,
                        format!("layer index must be in 1..={MAX_LAYERS}"),
                    ));
                }
                let mut layer = spec
                    .layer(idx)
                    .cloned()
                    .unwrap_or_else(|| default_layer(idx));
                for kv in toks[2..].chunks(2) {
                    let (key, val) = (kv[0], kv[1]);
                    match key {
                        "dir" => {
                            layer.preferred_direction = match val {
                                "h" | "H" => Direction::Horizontal,
                                "v" | "V" => Direction::Vertical,
                                _ => {
                                    return Err(syntax(
                                        ln,
                                        format!("direction must be h or v, got `{val}`"),
                                    ))
                                }
                            }
                        }
                        "pitch" => layer.track_pitch_nm = num(ln, val, "pitch")?,
                        "cap" => {
                            let c: i64 = num(ln, val, "capacity")?;
                            if c < 0 {
                                return Err(err(
                                    ln,
                                    FabricErrorKind::NegativeCapacity {
                                        layer: idx,
                                        value: c,
                                    },
                                ));
                            }
                            layer.capacity =
                                u32::try_from(c).map_err(|_| syntax(ln, "capacity too large"))?;
                        }
                        "c" => {
                            layer.cap_per_um = non_negative(ln, num(ln, val, "capacitance")?, "c")?
                        }
                        "r" => {
                            layer.res_per_um = non_negative(ln, num(ln, val, "resistance")?, "r")?
                        }
                        _ => return Err(syntax(ln, format!("unknown layer key `{key}`"))),
                    }
                }
                if !(layer.track_pitch_nm > 0.0) {
                    return Err(syntax(ln, "pitch must be positive"));
                }
                defined.insert(idx, ln);
                let pos = idx as usize - 1;
                if pos < spec.layers.len() {
                    spec.layers[pos] = layer;
                } else {
                    spec.layers.push(layer);
                    spec.layers.sort_by_key(|l| l.index);
                }
            }
            "pin_layers" => {
                if toks.len() < 2 {
                    return Err(syntax(ln, "expected `pin_layers <count>` or a layer list"));
                }
                let vals: Vec<u32> = toks[1..]
                    .iter()
                    .map(|t| num(ln, t, "layer"))
                    .collect::<Result<_, _>>()?;
                spec.pin_access_layers = if vals.len() == 1 {
                    let start = spec.pin_access_layers[0];
                    (start..start.saturating_add(vals[0].min(MAX_LAYERS))).collect()
                } else {
                    vals
                };
                if spec.pin_access_layers.is_empty() {
                    return Err(syntax(ln, "at least one pin access layer is required"));
                }
            }
            "vdd" => spec.supply_voltage = scalar(ln, &toks, "supply voltage")?,
            "via_cap" => spec.via_capacity = scalar(ln, &toks, "via capacity")?,
            "site" => spec.site_nm = scalar(ln, &toks, "site size")?,
            "via_len" => {
                spec.via_length_um = non_negative(ln, scalar(ln, &toks, "via length")?, "via_len")?
            }
            "cell" => {
                if toks.len() != 3 {
                    return Err(syntax(ln, "expected `cell <width> <height>`"));
                }
                spec.cell_width = num(ln, toks[1], "cell width")?;
                spec.cell_height = num(ln, toks[2], "cell height")?;
            }
            other => return Err(syntax(ln, format!("unknown keyword `{other}`"))),
        }
    }

    for (expect, (&idx, &line)) in (1..).zip(&defined) {
        if idx != expect {
            return Err(err(line, FabricErrorKind::NonContiguous(expect)));
        }
    }
    let nl = spec.layers.len() as u32;
    spec.cell_obstacles = rails(kind, spec.cell_width as f64, spec.cell_height as f64);
    spec.cell_obstacles.retain(|o| o.layer <= nl);
    let base = builtin_fabric(FabricKind::Planar2D);
    spec.footprint_scale_vs_2d = spec.cell_area_nm2() / base.cell_area_nm2();
    spec.check()
        .map_err(|m| err(0, FabricErrorKind::Invalid(m)))?;
    Ok(spec)
}

fn scalar<T: std::str::FromStr>(ln: usize, toks: &[&str], what: &str) -> Result<T, FabricError> {
    if toks.len() != 2 {
        return Err(syntax(ln, format!("expected `{} <value>`", toks[0])));
    }
    num(ln, toks[1], what)
}

fn non_negative(ln: usize, v: f64, what: &str) -> Result<f64, FabricError> {
    if v < 0.0 || !v.is_finite() {
        return Err(err(
            ln,
            FabricErrorKind::Negative {
                what: what.into(),
                value: v,
            },
        ));
    }
    Ok(v)
}

/// Writes `spec` in the config format. Obstacles are not written; they
/// always follow the kind's rails for the given cell size.
pub fn write_fabric(spec: &FabricSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "kind {}", spec.kind);
    let _ = writeln!(out, "layers {}", spec.layers.len());
    for l in &spec.layers {
        let _ = writeln!(
            out,
            "layer {} dir {} pitch {} cap {} c {} r {}",
            l.index,
            l.preferred_direction.letter(),
            l.track_pitch_nm,
            l.capacity,
            l.cap_per_um,
            l.res_per_um
        );
    }
    let _ = write!(out, "pin_layers");
    for p in &spec.pin_access_layers {
        let _ = write!(out, " {p}");
    }
    out.push('\n');
    let _ = writeln!(out, "vdd {}", spec.supply_voltage);
    let _ = writeln!(out, "via_cap {}", spec.via_capacity);
    let _ = writeln!(out, "site {}", spec.site_nm);
    let _ = writeln!(out, "cell {} {}", spec.cell_width, spec.cell_height);
    let _ = writeln!(out, "via_len {}", spec.via_length_um);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEnergyEntry {
    /// fJ per output toggle
    pub internal_energy: f64,
    /// fF per input pin
    pub input_pin_cap: f64,
    /// Ω
    pub drive_res: f64,
}

pub type EnergyTable = BTreeMap<String, CellEnergyEntry>;

/// Reads `cellpower <master> <fJ/toggle> <fF> <ohm>` lines; every other
/// line is ignored so one file can carry both fabric and energy data.
pub fn parse_energy_table(text: &str) -> Result<EnergyTable, FabricError> {
    let mut table = EnergyTable::new();
    for (ln, toks) in lines(text) {
        if toks[0] != "cellpower" {
            continue;
        }
        if toks.len() != 5 {
            return Err(syntax(ln, "expected `cellpower <master> <fJ> <fF> <ohm>`"));
        }
        let e = CellEnergyEntry {
            internal_energy: non_negative(ln, num(ln, toks[2], "energy")?, "internal energy")?,
            input_pin_cap: non_negative(ln, num(ln, toks[3], "capacitance")?, "input pin cap")?,
            drive_res: non_negative(ln, num(ln, toks[4], "resistance")?, "drive resistance")?,
        };
        if table.insert(toks[1].to_string(), e).is_some() {
            return Err(syntax(
                ln,
                format!("duplicate cellpower entry for `{}`", toks[1]),
            ));
        }
    }
    Ok(table)
}

/// Placeholder characterization for every master in `netlist`. Energy
/// scales with pin count from a NAND3 reference; the per-fabric factors
/// follow the relative pin and internal power of published 2D, T-MI and
/// S3DC benchmarks. They are assumptions, not characterized data.
pub fn default_energy_table(kind: FabricKind, netlist: &Netlist) -> EnergyTable {
    let (energy, cap, res) = match kind {
        FabricKind::Planar2D => (2.0, 1.0, 5000.0),
        FabricKind::TransistorMonolithic3D => (1.66, 0.85, 4500.0),
        FabricKind::SkybridgeS3DC => (0.72, 0.17, 5500.0),
    };
    netlist
        .masters
        .values()
        .map(|m| {
            let scale = m.pins.len().max(1) as f64 / 4.0;
            (
                m.name.clone(),
                CellEnergyEntry {
                    internal_energy: energy * scale,
                    input_pin_cap: cap,
                    drive_res: res,
                },
            )
        })
        .collect()
}
