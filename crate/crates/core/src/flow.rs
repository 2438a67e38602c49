//! The end-to-end flow (netlist, placement, routing, report) and its
//! on-disk artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{
    builtin_fabric, default_energy_table, load_fabric, parse_energy_table, EnergyTable, FabricKind,
    FabricSpec,
};
use crate::globalroute::{
    apply_obstacles, build_grid, demand_resource_ratios, route, routes_text, LayerRatio,
    ResourceKind, RouteOutcome, RouteParams,
};
use crate::metrics::{
    cell_powers, emit_report, normalize, parse_report_json, total_wirelength, wire_power,
    BenchmarkReport, PowerParams, ReportFormat,
};
use crate::netlist::{generate_synthetic, parse_netlist, write_netlist, Netlist, SynthesisParams};
use crate::placement::{
    check_legal, parse_placement_meta, place_with, read_placement, size_die, write_placement_csv,
    write_placement_meta, PlaceParams, Placement, PlacementMeta,
};
use crate::rent::{compare_demand, demand_csv, PinDensityInput, RentParams};

/// Written into every output directory so a rerun may replace it.
pub const OUTPUT_MARKER: &str = ".skyroute-output";

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0} exists and is not a skyroute output directory")]
    OutputExists(String),
    #[error(transparent)]
    Synth(#[from] crate::netlist::SynthError),
    #[error(transparent)]
    Place(#[from] crate::placement::PlaceError),
    #[error(transparent)]
    Route(#[from] crate::globalroute::RouteError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Rent(#[from] crate::rent::RentError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> FlowError {
    FlowError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> FlowError {
    FlowError::Input {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String, FlowError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Settings of one flow run. TOML files use the same key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `2d`, `tmi`, `s3dc` or a fabric config path.
    pub fabric: String,
    pub energy: Option<PathBuf>,
    pub netlist: Option<PathBuf>,
    /// Synthesize a netlist of this many cells instead of reading one.
    pub cells: Option<usize>,
    pub rent: f64,
    pub pins: f64,
    pub sequential: f64,
    pub seed: u64,
    pub utilization: f64,
    /// sites
    pub gcell: u32,
    pub max_iters: usize,
    pub moves_per_cell: usize,
    pub parallel: bool,
    /// GHz
    pub freq: f64,
    pub activity: f64,
    pub label: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthesisParams::default();
        Self {
            fabric: "2d".into(),
            energy: None,
            netlist: None,
            cells: None,
            rent: synth.rent_exponent,
            pins: synth.avg_pins_per_cell,
            sequential: synth.sequential_fraction,
            seed: 1,
            utilization: 0.6,
            gcell: 10,
            max_iters: RouteParams::default().max_iters,
            moves_per_cell: PlaceParams::default().moves_per_cell,
            parallel: false,
            freq: 1.0,
            activity: 0.2,
            label: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, FlowError> {
        toml::from_str(text).map_err(|e| FlowError::Config(e.to_string()))
    }

    pub fn check(&self) -> Result<(), FlowError> {
        match (&self.netlist, self.cells) {
            (Some(_), Some(_)) => {
                return Err(FlowError::Config(
                    "give either a netlist or a cell count, not both".into(),
                ))
            }
            (None, None) => {
                return Err(FlowError::Config(
                    "no netlist: give a netlist path or a cell count".into(),
                ))
            }
            _ => {}
        }
        if self.gcell == 0 {
            return Err(FlowError::Config("gcell must be at least 1".into()));
        }
        self.power(0.8).check()?;
        Ok(())
    }

    pub fn synthesis(&self) -> Option<SynthesisParams> {
        self.cells.map(|n| SynthesisParams {
            num_cells: n,
            rent_exponent: self.rent,
            avg_pins_per_cell: self.pins,
            sequential_fraction: self.sequential,
            seed: self.seed,
        })
    }

    pub fn power(&self, supply_voltage: f64) -> PowerParams {
        PowerParams {
            clock_freq: self.freq,
            supply_voltage,
            switching_activity: self.activity,
        }
    }

    pub fn route_params(&self) -> RouteParams {
        RouteParams {
            max_iters: self.max_iters,
            seed: self.seed,
            parallel: self.parallel,
        }
    }

    pub fn place_params(&self) -> PlaceParams {
        PlaceParams {
            seed: self.seed,
            moves_per_cell: self.moves_per_cell,
            ..PlaceParams::default()
        }
    }
}

/// A builtin fabric name or a fabric config file.
pub fn resolve_fabric(choice: &str) -> Result<FabricSpec, FlowError> {
    if let Ok(kind) = choice.parse::<FabricKind>() {
        return Ok(builtin_fabric(kind));
    }
    let path = Path::new(choice);
    if !path.exists() {
        return Err(FlowError::Config(format!(
            "fabric `{choice}` is neither 2d, tmi, s3dc nor an existing file"
        )));
    }
    load_fabric(&read_text(path)?).map_err(|e| input_err(path, e))
}

pub fn load_netlist(path: &Path) -> Result<Netlist, FlowError> {
    parse_netlist(&read_text(path)?).map_err(|e| input_err(path, e))
}

pub fn obtain_netlist(cfg: &RunConfig) -> Result<Netlist, FlowError> {
    match (&cfg.netlist, cfg.synthesis()) {
        (Some(p), _) => load_netlist(p),
        (None, Some(s)) => Ok(generate_synthetic(&s)?),
        (None, None) => Err(FlowError::Config("no netlist source".into())),
    }
}

pub fn energy_table(
    path: Option<&Path>,
    fabric: &FabricSpec,
    netlist: &Netlist,
) -> Result<EnergyTable, FlowError> {
    match path {
        Some(p) => parse_energy_table(&read_text(p)?).map_err(|e| input_err(p, e)),
        None => Ok(default_energy_table(fabric.kind, netlist)),
    }
}

/// Files collected in a hidden sibling directory and moved into place
/// only when complete.
pub struct Staging {
    dir: tempfile::TempDir,
    target: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self, FlowError> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| io_err(&parent, e))?;
        check_replaceable(target)?;
        let dir = tempfile::Builder::new()
            .prefix(".skyroute-stage-")
            .tempdir_in(&parent)
            .map_err(|e| io_err(&parent, e))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), FlowError> {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).map_err(|e| io_err(&p, e))
    }

    pub fn commit(self) -> Result<PathBuf, FlowError> {
        self.write(OUTPUT_MARKER, "")?;
        let target = self.target;
        check_replaceable(&target)?;
        let staged = self.dir.keep();
        if target.exists() {
            let old = staged.with_extension("old");
            fs::rename(&target, &old).map_err(|e| io_err(&target, e))?;
            fs::rename(&staged, &target).map_err(|e| io_err(&target, e))?;
            fs::remove_dir_all(&old).map_err(|e| io_err(&old, e))?;
        } else {
            fs::rename(&staged, &target).map_err(|e| io_err(&target, e))?;
        }
        Ok(target)
    }
}

fn check_replaceable(target: &Path) -> Result<(), FlowError> {
    if !target.exists() {
        return Ok(());
    }
    let empty = target.is_dir()
        && fs::read_dir(target)
            .map_err(|e| io_err(target, e))?
            .next()
            .is_none();
    if empty || target.join(OUTPUT_MARKER).exists() {
        Ok(())
    } else {
        Err(FlowError::OutputExists(target.display().to_string()))
    }
}

/// Writes a file through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), FlowError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut f = tempfile::NamedTempFile::new_in(&parent).map_err(|e| io_err(&parent, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| io_err(path, e))?;
    f.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub struct Placed {
    pub placement: Placement,
    pub meta: PlacementMeta,
}

pub fn place_design(
    netlist: &Netlist,
    fabric: &FabricSpec,
    cfg: &RunConfig,
) -> Result<Placed, FlowError> {
    let die = size_die(netlist, fabric, cfg.utilization)?;
    let (placement, _) = place_with(netlist, fabric, &die, &cfg.place_params())?;
    let meta = PlacementMeta {
        die,
        fabric: fabric.kind,
        design: netlist.name.clone(),
        pin_access_layers: fabric.pin_access_layer_count() as u32,
    };
    Ok(Placed { placement, meta })
}

pub fn route_design(
    netlist: &Netlist,
    fabric: &FabricSpec,
    placement: &Placement,
    cfg: &RunConfig,
) -> Result<RouteOutcome, FlowError> {
    let lib = fabric.library(netlist);
    let mut graph = build_grid(fabric, &placement.die, cfg.gcell);
    apply_obstacles(&mut graph, fabric, placement);
    Ok(route(netlist, &lib, placement, graph, &cfg.route_params())?)
}

pub fn layer_summary_csv(rows: &[LayerRatio]) -> String {
    let mut out =
        String::from("layer,kind,demand,capacity,ratio,max_edge_ratio,overflow_edges,overflow\n");
    for r in rows {
        let kind = match r.kind {
            ResourceKind::Planar => "planar",
            ResourceKind::Via => "via",
        };
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{},{}\n",
            r.layer,
            kind,
            r.demand,
            r.capacity,
            r.ratio,
            r.max_edge_ratio,
            r.overflow_edges,
            r.overflow
        ));
    }
    out
}

fn stage_placement(st: &Staging, netlist: &Netlist, placed: &Placed) -> Result<(), FlowError> {
    st.write("netlist.net", &write_netlist(netlist))?;
    st.write(
        "placement.csv",
        &write_placement_csv(netlist, &placed.placement),
    )?;
    st.write("placement.meta", &write_placement_meta(&placed.meta))
}

fn stage_routing(st: &Staging, outcome: &RouteOutcome) -> Result<(), FlowError> {
    let map = &outcome.map;
    for l in 0..map.shape.nl() {
        st.write(&format!("congestion_L{}.csv", l + 1), &map.layer_csv(l))?;
    }
    st.write(
        "congestion.csv",
        &layer_summary_csv(&demand_resource_ratios(map)),
    )?;
    st.write("routes.txt", &routes_text(&map.shape, &outcome.routes))
}

/// What a finished run reports back.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: BenchmarkReport,
    pub layers: Vec<LayerRatio>,
    pub overflow: (usize, u64),
    pub skipped_nets: Vec<String>,
    pub output: PathBuf,
}

impl RunSummary {
    pub fn congested(&self) -> bool {
        self.overflow.1 > 0
    }
}

/// Netlist, placement, routing and report for one fabric. All artifacts
/// land in `out` together, congested or not.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary, FlowError> {
    cfg.check()?;
    let fabric = resolve_fabric(&cfg.fabric)?;
    let netlist = obtain_netlist(cfg)?;
    let energy = energy_table(cfg.energy.as_deref(), &fabric, &netlist)?;
    let power = cfg.power(fabric.supply_voltage);
    power.check()?;
    let staging = Staging::new(out)?;

    let placed = place_design(&netlist, &fabric, cfg)?;
    let outcome = route_design(&netlist, &fabric, &placed.placement, cfg)?;

    let shape = &outcome.map.shape;
    let wl = total_wirelength(&outcome.routes, shape, &fabric);
    let wp = wire_power(&outcome.routes, shape, &fabric, &power);
    let (pp, ip) = cell_powers(&netlist, &energy, &power)?;
    let overflow = outcome.map.overflow();
    let label = cfg
        .label
        .clone()
        .unwrap_or_else(|| fabric.kind.short_name().to_string());
    let mut rows = vec![BenchmarkReport::new(
        &label,
        netlist.cells.len(),
        power.clock_freq,
        wl,
        (wp, pp, ip),
        placed.placement.die.area_um2(),
        outcome.map.max_layer_ratio(),
        overflow.0,
    )];
    normalize(&mut rows, &label)?;

    stage_placement(&staging, &netlist, &placed)?;
    stage_routing(&staging, &outcome)?;
    staging.write("report.csv", &emit_report(&rows, ReportFormat::Csv))?;
    staging.write("report.json", &emit_report(&rows, ReportFormat::Json))?;
    let output = staging.commit()?;
    Ok(RunSummary {
        report: rows.remove(0),
        layers: demand_resource_ratios(&outcome.map),
        overflow,
        skipped_nets: outcome.skipped,
        output,
    })
}

/// Places a netlist and writes `netlist.net`, `placement.csv` and
/// `placement.meta` to `out`.
pub fn run_place(cfg: &RunConfig, out: &Path) -> Result<PlacementMeta, FlowError> {
    cfg.check()?;
    let fabric = resolve_fabric(&cfg.fabric)?;
    let netlist = obtain_netlist(cfg)?;
    let staging = Staging::new(out)?;
    let placed = place_design(&netlist, &fabric, cfg)?;
    stage_placement(&staging, &netlist, &placed)?;
    staging.commit()?;
    Ok(placed.meta)
}

/// A placement directory written by [`run_place`] or [`run`].
pub struct PlacementDir {
    pub netlist: Netlist,
    pub meta: PlacementMeta,
    pub placement: Placement,
}

pub fn read_placement_dir(dir: &Path) -> Result<PlacementDir, FlowError> {
    let netlist = load_netlist(&dir.join("netlist.net"))?;
    let meta_path = dir.join("placement.meta");
    let meta = parse_placement_meta(&read_text(&meta_path)?, &meta_path.display().to_string())?;
    let csv_path = dir.join("placement.csv");
    let placement = read_placement(
        &read_text(&csv_path)?,
        &csv_path.display().to_string(),
        meta.die,
        &netlist,
    )?;
    Ok(PlacementDir {
        netlist,
        meta,
        placement,
    })
}

/// Routes a placement directory; `fabric` defaults to the one it was
/// placed for.
pub fn run_route(
    placement_dir: &Path,
    fabric: Option<&str>,
    cfg: &RunConfig,
    out: &Path,
) -> Result<(RouteOutcome, (usize, u64)), FlowError> {
    let pd = read_placement_dir(placement_dir)?;
    let fabric = match fabric {
        Some(f) => resolve_fabric(f)?,
        None => builtin_fabric(pd.meta.fabric),
    };
    check_legal(&pd.netlist, &fabric, &pd.placement)?;
    let staging = Staging::new(out)?;
    let outcome = route_design(&pd.netlist, &fabric, &pd.placement, cfg)?;
    stage_routing(&staging, &outcome)?;
    staging.commit()?;
    let ov = outcome.map.overflow();
    Ok((outcome, ov))
}

/// Analytic demand CSV over placement directories, labelled by directory
/// name; `baseline` defaults to the first.
pub fn analyze(
    dirs: &[PathBuf],
    baseline: Option<&str>,
    params: &RentParams,
) -> Result<String, FlowError> {
    let mut designs = Vec::new();
    for d in dirs {
        let netlist = load_netlist(&d.join("netlist.net"))?;
        let meta_path = d.join("placement.meta");
        let meta = parse_placement_meta(&read_text(&meta_path)?, &meta_path.display().to_string())?;
        let label = d.file_name().map_or_else(
            || d.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        designs.push((
            label,
            PinDensityInput {
                total_pins: netlist.total_terminals() as u64,
                die_area: meta.die.area_um2(),
                pin_access_layers: meta.pin_access_layers,
            },
        ));
    }
    let Some(first) = designs.first() else {
        return Err(FlowError::Config(
            "analyze needs at least one placement".into(),
        ));
    };
    let base = baseline.map_or_else(|| first.0.clone(), str::to_string);
    Ok(demand_csv(&compare_demand(&designs, params, &base)?))
}

/// Merges `report.json` rows (files or run directories), normalizes them
/// to `baseline` (default: the `2d` row if any, else the first) and puts
/// the baseline first.
pub fn compare(
    inputs: &[PathBuf],
    baseline: Option<&str>,
) -> Result<Vec<BenchmarkReport>, FlowError> {
    let mut rows = Vec::new();
    for p in inputs {
        let path = if p.is_dir() {
            p.join("report.json")
        } else {
            p.clone()
        };
        rows.extend(parse_report_json(&read_text(&path)?).map_err(|e| input_err(&path, e))?);
    }
    if rows.is_empty() {
        return Err(FlowError::Config(
            "compare needs at least one report".into(),
        ));
    }
    let base = match baseline {
        Some(b) => b.to_string(),
        None => rows
            .iter()
            .find(|r| r.label == FabricKind::Planar2D.short_name())
            .unwrap_or(&rows[0])
            .label
            .clone(),
    };
    if let Some(i) = rows.iter().position(|r| r.label == base) {
        let b = rows.remove(i);
        rows.insert(0, b);
    }
    normalize(&mut rows, &base)?;
    Ok(rows)
}

pub fn write_report_dir(rows: &[BenchmarkReport], out: &Path) -> Result<PathBuf, FlowError> {
    let st = Staging::new(out)?;
    st.write("report.csv", &emit_report(rows, ReportFormat::Csv))?;
    st.write("report.json", &emit_report(rows, ReportFormat::Json))?;
    st.commit()
}
