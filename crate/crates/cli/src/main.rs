use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skyroute::flow::{self, FlowError, RunConfig};
use skyroute::metrics::{emit_report, ReportFormat};
use skyroute::netlist::{generate_synthetic, write_netlist, SynthesisParams};
use skyroute::rent::RentParams;

const EXIT_INPUT: u8 = 2;
const EXIT_CONGESTED: u8 = 3;

/// `println!` that tolerates a closed stdout (`skyroute ... | head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "skyroute",
    version,
    about = "Placement, global routing and routability comparison across planar, T-MI and S3DC fabrics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic netlist with a target Rent exponent.
    Gen(GenArgs),
    /// Place a netlist; writes netlist.net, placement.csv, placement.meta.
    Place(FlowArgs),
    /// Globally route a placement directory.
    Route(RouteArgs),
    /// Full flow: place, route and report.
    Run(FlowArgs),
    /// Analytic routing-demand comparison over placement directories.
    Analyze(AnalyzeArgs),
    /// Merge run reports into one normalized comparison.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 4096)]
    cells: usize,
    #[arg(long, default_value_t = 0.75)]
    rent: f64,
    /// average pins per cell
    #[arg(long, default_value_t = 3.0)]
    pins: f64,
    #[arg(long, default_value_t = 0.1)]
    sequential: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

/// Flow settings; each overrides the same key of `--config`.
#[derive(Args)]
struct Settings {
    /// TOML file with the same keys as these flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// 2d, tmi, s3dc or a fabric config file
    #[arg(long)]
    fabric: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    utilization: Option<f64>,
    /// gcell side in sites
    #[arg(long)]
    gcell: Option<u32>,
    /// clock frequency in GHz
    #[arg(long)]
    freq: Option<f64>,
    #[arg(long)]
    activity: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    moves_per_cell: Option<usize>,
    /// reroute independent nets on all cores
    #[arg(long)]
    parallel: bool,
    /// per-master energy table
    #[arg(long)]
    energy: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct FlowArgs {
    /// netlist file
    #[arg(long, conflicts_with = "cells")]
    netlist: Option<PathBuf>,
    /// synthesize this many cells instead
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    rent: Option<f64>,
    #[arg(long)]
    pins: Option<f64>,
    #[command(flatten)]
    settings: Settings,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RouteArgs {
    /// directory written by `place` or `run`
    #[arg(long)]
    placement: PathBuf,
    #[command(flatten)]
    settings: Settings,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// placement directories; labels are the directory names
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value_t = 0.75)]
    rent: f64,
    #[arg(long, default_value_t = 3.0)]
    rent_coefficient: f64,
    /// CSV file; stdout if absent
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// report.json files or run directories
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    baseline: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
}

fn config(s: &Settings) -> Result<RunConfig, FlowError> {
    let mut c = match &s.config {
        Some(p) => RunConfig::from_toml(&flow::read_text(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &s.fabric {
        c.fabric = v.clone();
    }
    if let Some(v) = s.seed {
        c.seed = v;
    }
    if let Some(v) = s.utilization {
        c.utilization = v;
    }
    if let Some(v) = s.gcell {
        c.gcell = v;
    }
    if let Some(v) = s.freq {
        c.freq = v;
    }
    if let Some(v) = s.activity {
        c.activity = v;
    }
    if let Some(v) = s.max_iters {
        c.max_iters = v;
    }
    if let Some(v) = s.moves_per_cell {
        c.moves_per_cell = v;
    }
    if s.parallel {
        c.parallel = true;
    }
    if let Some(v) = &s.energy {
        c.energy = Some(v.clone());
    }
    if let Some(v) = &s.label {
        c.label = Some(v.clone());
    }
    Ok(c)
}

fn flow_config(a: &FlowArgs) -> Result<RunConfig, FlowError> {
    let mut c = config(&a.settings)?;
    if let Some(p) = &a.netlist {
        c.netlist = Some(p.clone());
        c.cells = None;
    }
    if let Some(n) = a.cells {
        c.cells = Some(n);
        c.netlist = None;
    }
    if let Some(r) = a.rent {
        c.rent = r;
    }
    if let Some(p) = a.pins {
        c.pins = p;
    }
    Ok(c)
}

fn print_layers(layers: &[skyroute::globalroute::LayerRatio]) {
    for r in layers {
        let kind = match r.kind {
            skyroute::globalroute::ResourceKind::Planar => "M",
            skyroute::globalroute::ResourceKind::Via => "V",
        };
        if r.capacity > 0 || r.demand > 0 {
            say!(
                "  {kind}{:<3} ratio {:.3}  max edge {:.3}  overflow edges {}",
                r.layer,
                r.ratio,
                r.max_edge_ratio,
                r.overflow_edges
            );
        }
    }
}

fn congestion_exit(overflow: (usize, u64)) -> u8 {
    if overflow.1 > 0 {
        eprintln!(
            "congested: {} edges over capacity, {} excess",
            overflow.0, overflow.1
        );
        EXIT_CONGESTED
    } else {
        0
    }
}

fn dispatch(cli: Cli) -> Result<u8, FlowError> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let p = SynthesisParams {
                num_cells: a.cells,
                rent_exponent: a.rent,
                avg_pins_per_cell: a.pins,
                sequential_fraction: a.sequential,
                seed: a.seed,
            };
            let nl = generate_synthetic(&p)?;
            flow::write_atomic(&a.output, &write_netlist(&nl))?;
            say!(
                "{}: {} cells, {} nets, {} pins",
                a.output.display(),
                nl.cells.len(),
                nl.nets.len(),
                nl.total_terminals()
            );
            Ok(0)
        }
        Cmd::Place(a) => {
            let cfg = flow_config(&a)?;
            let meta = flow::run_place(&cfg, &a.output)?;
            say!(
                "{}: die {}x{} sites on {}",
                a.output.display(),
                meta.die.width,
                meta.die.height,
                meta.fabric
            );
            Ok(0)
        }
        Cmd::Route(a) => {
            let cfg = config(&a.settings)?;
            let (outcome, ov) =
                flow::run_route(&a.placement, a.settings.fabric.as_deref(), &cfg, &a.output)?;
            for n in &outcome.skipped {
                eprintln!("warning: net {n} has fewer than two terminals; not routed");
            }
            print_layers(&skyroute::globalroute::demand_resource_ratios(&outcome.map));
            Ok(congestion_exit(ov))
        }
        Cmd::Run(a) => {
            let cfg = flow_config(&a)?;
            let s = flow::run(&cfg, &a.output)?;
            for n in &s.skipped_nets {
                eprintln!("warning: net {n} has fewer than two terminals; not routed");
            }
            say!(
                "{}: {} wirelength {:.3} mm, total power {:.4} mW, max layer ratio {:.3}",
                s.output.display(),
                s.report.label,
                s.report.total_wirelength,
                s.report.total_power,
                s.report.max_layer_ratio
            );
            print_layers(&s.layers);
            Ok(congestion_exit(s.overflow))
        }
        Cmd::Analyze(a) => {
            let params = RentParams {
                r: a.rent,
                a: a.rent_coefficient,
            };
            let csv = flow::analyze(&a.dirs, a.baseline.as_deref(), &params)?;
            match &a.output {
                Some(p) => flow::write_atomic(p, &csv)?,
                None => say!("{}", csv.trim_end()),
            }
            Ok(0)
        }
        Cmd::Compare(a) => {
            let rows = flow::compare(&a.inputs, a.baseline.as_deref())?;
            flow::write_report_dir(&rows, &a.output)?;
            say!("{}", emit_report(&rows, ReportFormat::Csv).trim_end());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
