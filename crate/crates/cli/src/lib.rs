//! Command-line frontend for `lcs2d`: reads a system document and writes
//! JSON reports, CSV tables and SVG drawings.

// NaN must fail range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lcs2d::controlset::{periodic_orbit, sweep_family, BoundaryOrbit};
use lcs2d::geometry::{build_region_c_with, Membership, RegionC, RegionOptions};
use lcs2d::oracle::{brute_reach, GridSpec};
use lcs2d::planner::{loop_plan_trace_zero, reach_plan, PlanResult};
use lcs2d::system::{simulate, Direction, SimulateOptions};
use lcs2d::{classify, control_sets, Classification, LinearControlSystem, Vec2};
use serde::Serialize;
use thiserror::Error;

pub use config::{parse_config, SystemConfig};
use output::{bounding_box, csv, num, svg, write_atomic, Layer, Style};

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("planner failed: {0}")]
    Planner(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Planner(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<lcs2d::Error> for CliError {
    fn from(e: lcs2d::Error) -> Self {
        use lcs2d::Error::*;
        match e {
            TargetNotInterior { .. } | EpsilonTooSmall { .. } | NoIntersectionFound { .. } => {
                CliError::Planner(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lcs2d", version, about = "Control sets of planar linear control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Samples per orbit arc.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub grid_dx: Option<f64>,
    #[arg(long, global = true)]
    pub grid_dt: Option<f64>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Endpoint tolerance for `plan`.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Also draw the result into this SVG file.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Write the CSV and report.json here instead of printing the CSV.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Input {
    /// System document (JSON); `-` reads standard input.
    pub config: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classification, fixed points, orbit and region statistics as JSON.
    Analyze(Input),
    /// The periodic orbit as CSV `t,x,y,u`.
    Orbit(Input),
    /// Membership verdict for one point.
    Member {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Vec2,
    },
    /// Steering schedule from the lower equilibrium, as CSV `index,u,dt`.
    Plan {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        target: Option<Vec2>,
    },
    /// Grid reachable set, as CSV `x,y` of occupied cell centres.
    Reach {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Option<Vec2>,
    },
    /// Fixed points over a family of control ranges.
    Sweep(Input),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Orbit(_) => "orbit",
            Command::Member { .. } => "member",
            Command::Plan { .. } => "plan",
            Command::Reach { .. } => "reach",
            Command::Sweep(_) => "sweep",
        }
    }

    fn input(&self) -> &Input {
        match self {
            Command::Analyze(i) | Command::Orbit(i) | Command::Sweep(i) => i,
            Command::Member { input, .. } | Command::Plan { input, .. } | Command::Reach { input, .. } => input,
        }
    }
}

/// Parses `X,Y`.
pub fn parse_point(text: &str) -> Result<Vec2, String> {
    let (x, y) = text.split_once(',').ok_or_else(|| format!("expected X,Y, got {text:?}"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let (x, y) = (parse(x)?, parse(y)?);
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("non-finite coordinate in {text:?}"));
    }
    Ok(Vec2::new(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Tolerance minus measured value; negative on failure.
    pub margin: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        let margin = tolerance - value;
        Check { name, passed: margin >= 0.0, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionStats {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub area: f64,
    pub perimeter: f64,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub point: [f64; 2],
    pub membership: &'static str,
    pub margin: Option<f64>,
    pub distance: f64,
    pub control_set: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub start: [f64; 2],
    pub target: [f64; 2],
    pub endpoint: [f64; 2],
    pub endpoint_error: f64,
    pub epsilon: f64,
    pub segments: usize,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachReport {
    pub start: [f64; 2],
    pub dx: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cells: usize,
    pub layers: usize,
    pub reached_fixpoint: bool,
    pub spill: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: usize,
    pub max_hausdorff_prev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub classification: &'static str,
    pub control_sets: Vec<&'static str>,
    pub p_plus: Option<[f64; 2]>,
    pub p_minus: Option<[f64; 2]>,
    /// Points on the closed orbit polyline, zero without an orbit.
    pub orbit_samples: usize,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<MemberReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach: Option<ReachReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    /// Files written by this run.
    pub files: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// What a run prints: `stdout` verbatim, `note` as a diagnostic line.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub note: Option<String>,
    pub report: RunReport,
}

fn xy(v: &Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| CliError::Io(format!("stdin: {e}")))
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Everything derived from the system that the subcommands share.
struct Analysis {
    sys: LinearControlSystem,
    class: Classification,
    orbit: Option<BoundaryOrbit>,
    region: Option<RegionC>,
    samples: usize,
}

impl Analysis {
    fn new(sys: LinearControlSystem, samples: usize) -> Result<Self, CliError> {
        let class = classify(&sys);
        let (orbit, region) = if class == Classification::ControllableTraceZero {
            (None, None)
        } else {
            let orbit = periodic_orbit(&sys, samples)?;
            let region = build_region_c_with(&sys, RegionOptions { samples_per_arc: samples, ..Default::default() })?;
            (Some(orbit), Some(region))
        };
        Ok(Analysis { sys, class, orbit, region, samples })
    }

    fn report(&self, command: &'static str) -> Result<RunReport, CliError> {
        let sets = control_sets(&self.sys, self.samples)?;
        Ok(RunReport {
            command,
            classification: self.class.label(),
            control_sets: sets.iter().map(|s| s.label()).collect(),
            p_plus: self.orbit.as_ref().map(|o| xy(&o.p_plus)),
            p_minus: self.orbit.as_ref().map(|o| xy(&o.p_minus)),
            orbit_samples: self.orbit.as_ref().map_or(0, |o| o.closed_polyline().len()),
            checks: Vec::new(),
            region: None,
            member: None,
            plan: None,
            reach: None,
            sweep: None,
            files: Vec::new(),
        })
    }

    fn boundary_layer(&self) -> Vec<Layer> {
        self.orbit
            .iter()
            .map(|o| Layer { style: Style::Boundary, points: o.closed_polyline() })
            .collect()
    }

    /// The orbit's bounding box, or that of `fallback` without an orbit.
    fn frame(&self, fallback: &[Vec2]) -> Option<(Vec2, Vec2)> {
        match &self.orbit {
            Some(o) => bounding_box(&o.closed_polyline()),
            None => bounding_box(fallback),
        }
    }

    fn checks(&self) -> Vec<Check> {
        let (Some(orbit), Some(region)) = (&self.orbit, &self.region) else {
            return Vec::new();
        };
        let (sys, _) = self.sys.contracting();
        let scale = 1.0 + region.scale();
        let half = sys.half_period();
        let around = sys.flow(half, &sys.flow(half, &orbit.p_plus, sys.lower()), sys.upper());
        let gap = (around - orbit.p_plus).norm();

        let d = region.direction.normalize();
        let off_line = |p: &Vec2| {
            let w = p - region.v_lower;
            (w.x * d.y - w.y * d.x).abs()
        };
        let line = off_line(&orbit.p_plus).max(off_line(&orbit.p_minus));

        let inner = region.margin(&region.v_lower).min(region.margin(&region.v_upper));
        let on_boundary = orbit
            .closed_polyline()
            .iter()
            .map(|p| region.margin(p).abs())
            .fold(0.0, f64::max);
        vec![
            Check::at_most("orbit_closure", gap, 1e-9 * scale),
            Check::at_most("fixed_points_on_line", line, 1e-9 * scale),
            Check { name: "equilibria_interior", passed: inner > 0.0, margin: inner },
            Check::at_most("orbit_on_boundary", on_boundary, region.default_tolerance()),
        ]
    }
}

fn region_stats(region: &RegionC) -> RegionStats {
    let pts = &region.boundary;
    let mut area = 0.0;
    let mut perimeter = 0.0;
    for w in pts.windows(2) {
        area += w[0].x * w[1].y - w[1].x * w[0].y;
        perimeter += (w[1] - w[0]).norm();
    }
    let (lo, hi) = region.bounding_box();
    RegionStats { lower: xy(&lo), upper: xy(&hi), area: 0.5 * area.abs(), perimeter, resolution: region.resolution() }
}

struct Table {
    name: &'static str,
    text: String,
    note: Option<String>,
}

/// Runs one command. Files named by `--svg` and `--out` are written here;
/// printing is left to the caller.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let text = read_input(&cli.command.input().config)?;
    let config = parse_config(&text)?;
    let sys = config.system()?;
    let samples = cli.samples.or(config.sampling.samples).unwrap_or(DEFAULT_SAMPLES);
    let analysis = Analysis::new(sys, samples)?;
    let mut report = analysis.report(cli.command.name())?;
    let mut layers = analysis.boundary_layer();
    let mut extent: Vec<Vec2> = Vec::new();

    let table = match &cli.command {
        Command::Analyze(_) => {
            report.checks = analysis.checks();
            report.region = analysis.region.as_ref().map(region_stats);
            None
        }
        Command::Member { point, .. } => {
            report.member = Some(member(&analysis, point));
            layers.push(Layer { style: Style::Marker, points: vec![*point] });
            extent.push(*point);
            None
        }
        Command::Orbit(_) => Some(orbit_table(&analysis)?),
        Command::Plan { target, .. } => {
            let target = target
                .or(config.target.map(|t| Vec2::new(t[0], t[1])))
                .ok_or_else(|| CliError::Validation("plan needs --target or a target in the config".into()))?;
            let epsilon = cli.epsilon.or(config.tolerances.epsilon).unwrap_or(DEFAULT_EPSILON);
            config::positive("epsilon", epsilon)?;
            let plan = plan(&analysis.sys, &target, epsilon)?;
            let traj = simulate(&analysis.sys, &plan.start, &plan.schedule, SimulateOptions::default())?;
            layers.push(Layer { style: Style::Trajectory, points: traj.states.clone() });
            layers.push(Layer { style: Style::Marker, points: vec![plan.start, target] });
            extent.extend(traj.states);
            report.plan = Some(PlanReport {
                start: xy(&plan.start),
                target: xy(&target),
                endpoint: xy(&plan.endpoint),
                endpoint_error: plan.endpoint_error,
                epsilon,
                segments: plan.schedule.len(),
                duration: plan.schedule.total_duration(),
            });
            let rows = plan.schedule.segments().iter().enumerate().map(|(k, s)| vec![k.to_string(), num(s.u), num(s.dt)]);
            Some(Table {
                name: "plan",
                text: csv(&["index", "u", "dt"], rows),
                note: Some(format!("endpoint error {}", num(plan.endpoint_error))),
            })
        }
        Command::Reach { start, .. } => {
            let start = start
                .or(config.start.map(|s| Vec2::new(s[0], s[1])))
                .unwrap_or_else(|| analysis.sys.equilibrium(analysis.sys.lower()));
            let spec = grid_spec(cli, &config, &analysis)?;
            let reach = brute_reach(&analysis.sys, &start, &spec, Direction::Forward)?;
            let centres = reach.centers();
            report.reach = Some(ReachReport {
                start: xy(&start),
                dx: spec.dx,
                dt: spec.dt,
                horizon: spec.horizon,
                cells: reach.count(),
                layers: reach.layers,
                reached_fixpoint: reach.reached_fixpoint,
                spill: reach.spill,
            });
            let rows = centres.iter().map(|c| vec![num(c.x), num(c.y)]);
            let text = csv(&["x", "y"], rows);
            layers.insert(0, Layer { style: Style::Cells, points: centres.clone() });
            extent.extend(centres);
            Some(Table { name: "reach", text, note: Some(format!("{} cells", reach.count())) })
        }
        Command::Sweep(_) => {
            let (table, boundaries, summary) = sweep_table(&config, &analysis)?;
            report.sweep = Some(summary);
            layers = boundaries.into_iter().map(|points| Layer { style: Style::Outline, points }).collect();
            extent = layers.iter().flat_map(|l| l.points.iter().copied()).collect();
            Some(table)
        }
    };

    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    if let Some(path) = &cli.svg {
        let frame = match &cli.command {
            Command::Sweep(_) => bounding_box(&extent),
            _ => analysis.frame(&extent),
        }
        .unwrap_or((Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)));
        write_atomic(path, svg(&layers, frame).as_bytes())?;
        report.files.push(path.display().to_string());
    }

    let mut note = None;
    let stdout = match (&cli.out, table) {
        (None, Some(table)) => {
            note = table.note;
            table.text
        }
        (None, None) => report.to_json(),
        (Some(dir), table) => {
            if let Some(table) = table {
                let path = dir.join(format!("{}.csv", table.name));
                write_atomic(&path, table.text.as_bytes())?;
                report.files.push(path.display().to_string());
            }
            let path = dir.join("report.json");
            report.files.push(path.display().to_string());
            let json = report.to_json();
            write_atomic(&path, json.as_bytes())?;
            json
        }
    };
    Ok(Outcome { stdout, note, report })
}

fn member(analysis: &Analysis, point: &Vec2) -> MemberReport {
    let Some(region) = &analysis.region else {
        return MemberReport {
            point: xy(point),
            membership: "interior",
            margin: None,
            distance: 0.0,
            control_set: Some("whole_plane"),
        };
    };
    let verdict = region.contains(point);
    let (membership, control_set) = match (verdict.membership, analysis.class) {
        (Membership::Exterior, _) => ("exterior", None),
        (Membership::Interior, Classification::OpenControlSetWithBoundaryOrbit) => ("interior", Some("open_region")),
        (Membership::Boundary, Classification::OpenControlSetWithBoundaryOrbit) => ("boundary", Some("periodic_orbit")),
        (Membership::Interior, _) => ("interior", Some("closed_region")),
        (Membership::Boundary, _) => ("boundary", Some("closed_region")),
    };
    MemberReport { point: xy(point), membership, margin: Some(verdict.margin), distance: region.distance(point), control_set }
}

/// From the lower equilibrium to `target`.
fn plan(sys: &LinearControlSystem, target: &Vec2, epsilon: f64) -> Result<PlanResult, CliError> {
    let plan = match classify(sys) {
        Classification::ControllableTraceZero => loop_plan_trace_zero(sys, target, sys.lower())?,
        _ => reach_plan(sys, target, epsilon)?,
    };
    if plan.endpoint_error > epsilon {
        return Err(CliError::Planner(format!(
            "endpoint error {} exceeds epsilon {}",
            num(plan.endpoint_error),
            num(epsilon)
        )));
    }
    Ok(plan)
}

fn orbit_table(analysis: &Analysis) -> Result<Table, CliError> {
    let orbit = analysis
        .orbit
        .as_ref()
        .ok_or_else(|| CliError::Validation("tr A = 0: the system has no periodic orbit".into()))?;
    let rows = orbit
        .timed_samples()
        .into_iter()
        .map(|(t, p, u)| vec![num(t), num(p.x), num(p.y), num(u)]);
    Ok(Table { name: "orbit", text: csv(&["t", "x", "y", "u"], rows), note: None })
}

fn grid_spec(cli: &Cli, config: &SystemConfig, analysis: &Analysis) -> Result<GridSpec, CliError> {
    let s = &config.sampling;
    let sys = &analysis.sys;
    let half = sys.half_period();
    let dt = cli.grid_dt.or(s.grid_dt).unwrap_or(half / 32.0);
    let horizon = cli.horizon.or(s.horizon).unwrap_or(8.0 * half);
    for (name, x) in [("grid-dx", cli.grid_dx), ("grid-dt", Some(dt)), ("horizon", Some(horizon))] {
        if let Some(x) = x {
            config::positive(name, x)?;
        }
    }
    let bounds = match (s.grid_lower, s.grid_upper) {
        (Some(lo), Some(hi)) => Some((Vec2::new(lo[0], lo[1]), Vec2::new(hi[0], hi[1]))),
        (None, None) => None,
        _ => return Err(CliError::Validation("grid_lower and grid_upper go together".into())),
    };
    let default_dx = |lo: &Vec2, hi: &Vec2| (hi - lo).amax() / 128.0;
    Ok(match (bounds, &analysis.orbit) {
        (Some((lo, hi)), _) => {
            let dx = cli.grid_dx.or(s.grid_dx).unwrap_or_else(|| default_dx(&lo, &hi));
            GridSpec::new(sys, lo, hi, dx, dt, horizon)?
        }
        (None, Some(orbit)) => {
            let (lo, hi) = bounding_box(&orbit.closed_polyline()).expect("orbit has samples");
            let dx = cli.grid_dx.or(s.grid_dx).unwrap_or_else(|| default_dx(&lo, &hi));
            GridSpec::around_orbit(sys, dx, dt, horizon)?
        }
        (None, None) => {
            return Err(CliError::Validation(
                "tr A = 0: reach needs sampling.grid_lower and sampling.grid_upper".into(),
            ))
        }
    })
}

fn sweep_table(config: &SystemConfig, analysis: &Analysis) -> Result<(Table, Vec<Vec<Vec2>>, SweepReport), CliError> {
    let sys = &analysis.sys;
    let mid = 0.5 * (sys.lower() + sys.upper());
    let (nu, grid): (f64, Vec<(f64, f64)>) = match &config.sweep {
        Some(sweep) => (sweep.nu.unwrap_or(mid), sweep.points.iter().map(|p| (p[0], p[1])).collect()),
        None => {
            let w = 0.5 * (sys.upper() - sys.lower());
            (mid, (1..=8).map(|k| (mid - w * k as f64 / 8.0, mid + w * k as f64 / 8.0)).collect())
        }
    };
    if grid.is_empty() {
        return Err(CliError::Validation("sweep.points is empty".into()));
    }
    let points = sweep_family(sys.drift(), sys.control(), nu, &grid, analysis.samples)?;
    let rows = points.iter().map(|p| {
        vec![
            num(p.alpha),
            num(p.rho),
            num(p.p_plus.x),
            num(p.p_plus.y),
            num(p.p_minus.x),
            num(p.p_minus.y),
            p.hausdorff_prev.map(num).unwrap_or_default(),
        ]
    });
    let header = ["alpha", "rho", "p_plus_x", "p_plus_y", "p_minus_x", "p_minus_y", "hausdorff_prev"];
    let text = csv(&header, rows);
    let summary = SweepReport {
        points: points.len(),
        max_hausdorff_prev: points.iter().filter_map(|p| p.hausdorff_prev).reduce(f64::max),
    };
    let boundaries = points.into_iter().map(|p| p.boundary).collect();
    Ok((Table { name: "sweep", text, note: None }, boundaries, summary))
}
