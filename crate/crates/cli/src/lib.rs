//! Mission runner behind the `topt` binary. Every command reads a
//! [`MissionConfig`], runs the planners and writes CSV/JSON artifacts into an
//! output directory.

pub mod config;
pub mod output;

use std::path::Path;

use serde::Serialize;
use topt_core::assemble::{self, compare, direct_interpolation, hamiltonian_profile, refine_plan, Comparison, SegmentHamiltonian, Trajectory};
use topt_core::baseline::{allocate_times, min_snap, peak_thrust, sample_poly, DEFAULT_MARGIN};
use topt_core::coverage::{cell_centres, decompose, footprint, SurveySpec};
use topt_core::nlp::{build_problem, solve_nlp, NlpDiagnostics, WaypointPath};
use topt_core::steer::Branch;
use topt_core::{Error, Vec3};

pub use config::{Mission, MissionConfig, SolverConfig};
use output::{trajectory_csv, write_json, write_text};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::Segment { source, .. } = root {
            root = source;
        }
        match root {
            Error::InvalidArgument(_) | Error::Infeasible(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve2pt,
    Plan,
    Survey,
    Baseline,
}

pub fn run(cmd: Command, config: &MissionConfig, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    match cmd {
        Command::Solve2pt => cmd_solve2pt(config, out),
        Command::Plan => cmd_plan(config, out),
        Command::Survey => cmd_survey(config, out),
        Command::Baseline => cmd_baseline(config, out),
    }
}

#[derive(Serialize)]
struct Summary {
    t_f: f64,
    mu: f64,
    sigma: f64,
    /// Costate data in input-normalized units.
    xi: Vec3,
    eta: Vec3,
    residuals: [f64; 3],
    restarts: usize,
    converged_restarts: usize,
    branch: Branch,
    hamiltonian: f64,
    end_position_error: f64,
    end_velocity_error: f64,
}

pub fn cmd_solve2pt(config: &MissionConfig, out: &Path) -> Result<(), CliError> {
    let Mission::TwoPoint { start, end } = config.mission()? else {
        return Err(CliError::Config("solve2pt needs start and end states".into()));
    };
    let path = WaypointPath::new(vec![start.r, end.r], start.v, Some(end.v))?;
    let traj = assemble::pmp_refine(&path, &[start.v, end.v], config.u_max, &config.gravity(), &config.solve_options(), config.sample_dt)?;
    let sol = traj.pmp_segments().expect("pmp trajectory")[0];
    let last = sol.state_si(sol.t_f)?;
    let summary = Summary {
        t_f: sol.t_f,
        mu: sol.mu,
        sigma: sol.sigma,
        xi: sol.xi,
        eta: sol.eta,
        residuals: sol.report.residuals,
        restarts: sol.report.starts,
        converged_restarts: sol.report.converged_starts,
        branch: sol.branch,
        hamiltonian: sol.hamiltonian(0.0)?,
        end_position_error: (last.r - end.r).norm(),
        end_velocity_error: (last.v - end.v).norm(),
    };
    let h = hamiltonian_column(&traj)?;
    write_text(out, "trajectory.csv", &trajectory_csv(&traj, Some(&h)))?;
    write_json(out, "summary.json", &summary)
}

/// Waypoint program plus both assembled trajectories.
pub struct PlanRun {
    pub path: WaypointPath,
    pub direct: Trajectory,
    pub pmp: Trajectory,
    pub diagnostics: NlpDiagnostics,
    pub waypoint_velocities: Vec<Vec3>,
}

pub fn plan_mission(config: &MissionConfig, path: &WaypointPath) -> Result<PlanRun, CliError> {
    let g = config.gravity();
    let nlp_opts = config.nlp_options();
    let problem = build_problem(path, config.u_max, &g, &nlp_opts)?;
    let plan = solve_nlp(&problem, &nlp_opts)?;
    let direct = direct_interpolation(&plan, &problem.path, config.u_max, &g, config.sample_dt)?;
    let pmp = refine_plan(&plan, &config.solve_options(), config.sample_dt)?;
    Ok(PlanRun {
        path: problem.path,
        direct,
        pmp,
        waypoint_velocities: plan.waypoint_velocities,
        diagnostics: plan.diagnostics,
    })
}

#[derive(Serialize)]
struct HamiltonianReport {
    segments: Vec<SegmentHamiltonian>,
    /// Change of the segment mean at each interior waypoint.
    jumps: Vec<f64>,
    max_relative_variation: f64,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    switch_points: usize,
    #[serde(flatten)]
    comparison: &'a Comparison,
    waypoint_velocities: &'a [Vec3],
    hamiltonian: HamiltonianReport,
    nlp: &'a NlpDiagnostics,
}

fn hamiltonian_column(traj: &Trajectory) -> Result<Vec<f64>, CliError> {
    Ok(hamiltonian_profile(traj)?.samples.iter().map(|s| s.h).collect())
}

fn write_plan(config: &MissionConfig, run: &PlanRun, out: &Path) -> Result<(), CliError> {
    let comparison = compare(&run.direct, &run.pmp)?;
    let profile = hamiltonian_profile(&run.pmp)?;
    let h: Vec<f64> = profile.samples.iter().map(|s| s.h).collect();
    write_text(out, "direct.csv", &trajectory_csv(&run.direct, None))?;
    write_text(out, "pmp.csv", &trajectory_csv(&run.pmp, Some(&h)))?;
    let report = PlanReport {
        switch_points: config.switch_points,
        comparison: &comparison,
        waypoint_velocities: &run.waypoint_velocities,
        hamiltonian: HamiltonianReport {
            max_relative_variation: profile.max_relative_variation(),
            segments: profile.segments,
            jumps: profile.jumps,
        },
        nlp: &run.diagnostics,
    };
    write_json(out, "compare.json", &report)
}

pub fn cmd_plan(config: &MissionConfig, out: &Path) -> Result<(), CliError> {
    let Mission::Waypoints(path) = config.mission()? else {
        return Err(CliError::Config("plan needs a waypoint list".into()));
    };
    let run = plan_mission(config, &path)?;
    write_plan(config, &run, out)
}

#[derive(Serialize)]
struct SurveyReport {
    footprint: [f64; 2],
    pitch: [f64; 2],
    grid: [usize; 2],
    waypoints: Vec<Vec3>,
}

fn survey_path(config: &MissionConfig, spec: &SurveySpec) -> Result<WaypointPath, CliError> {
    let rest = decompose(spec)?;
    config.path(rest.waypoints)
}

pub fn cmd_survey(config: &MissionConfig, out: &Path) -> Result<(), CliError> {
    let Mission::Survey(spec) = config.mission()? else {
        return Err(CliError::Config("survey needs a survey spec".into()));
    };
    let (fx, fy) = footprint(&spec)?;
    let (px, py) = spec.pitch()?;
    let (nx, ny) = spec.grid()?;
    let report = SurveyReport {
        footprint: [fx, fy],
        pitch: [px, py],
        grid: [nx, ny],
        waypoints: cell_centres(&spec)?,
    };
    write_json(out, "waypoints.json", &report)?;
    let path = survey_path(config, &spec)?;
    let run = plan_mission(config, &path)?;
    write_plan(config, &run, out)
}

#[derive(Serialize)]
struct BaselineReport<'a> {
    #[serde(flatten)]
    comparison: &'a Comparison,
    /// Peak of `‖r̈ − g‖` over the polynomial trajectory.
    peak_thrust: f64,
    /// Largest sampled input norm.
    sampled_peak_thrust: f64,
    u_max: f64,
    margin: f64,
    thrust_feasible: bool,
}

pub fn cmd_baseline(config: &MissionConfig, out: &Path) -> Result<(), CliError> {
    let path = match config.mission()? {
        Mission::Waypoints(p) => p,
        Mission::Survey(spec) => survey_path(config, &spec)?,
        Mission::TwoPoint { .. } => return Err(CliError::Config("baseline needs a waypoint list or survey spec".into())),
    };
    let g = config.gravity();
    let run = plan_mission(config, &path)?;
    let times = allocate_times(&run.path, config.u_max, &g, DEFAULT_MARGIN)?;
    let segments = min_snap(&run.path, &times)?;
    let minsnap = sample_poly(&segments, &run.path.waypoints, config.u_max, &g, config.sample_dt)?;
    let comparison = compare(&run.pmp, &minsnap)?;
    let sampled = minsnap.samples.iter().map(|s| s.u.norm()).fold(0.0, f64::max);
    let report = BaselineReport {
        comparison: &comparison,
        peak_thrust: peak_thrust(&segments, &g),
        sampled_peak_thrust: sampled,
        u_max: config.u_max,
        margin: DEFAULT_MARGIN,
        thrust_feasible: sampled <= config.u_max * (1.0 + 1e-9),
    };
    let h = hamiltonian_column(&run.pmp)?;
    write_text(out, "pmp.csv", &trajectory_csv(&run.pmp, Some(&h)))?;
    write_text(out, "minsnap.csv", &trajectory_csv(&minsnap, None))?;
    write_json(out, "baseline.json", &report)
}
