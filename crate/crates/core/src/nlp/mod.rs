//! Multi-waypoint minimum-time planning over piecewise-constant inputs.
//!
//! Every segment between consecutive waypoints is split into `M + 1` pieces
//! (`M` switching points). Each piece holds a unit input for a free duration.
//! Durations are `s²` and directions come from azimuth/elevation angles, so
//! non-negativity and the unit norm hold by construction. The remaining
//! constraints are the waypoint arrival positions, the final velocity when
//! one is prescribed, and optional speed caps at the waypoints. The program
//! is solved by an augmented Lagrangian with a damped Newton inner solver from
//! several seeded starts.

mod solve;

pub use solve::solve_nlp;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{is_finite, propagate, propagate_constant, PointState, Vec3};

/// Ordered waypoints with boundary velocities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaypointPath {
    pub waypoints: Vec<Vec3>,
    pub v_start: Vec3,
    /// `None` leaves the final velocity free.
    pub v_end: Option<Vec3>,
    /// Upper bound on the speed at every waypoint after the first.
    pub speed_cap: Option<f64>,
}

impl WaypointPath {
    pub fn new(waypoints: Vec<Vec3>, v_start: Vec3, v_end: Option<Vec3>) -> Result<Self> {
        let path = WaypointPath {
            waypoints,
            v_start,
            v_end,
            speed_cap: None,
        };
        path.validate()?;
        Ok(path)
    }

    /// Rest at both ends.
    pub fn rest_to_rest(waypoints: Vec<Vec3>) -> Result<Self> {
        Self::new(waypoints, Vec3::zeros(), Some(Vec3::zeros()))
    }

    pub fn with_speed_cap(mut self, cap: f64) -> Result<Self> {
        self.speed_cap = Some(cap);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::invalid(format!("need at least 2 waypoints, got {}", self.waypoints.len())));
        }
        if !self.waypoints.iter().all(is_finite) || !is_finite(&self.v_start) || !self.v_end.as_ref().is_none_or(is_finite) {
            return Err(Error::invalid("waypoints and velocities must be finite"));
        }
        if let Some(cap) = self.speed_cap {
            if !(cap >= 0.0 && cap.is_finite()) {
                return Err(Error::invalid(format!("speed cap must be non-negative, got {cap}")));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> usize {
        self.waypoints.len() - 1
    }

    /// Drops waypoints that coincide with their predecessor. Returns the
    /// cleaned path and the indices of the dropped segments.
    pub fn dedup(&self) -> (WaypointPath, Vec<usize>) {
        let mut kept = vec![self.waypoints[0]];
        let mut dropped = Vec::new();
        for (i, w) in self.waypoints.iter().enumerate().skip(1) {
            let last = kept.last().expect("non-empty");
            if (w - last).norm() <= 1e-12 * (1.0 + w.norm()) {
                dropped.push(i - 1);
            } else {
                kept.push(*w);
            }
        }
        (
            WaypointPath {
                waypoints: kept,
                ..self.clone()
            },
            dropped,
        )
    }

    /// Total straight-line length.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlpOptions {
    /// Switching points per segment; each segment has `switch_points + 1` pieces.
    pub switch_points: usize,
    /// Largest accepted waypoint miss, metres (also used for the end velocity in m/s).
    pub position_tol: f64,
    /// Augmented Lagrangian outer iterations.
    pub max_iter: usize,
    /// Newton iterations per outer iteration.
    pub inner_iter: usize,
    /// Initial penalty, relative to the squared longest chord.
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub penalty_max: f64,
    /// Gradient tolerance of the final inner solve (normalized units).
    pub stationarity_tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub include_gravity: bool,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions {
            switch_points: 1,
            position_tol: 1e-6,
            max_iter: 60,
            inner_iter: 500,
            penalty_init: 100.0,
            penalty_growth: 10.0,
            penalty_max: 1e12,
            stationarity_tol: 1e-6,
            starts: 8,
            seed: 0,
            include_gravity: true,
        }
    }
}

impl NlpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.switch_points < 1 {
            return Err(Error::invalid("at least one switching point per segment is required"));
        }
        if self.starts < 1 {
            return Err(Error::invalid("at least one start is required"));
        }
        if !(self.position_tol > 0.0 && self.stationarity_tol > 0.0 && self.penalty_init > 0.0 && self.penalty_growth > 1.0) {
            return Err(Error::invalid("tolerances and penalty parameters must be positive"));
        }
        Ok(())
    }
}

/// The discretized program, stored in input-normalized units.
#[derive(Debug, Clone)]
pub struct NlpProblem {
    /// Path after dropping coincident waypoints (SI units).
    pub path: WaypointPath,
    /// Segments of the original path removed as zero-length.
    pub dropped_segments: Vec<usize>,
    pub u_max: f64,
    /// Gravity used in propagation (zero when gravity is switched off).
    pub g: Vec3,
    pub switch_points: usize,
    waypoints: Vec<Vec3>,
    v_start: Vec3,
    v_end: Option<Vec3>,
    gn: Vec3,
    speed_cap: Option<f64>,
}

impl NlpProblem {
    pub fn segments(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn pieces_per_segment(&self) -> usize {
        self.switch_points + 1
    }

    pub fn n_pieces(&self) -> usize {
        self.segments() * self.pieces_per_segment()
    }

    /// One duration and two angles per piece.
    pub fn n_vars(&self) -> usize {
        3 * self.n_pieces()
    }

    pub fn n_equality(&self) -> usize {
        3 * self.segments() + if self.v_end.is_some() { 3 } else { 0 }
    }

    pub fn n_inequality(&self) -> usize {
        if self.speed_cap.is_some() {
            self.segments()
        } else {
            0
        }
    }
}

/// Assembles the program for `path`. Coincident consecutive waypoints are
/// dropped with a warning.
pub fn build_problem(path: &WaypointPath, u_max: f64, g: &Vec3, opts: &NlpOptions) -> Result<NlpProblem> {
    path.validate()?;
    opts.validate()?;
    if !(u_max > 0.0 && u_max.is_finite()) || !is_finite(g) {
        return Err(Error::invalid("input bound must be positive and gravity finite"));
    }
    let g = if opts.include_gravity { *g } else { Vec3::zeros() };
    if g.norm() >= u_max {
        return Err(Error::Infeasible(format!("gravity {} is not below the input bound {u_max}", g.norm())));
    }
    let (clean, dropped) = path.dedup();
    for i in &dropped {
        log::warn!("dropping zero-length segment {i}");
    }
    if clean.waypoints.len() < 2 {
        return Err(Error::invalid("all waypoints coincide"));
    }
    let k = u_max.recip();
    Ok(NlpProblem {
        waypoints: clean.waypoints.iter().map(|w| w * k).collect(),
        v_start: clean.v_start * k,
        v_end: clean.v_end.map(|v| v * k),
        gn: g * k,
        speed_cap: clean.speed_cap.map(|c| c * k),
        path: clean,
        dropped_segments: dropped,
        u_max,
        g,
        switch_points: opts.switch_points,
    })
}

pub(crate) fn direction(az: f64, el: f64) -> Vec3 {
    let (sa, ca) = az.sin_cos();
    let (se, ce) = el.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

fn angles(u: &Vec3) -> (f64, f64) {
    let u = u.normalize();
    (u.y.atan2(u.x), u.z.clamp(-1.0, 1.0).asin())
}

/// Deterministic starting point: each segment is flown as a rest-to-rest
/// manoeuvre along its chord, accelerating then braking with gravity
/// compensated, and its duration is split evenly over the pieces.
pub fn initial_guess(problem: &NlpProblem) -> Vec<f64> {
    let per = problem.pieces_per_segment();
    let g = problem.gn;
    let mut x = Vec::with_capacity(problem.n_vars());
    for w in problem.waypoints.windows(2) {
        let chord = w[1] - w[0];
        let d = chord.norm();
        let e = chord / d;
        let eg = e.dot(&g);
        // Net accelerations along e with the input on the unit sphere.
        let root = (eg * eg - g.norm_squared() + 1.0).sqrt();
        let (c1, c2) = (root + eg, root - eg);
        let t1 = (2.0 * d * c2 / (c1 * (c1 + c2))).sqrt();
        let total = t1 * (1.0 + c1 / c2);
        let dt = total / per as f64;
        for j in 0..per {
            let mid = (j as f64 + 0.5) * dt;
            let u = if mid < t1 { e * c1 - g } else { -e * c2 - g };
            let (az, el) = angles(&u);
            x.extend([dt.sqrt(), az, el]);
        }
    }
    x
}

/// Solved piece durations and directions with derived waypoint data (SI).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingPlan {
    pub switch_points: usize,
    pub dt: Vec<f64>,
    pub dirs: Vec<Vec3>,
    /// Velocity at every waypoint, starting with the initial velocity.
    pub waypoint_velocities: Vec<Vec3>,
    pub total_time: f64,
    pub waypoints: Vec<Vec3>,
    pub u_max: f64,
    pub g: Vec3,
    pub diagnostics: NlpDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NlpDiagnostics {
    /// Largest waypoint miss (m) or end-velocity miss (m/s).
    pub max_violation: f64,
    /// Largest speed-cap excess (m/s).
    pub cap_excess: f64,
    /// Gradient norm of the final augmented objective (normalized units).
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub starts: usize,
    pub feasible_starts: usize,
    pub guess_time: f64,
    /// Pieces whose duration collapsed to (near) zero.
    pub collapsed_pieces: Vec<usize>,
    pub dropped_segments: Vec<usize>,
}

impl SwitchingPlan {
    pub fn pieces_per_segment(&self) -> usize {
        self.switch_points + 1
    }

    pub fn segments(&self) -> usize {
        self.waypoints.len() - 1
    }

    /// Duration of each waypoint-to-waypoint segment.
    pub fn segment_times(&self) -> Vec<f64> {
        self.dt.chunks(self.pieces_per_segment()).map(|c| c.iter().sum()).collect()
    }

    /// State at the start of every piece plus the final state.
    pub fn piece_states(&self) -> Vec<PointState> {
        let mut s = PointState::new(self.waypoints[0], self.waypoint_velocities[0]);
        let mut out = vec![s];
        for (dt, dir) in self.dt.iter().zip(&self.dirs) {
            s = propagate(&s, &(dir * self.u_max + self.g), *dt);
            out.push(s);
        }
        out
    }
}

/// Result of re-propagating a plan independently of the solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// Largest distance between an arrival and its waypoint (m).
    pub max_waypoint_miss: f64,
    pub end_velocity_miss: Option<f64>,
    pub max_dir_deviation: f64,
    pub negative_durations: Vec<usize>,
    pub max_speed_excess: f64,
    /// Zero-length segments of the path that the plan skips.
    pub skipped_segments: Vec<usize>,
    pub piece_count_ok: bool,
}

impl FeasibilityReport {
    pub fn passes(&self, position_tol: f64) -> bool {
        self.piece_count_ok
            && self.max_waypoint_miss < position_tol
            && self.end_velocity_miss.is_none_or(|m| m < position_tol)
            && self.max_dir_deviation < 1e-10
            && self.negative_durations.is_empty()
            && self.max_speed_excess <= position_tol
    }
}

/// Propagates the plan's pieces from the start of `path` with exact
/// constant-input kinematics and reports every violation found.
pub fn plan_feasibility_check(plan: &SwitchingPlan, path: &WaypointPath, u_max: f64, g: &Vec3) -> FeasibilityReport {
    let (clean, skipped) = path.dedup();
    let per = plan.pieces_per_segment();
    let piece_count_ok = plan.dt.len() == plan.dirs.len() && plan.dt.len() == per * clean.segments();
    let mut report = FeasibilityReport {
        max_waypoint_miss: 0.0,
        end_velocity_miss: None,
        max_dir_deviation: plan.dirs.iter().map(|d| (d.norm() - 1.0).abs()).fold(0.0, f64::max),
        negative_durations: plan.dt.iter().enumerate().filter(|(_, d)| !(**d >= 0.0)).map(|(i, _)| i).collect(),
        max_speed_excess: 0.0,
        skipped_segments: skipped,
        piece_count_ok,
    };
    if !piece_count_ok {
        report.max_waypoint_miss = f64::INFINITY;
        return report;
    }
    let mut s = PointState::new(clean.waypoints[0], clean.v_start);
    for (i, target) in clean.waypoints.iter().enumerate().skip(1) {
        for k in (i - 1) * per..i * per {
            s = propagate_constant(&s, &(plan.dirs[k] * u_max), g, plan.dt[k].max(0.0)).expect("non-negative duration");
        }
        report.max_waypoint_miss = report.max_waypoint_miss.max((s.r - target).norm());
        if let Some(cap) = clean.speed_cap {
            report.max_speed_excess = report.max_speed_excess.max(s.v.norm() - cap);
        }
    }
    report.end_velocity_miss = clean.v_end.map(|v| (s.v - v).norm());
    report
}
