//! Continuous trajectories from a switching plan.
//!
//! [`direct_interpolation`] integrates the plan's piecewise-constant input
//! exactly. [`pmp_refine`] keeps only the plan's waypoint velocities and
//! re-solves every segment with the two-point solver, which gives a
//! continuous unit-norm input within each segment.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nlp::{SwitchingPlan, WaypointPath};
use crate::state::{is_finite, propagate, BoundaryPair, PointState, Vec3};
use crate::steer::{solve_two_point, Branch, SolveOptions, SteeringSolution};

/// Samples per trajectory when no spacing is given.
pub const DEFAULT_SAMPLES: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Pmp,
    Minsnap,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Pmp => "pmp",
            Method::Minsnap => "minsnap",
        }
    }
}

/// One trajectory sample in SI units. `u` is the commanded input, so the
/// acceleration is `u + g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    pub u: Vec3,
    pub segment: usize,
}

/// Seventh-order polynomial segment: `coeffs[axis][k]` multiplies `τᵏ` with
/// `τ` the time since the segment start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolySegment {
    pub coeffs: [[f64; 8]; 3],
    pub duration: f64,
}

impl PolySegment {
    /// Derivative of order `order` (0 = position) at local time `tau`.
    pub fn eval(&self, tau: f64, order: usize) -> Vec3 {
        let mut out = Vec3::zeros();
        for (axis, c) in self.coeffs.iter().enumerate() {
            let mut acc = 0.0;
            for k in (order..8).rev() {
                let falling: f64 = (0..order).map(|j| (k - j) as f64).product();
                acc = acc * tau + falling * c[k];
            }
            out[axis] = acc;
        }
        out
    }
}

/// What a trajectory was built from; lets it be evaluated at any time.
#[derive(Debug, Clone)]
pub(crate) enum Model {
    Pieces {
        starts: Vec<PointState>,
        dt: Vec<f64>,
        inputs: Vec<Vec3>,
        per_segment: usize,
    },
    Pmp(Vec<SteeringSolution>),
    Poly(Vec<PolySegment>),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub method: Method,
    pub samples: Vec<Sample>,
    pub segment_times: Vec<f64>,
    pub total_time: f64,
    pub waypoints: Vec<Vec3>,
    pub u_max: f64,
    pub g: Vec3,
    pub(crate) model: Model,
}

impl Trajectory {
    /// Start time of every segment plus the final time.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segment_times.len() + 1);
        let mut t = 0.0;
        out.push(t);
        for d in &self.segment_times {
            t += d;
            out.push(t);
        }
        if let Some(last) = out.last_mut() {
            *last = self.total_time;
        }
        out
    }

    /// Per-segment optimal solutions for PMP trajectories.
    pub fn pmp_segments(&self) -> Option<&[SteeringSolution]> {
        match &self.model {
            Model::Pmp(s) => Some(s),
            _ => None,
        }
    }

    /// Polynomial segments for minimum-snap trajectories.
    pub fn poly_segments(&self) -> Option<&[PolySegment]> {
        match &self.model {
            Model::Poly(s) => Some(s),
            _ => None,
        }
    }

    /// Segment containing `t`; segment boundaries belong to the later
    /// segment except at the final time.
    pub fn segment_at(&self, t: f64) -> usize {
        let starts = self.segment_starts();
        let n = self.segment_times.len();
        (0..n).rev().find(|&i| t >= starts[i]).unwrap_or(0).min(n - 1)
    }

    /// State and input at global time `t`, evaluated from the underlying
    /// model rather than interpolated between samples.
    pub fn eval(&self, t: f64) -> Result<Sample> {
        let slack = 1e-9 * self.total_time.max(1.0);
        if !(t >= -slack && t <= self.total_time + slack) {
            return Err(Error::invalid(format!("time {t} outside [0, {}]", self.total_time)));
        }
        let t = t.clamp(0.0, self.total_time);
        let segment = self.segment_at(t);
        let start = self.segment_starts()[segment];
        let (state, u) = match &self.model {
            Model::Pieces {
                starts,
                dt,
                inputs,
                per_segment,
            } => {
                let first = segment * per_segment;
                let mut k = first;
                let mut t0 = start;
                // Last non-empty piece of the segment that starts at or before t.
                let mut chosen = None;
                #[allow(clippy::needless_range_loop)]
                for j in first..first + per_segment {
                    if dt[j] > 0.0 && t >= t0 {
                        chosen = Some((j, t0));
                    }
                    t0 += dt[j];
                    k = j;
                }
                let (j, tj) = chosen.unwrap_or((k, t0));
                let local = (t - tj).max(0.0);
                (propagate(&starts[j], &(inputs[j] + self.g), local), inputs[j])
            }
            Model::Pmp(sols) => {
                let sol = &sols[segment];
                let local = (t - start).clamp(0.0, sol.t_f);
                (sol.state_si(local)?, sol.input_si(local)?)
            }
            Model::Poly(segs) => {
                let seg = &segs[segment];
                let local = (t - start).clamp(0.0, seg.duration);
                let s = PointState::new(seg.eval(local, 0), seg.eval(local, 1));
                (s, seg.eval(local, 2) - self.g)
            }
        };
        Ok(Sample {
            t,
            r: state.r,
            v: state.v,
            u,
            segment,
        })
    }
}

fn check_sample_dt(sample_dt: Option<f64>, total: f64) -> Result<f64> {
    let dt = sample_dt.unwrap_or(total / DEFAULT_SAMPLES);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("sample spacing {dt} must be positive")));
    }
    if total / dt > 1e7 {
        return Err(Error::invalid("sample spacing too small for the trajectory length"));
    }
    Ok(dt)
}

/// Uniform grid merged with the exact breakpoints; strictly increasing.
pub(crate) fn sample_times(breaks: &[f64], total: f64, dt: f64) -> Vec<f64> {
    let tol = 1e-12 * total.max(1.0);
    let mut points: Vec<(f64, bool)> = breaks.iter().map(|&b| (b.clamp(0.0, total), true)).collect();
    points.push((0.0, true));
    points.push((total, true));
    let n = (total / dt).floor() as usize;
    points.extend((0..=n).map(|k| (k as f64 * dt, false)).filter(|(t, _)| *t < total));
    // Exact breakpoints sort ahead of grid points at the same time.
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    let mut last_exact = false;
    for (t, exact) in points {
        match out.last_mut() {
            Some(prev) if t - *prev <= tol => {
                if exact && !last_exact {
                    *prev = t;
                    last_exact = true;
                }
            }
            _ => {
                out.push(t);
                last_exact = exact;
            }
        }
    }
    if let Some(last) = out.last_mut() {
        *last = total;
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build(method: Method, model: Model, segment_times: Vec<f64>, waypoints: Vec<Vec3>, u_max: f64, g: Vec3, breaks: &[f64], sample_dt: Option<f64>) -> Result<Trajectory> {
    let total_time: f64 = segment_times.iter().sum();
    let dt = check_sample_dt(sample_dt, total_time)?;
    let mut traj = Trajectory {
        method,
        samples: Vec::new(),
        segment_times,
        total_time,
        waypoints,
        u_max,
        g,
        model,
    };
    traj.samples = sample_times(breaks, total_time, dt).into_iter().map(|t| traj.eval(t)).collect::<Result<_>>()?;
    Ok(traj)
}

/// Integrates the plan's piecewise-constant input from the start of `path`.
/// Samples every `sample_dt` seconds (default: total time / 2000) plus every
/// piece boundary.
pub fn direct_interpolation(plan: &SwitchingPlan, path: &WaypointPath, u_max: f64, g: &Vec3, sample_dt: Option<f64>) -> Result<Trajectory> {
    path.validate()?;
    if !(u_max > 0.0 && u_max.is_finite()) || !is_finite(g) {
        return Err(Error::invalid("input bound must be positive and gravity finite"));
    }
    let (clean, _) = path.dedup();
    let per = plan.pieces_per_segment();
    if plan.dt.len() != per * clean.segments() || plan.dirs.len() != plan.dt.len() {
        return Err(Error::invalid(format!(
            "plan has {} pieces but the path needs {}",
            plan.dt.len(),
            per * clean.segments()
        )));
    }
    if let Some(k) = plan.dt.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(Error::invalid(format!("piece {k} has invalid duration {}", plan.dt[k])));
    }
    let inputs: Vec<Vec3> = plan.dirs.iter().map(|d| d * u_max).collect();
    let mut starts = Vec::with_capacity(plan.dt.len());
    let mut breaks = Vec::with_capacity(plan.dt.len() + 1);
    let mut s = PointState::new(clean.waypoints[0], clean.v_start);
    let mut t = 0.0;
    for (d, u) in plan.dt.iter().zip(&inputs) {
        starts.push(s);
        breaks.push(t);
        s = propagate(&s, &(u + g), *d);
        t += d;
    }
    let segment_times = plan.dt.chunks(per).map(|c| c.iter().sum()).collect();
    let model = Model::Pieces {
        starts,
        dt: plan.dt.clone(),
        inputs,
        per_segment: per,
    };
    build(Method::Direct, model, segment_times, clean.waypoints, u_max, *g, &breaks, sample_dt)
}

/// Solves every segment `(w_i, v_i) → (w_{i+1}, v_{i+1})` with the two-point
/// solver and concatenates the results. `velocities` holds one velocity per
/// waypoint, as in [`SwitchingPlan::waypoint_velocities`].
pub fn pmp_refine(path: &WaypointPath, velocities: &[Vec3], u_max: f64, g: &Vec3, opts: &SolveOptions, sample_dt: Option<f64>) -> Result<Trajectory> {
    path.validate()?;
    if velocities.len() != path.waypoints.len() {
        return Err(Error::invalid(format!("{} velocities for {} waypoints", velocities.len(), path.waypoints.len())));
    }
    let per_segment = vec![*opts; path.waypoints.len() - 1];
    refine(&path.waypoints, velocities, u_max, g, &per_segment, sample_dt)
}

/// [`pmp_refine`] on a plan's own waypoints and velocities, warm-started
/// from the plan: each segment's starts are sampled below the plan's
/// segment duration (which is feasible, so the optimum cannot exceed it),
/// and one start is estimated from the first and last piece directions.
pub fn refine_plan(plan: &SwitchingPlan, opts: &SolveOptions, sample_dt: Option<f64>) -> Result<Trajectory> {
    let per = plan.pieces_per_segment();
    let times = plan.segment_times();
    let per_segment: Vec<SolveOptions> = (0..plan.segments())
        .map(|i| SolveOptions {
            hint: opts.hint.or_else(|| plan_hint(&plan.dt[i * per..(i + 1) * per], &plan.dirs[i * per..(i + 1) * per])),
            t_f_upper: opts.t_f_upper.or(Some(times[i])),
            ..*opts
        })
        .collect();
    refine(&plan.waypoints, &plan.waypoint_velocities, plan.u_max, &plan.g, &per_segment, sample_dt)
}

/// Estimates `(μ, σ, t_f)` from one segment's pieces. The first piece gives
/// `η`, the last gives the direction of `Q(t_f) = η − ζ`, and the time at
/// which the input has turned half way is taken as the closest approach of
/// `Q` to the origin, `t_f·(ζ·η)/‖ζ‖²`.
fn plan_hint(dt: &[f64], dirs: &[Vec3]) -> Option<[f64; 3]> {
    let t_f: f64 = dt.iter().sum();
    let (first, last) = (dirs.first()?, dirs.last()?);
    let angle = |d: &Vec3| first.dot(d).clamp(-1.0, 1.0).acos();
    let half = 0.5 * angle(last);
    let mut t = 0.0;
    let mut turn = 0.5 * t_f;
    for (d, dir) in dt.iter().zip(dirs) {
        if angle(dir) >= half && half > 0.0 {
            turn = t;
            break;
        }
        t += d;
    }
    let r = (turn / t_f).clamp(0.05, 0.95);
    let c = first.dot(last);
    // r·λ² + c(1 − 2r)·λ + (r − 1) = 0 for the length λ of Q(t_f).
    let b = c * (1.0 - 2.0 * r);
    let lambda = (-b + (b * b - 4.0 * r * (r - 1.0)).sqrt()) / (2.0 * r);
    let zeta = first - last * lambda;
    let mu = zeta.norm();
    let sigma = (zeta.dot(first) / mu).clamp(-1.0 + 1e-9, 1.0 - 1e-9);
    (mu > 1e-6 && mu.is_finite() && t_f > 0.0).then_some([mu, sigma, t_f])
}

fn refine(w: &[Vec3], velocities: &[Vec3], u_max: f64, g: &Vec3, opts: &[SolveOptions], sample_dt: Option<f64>) -> Result<Trajectory> {
    let sols: Vec<SteeringSolution> = (0..w.len() - 1)
        .into_par_iter()
        .map(|i| {
            let b = BoundaryPair::new(PointState::new(w[i], velocities[i]), PointState::new(w[i + 1], velocities[i + 1]), *g, u_max)?;
            solve_two_point(&b, &opts[i])
        })
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Segment {
                segment: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let segment_times: Vec<f64> = sols.iter().map(|s| s.t_f).collect();
    let mut breaks = vec![0.0];
    let mut t = 0.0;
    for (s, d) in sols.iter().zip(&segment_times) {
        if let Branch::BangBang { switch_time } = s.branch {
            breaks.push(t + switch_time);
        }
        t += d;
        breaks.push(t);
    }
    build(Method::Pmp, Model::Pmp(sols), segment_times, w.to_vec(), u_max, *g, &breaks, sample_dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianSample {
    pub t: f64,
    pub h: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentHamiltonian {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `(max − min) / (1 + |mean|)`.
    pub relative_variation: f64,
}

/// Normalized Hamiltonian `ξ·v + Q·(u + g)` along a PMP trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianProfile {
    pub samples: Vec<HamiltonianSample>,
    pub segments: Vec<SegmentHamiltonian>,
    /// `mean[i+1] − mean[i]` at each interior waypoint.
    pub jumps: Vec<f64>,
}

impl HamiltonianProfile {
    pub fn max_relative_variation(&self) -> f64 {
        self.segments.iter().map(|s| s.relative_variation).fold(0.0, f64::max)
    }
}

/// Evaluates the Hamiltonian at every sample of a PMP trajectory. Values at
/// a waypoint are taken from the segment that starts there; the arriving
/// segment's endpoint is included in its own statistics.
pub fn hamiltonian_profile(traj: &Trajectory) -> Result<HamiltonianProfile> {
    let sols = traj
        .pmp_segments()
        .ok_or_else(|| Error::invalid(format!("Hamiltonian needs a pmp trajectory, got {}", traj.method.as_str())))?;
    let starts = traj.segment_starts();
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); sols.len()];
    let mut samples = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let i = s.segment;
        let h = sols[i].hamiltonian((s.t - starts[i]).clamp(0.0, sols[i].t_f))?;
        per[i].push(h);
        samples.push(HamiltonianSample { t: s.t, h, segment: i });
    }
    for (i, sol) in sols.iter().enumerate() {
        per[i].push(sol.hamiltonian(sol.t_f)?);
    }
    let segments: Vec<SegmentHamiltonian> = per
        .iter()
        .map(|v| {
            let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), h| (a.min(*h), b.max(*h)));
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            SegmentHamiltonian {
                mean,
                min,
                max,
                relative_variation: (max - min) / (1.0 + mean.abs()),
            }
        })
        .collect();
    let jumps = segments.windows(2).map(|w| w[1].mean - w[0].mean).collect();
    Ok(HamiltonianProfile { samples, segments, jumps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentComparison {
    pub segment: usize,
    pub time_a: f64,
    pub time_b: f64,
    /// `time_b − time_a`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub method_a: Method,
    pub method_b: Method,
    pub segments: Vec<SegmentComparison>,
    pub total_a: f64,
    pub total_b: f64,
    pub total_delta: f64,
    /// `total_b / total_a`.
    pub ratio: f64,
    /// Largest deviation at matched per-segment normalized times.
    pub max_position_deviation: f64,
    pub max_velocity_deviation: f64,
}

/// Points per segment at which two trajectories are compared.
const MATCH_POINTS: usize = 200;

/// Per-segment times and pointwise deviations of `b` relative to `a`. States
/// are matched at equal fractions of each segment's duration.
pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<Comparison> {
    let same = a.waypoints.len() == b.waypoints.len() && a.waypoints.iter().zip(&b.waypoints).all(|(p, q)| (p - q).norm() <= 1e-9 * (1.0 + p.norm()));
    if !same || a.segment_times.len() != b.segment_times.len() {
        return Err(Error::invalid("trajectories follow different waypoint paths"));
    }
    let segments = a
        .segment_times
        .iter()
        .zip(&b.segment_times)
        .enumerate()
        .map(|(segment, (&time_a, &time_b))| SegmentComparison {
            segment,
            time_a,
            time_b,
            delta: time_b - time_a,
        })
        .collect();
    let (sa, sb) = (a.segment_starts(), b.segment_starts());
    let (mut dp, mut dv) = (0.0f64, 0.0f64);
    for i in 0..a.segment_times.len() {
        for k in 0..=MATCH_POINTS {
            let f = k as f64 / MATCH_POINTS as f64;
            // Evaluate strictly inside the segment so boundaries stay with it.
            let ta = (sa[i] + f * a.segment_times[i]).min(sa[i + 1]);
            let tb = (sb[i] + f * b.segment_times[i]).min(sb[i + 1]);
            let (pa, pb) = (a.eval(ta)?, b.eval(tb)?);
            dp = dp.max((pa.r - pb.r).norm());
            dv = dv.max((pa.v - pb.v).norm());
        }
    }
    Ok(Comparison {
        method_a: a.method,
        method_b: b.method,
        segments,
        total_a: a.total_time,
        total_b: b.total_time,
        total_delta: b.total_time - a.total_time,
        ratio: b.total_time / a.total_time,
        max_position_deviation: dp,
        max_velocity_deviation: dv,
    })
}
