//! Minimum-snap polynomial baseline through the same waypoints.
//!
//! Each segment is a seventh-order polynomial per axis. Interior derivatives
//! up to snap are continuous; the ends take the path's velocities with zero
//! acceleration and jerk. Segment times are scaled uniformly until the peak
//! commanded thrust `‖r̈ − g‖` sits just under the input bound.

use nalgebra::{DMatrix, DVector};

use crate::assemble::{build, Method, Model, PolySegment, Trajectory};
use crate::error::{Error, Result};
use crate::nlp::WaypointPath;
use crate::state::{is_finite, Vec3};

/// Default thrust margin: peak thrust is `(1 − margin)·u_max`.
pub const DEFAULT_MARGIN: f64 = 0.02;

const ORDER: usize = 8;

/// `k!/(k−n)!`, zero for `k < n`.
fn falling(k: usize, n: usize) -> f64 {
    if k < n {
        0.0
    } else {
        (0..n).map(|j| (k - j) as f64).product()
    }
}

/// Row picking derivative `n` at unit-scaled time `s ∈ {0, 1}` of a segment
/// with duration `t`, in the scaled basis `sᵏ`.
fn derivative_row(n: usize, s: f64, t: f64) -> [f64; ORDER] {
    let mut row = [0.0; ORDER];
    for (k, r) in row.iter_mut().enumerate() {
        if k >= n {
            let pow = if k == n { 1.0 } else { s.powi((k - n) as i32) };
            *r = falling(k, n) * pow / t.powi(n as i32);
        }
    }
    row
}

/// Minimum-snap segments through `path.waypoints` with the given durations.
///
/// Solved as one equality-constrained quadratic program per axis, in a
/// per-segment scaled basis so that widely different durations stay well
/// conditioned. With `path.v_end = None` the final velocity is free.
pub fn min_snap(path: &WaypointPath, segment_times: &[f64]) -> Result<Vec<PolySegment>> {
    path.validate()?;
    let w = &path.waypoints;
    let m = w.len() - 1;
    if segment_times.len() != m {
        return Err(Error::invalid(format!("{} segment times for {m} segments", segment_times.len())));
    }
    if let Some(i) = segment_times.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid(format!("segment {i} has non-positive duration {}", segment_times[i])));
    }
    if let Some(i) = w.windows(2).position(|p| p[0] == p[1]) {
        return Err(Error::invalid(format!("waypoints {i} and {} coincide", i + 1)));
    }

    let n = ORDER * m;
    // Snap cost in the scaled basis: ∫₀¹ (d⁴/ds⁴)² ds / t⁷.
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (i, &t) in segment_times.iter().enumerate() {
        let scale = t.powi(7).recip();
        for k in 4..ORDER {
            for l in 4..ORDER {
                q[(ORDER * i + k, ORDER * i + l)] = scale * falling(k, 4) * falling(l, 4) / (k + l - 7) as f64;
            }
        }
    }

    // Constraint rows; the right-hand side is filled per axis.
    enum Rhs {
        Waypoint(usize),
        StartVel,
        EndVel,
        Zero,
    }
    type Row = (Vec<(usize, [f64; ORDER])>, Rhs);
    let mut rows: Vec<Row> = Vec::new();
    let t0 = segment_times[0];
    let tl = segment_times[m - 1];
    rows.push((vec![(0, derivative_row(0, 0.0, t0))], Rhs::Waypoint(0)));
    rows.push((vec![(0, derivative_row(1, 0.0, t0))], Rhs::StartVel));
    rows.push((vec![(0, derivative_row(2, 0.0, t0))], Rhs::Zero));
    rows.push((vec![(0, derivative_row(3, 0.0, t0))], Rhs::Zero));
    for i in 0..m {
        let t = segment_times[i];
        rows.push((vec![(i, derivative_row(0, 1.0, t))], Rhs::Waypoint(i + 1)));
        if i + 1 < m {
            let tn = segment_times[i + 1];
            rows.push((vec![(i + 1, derivative_row(0, 0.0, tn))], Rhs::Waypoint(i + 1)));
            for d in 1..=4 {
                let neg = derivative_row(d, 0.0, tn).map(|c| -c);
                rows.push((vec![(i, derivative_row(d, 1.0, t)), (i + 1, neg)], Rhs::Zero));
            }
        }
    }
    if path.v_end.is_some() {
        rows.push((vec![(m - 1, derivative_row(1, 1.0, tl))], Rhs::EndVel));
    }
    rows.push((vec![(m - 1, derivative_row(2, 1.0, tl))], Rhs::Zero));
    rows.push((vec![(m - 1, derivative_row(3, 1.0, tl))], Rhs::Zero));

    let c = rows.len();
    let mut kkt = DMatrix::<f64>::zeros(n + c, n + c);
    kkt.view_mut((0, 0), (n, n)).copy_from(&q);
    for (r, (entries, _)) in rows.iter().enumerate() {
        for (seg, coeffs) in entries {
            for (k, v) in coeffs.iter().enumerate() {
                kkt[(n + r, ORDER * seg + k)] = *v;
                kkt[(ORDER * seg + k, n + r)] = *v;
            }
        }
    }
    let lu = kkt.lu();
    let mut out = vec![
        PolySegment {
            coeffs: [[0.0; ORDER]; 3],
            duration: 0.0,
        };
        m
    ];
    for axis in 0..3 {
        let mut rhs = DVector::<f64>::zeros(n + c);
        for (r, (_, kind)) in rows.iter().enumerate() {
            rhs[n + r] = match kind {
                Rhs::Waypoint(i) => w[*i][axis],
                Rhs::StartVel => path.v_start[axis],
                Rhs::EndVel => path.v_end.map_or(0.0, |v| v[axis]),
                Rhs::Zero => 0.0,
            };
        }
        let sol = lu
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::invalid("minimum-snap constraint system is singular"))?;
        for (i, seg) in out.iter_mut().enumerate() {
            let t = segment_times[i];
            seg.duration = t;
            for k in 0..ORDER {
                seg.coeffs[axis][k] = sol[ORDER * i + k] / t.powi(k as i32);
            }
        }
    }
    Ok(out)
}

/// Samples per segment used to bracket the thrust maximum before refining.
const PEAK_GRID: usize = 64;

/// Largest commanded thrust `‖r̈(t) − g‖` over all segments. A dense grid
/// locates candidate maxima, which are then refined by golden-section
/// search.
pub fn peak_thrust(segments: &[PolySegment], g: &Vec3) -> f64 {
    let thrust = |seg: &PolySegment, tau: f64| (seg.eval(tau, 2) - g).norm();
    let mut peak = 0.0f64;
    for seg in segments {
        let h = seg.duration / PEAK_GRID as f64;
        let vals: Vec<f64> = (0..=PEAK_GRID).map(|k| thrust(seg, k as f64 * h)).collect();
        for k in 0..=PEAK_GRID {
            let left = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
            let right = if k < PEAK_GRID { vals[k + 1] } else { f64::NEG_INFINITY };
            if vals[k] < left || vals[k] < right {
                continue;
            }
            peak = peak.max(vals[k]);
            let (mut a, mut b) = (((k as f64) - 1.0).max(0.0) * h, ((k as f64) + 1.0).min(PEAK_GRID as f64) * h);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
            let (mut f1, mut f2) = (thrust(seg, x1), thrust(seg, x2));
            for _ in 0..80 {
                if f1 > f2 {
                    b = x2;
                    (x2, f2) = (x1, f1);
                    x1 = b - phi * (b - a);
                    f1 = thrust(seg, x1);
                } else {
                    a = x1;
                    (x1, f1) = (x2, f2);
                    x2 = a + phi * (b - a);
                    f2 = thrust(seg, x2);
                }
            }
            peak = peak.max(f1).max(f2);
        }
    }
    peak
}

/// Segment times for [`min_snap`]: proportional to segment length, then
/// scaled uniformly so the peak thrust equals `(1 − margin)·u_max` (to a
/// relative 1e-9, from below).
pub fn allocate_times(path: &WaypointPath, u_max: f64, g: &Vec3, margin: f64) -> Result<Vec<f64>> {
    path.validate()?;
    if !(u_max > 0.0 && u_max.is_finite()) || !is_finite(g) {
        return Err(Error::invalid("input bound must be positive and gravity finite"));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::invalid(format!("thrust margin {margin} must lie in [0, 1)")));
    }
    let target = (1.0 - margin) * u_max;
    if g.norm() >= target {
        return Err(Error::Infeasible(format!("gravity {} leaves no thrust margin under {target}", g.norm())));
    }
    let lengths: Vec<f64> = path.waypoints.windows(2).map(|p| (p[1] - p[0]).norm()).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::invalid("waypoints coincide"));
    }
    // Rest-to-rest time over the mean length sets the initial scale.
    let base: Vec<f64> = lengths.iter().map(|d| 2.0 * d / (mean * u_max).sqrt()).collect();
    let peak_at = |alpha: f64| -> Result<f64> {
        let times: Vec<f64> = base.iter().map(|t| t * alpha).collect();
        Ok(peak_thrust(&min_snap(path, &times)?, g))
    };
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let mut expand = 0;
    if peak_at(1.0)? > target {
        while peak_at(hi)? > target {
            hi *= 2.0;
            expand += 1;
            if expand > 60 {
                return Err(Error::Convergence {
                    context: "time allocation could not bring thrust under the bound".into(),
                    best_residual: peak_at(hi)? - target,
                });
            }
        }
        lo = hi / 2.0;
    } else {
        while peak_at(lo)? <= target {
            lo /= 2.0;
            expand += 1;
            if expand > 60 {
                return Err(Error::invalid("thrust stays under the bound for every time scale"));
            }
        }
        hi = lo * 2.0;
    }
    // Invariant: peak(lo) > target ≥ peak(hi).
    while (hi - lo) > 1e-10 * hi {
        let mid = (lo * hi).sqrt();
        if peak_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(base.iter().map(|t| t * hi).collect())
}

/// Samples a polynomial trajectory. The input is `u = r̈ − g`.
pub fn sample_poly(segments: &[PolySegment], waypoints: &[Vec3], u_max: f64, g: &Vec3, sample_dt: Option<f64>) -> Result<Trajectory> {
    if segments.is_empty() || waypoints.len() != segments.len() + 1 {
        return Err(Error::invalid("need one segment between each pair of waypoints"));
    }
    if segments.iter().any(|s| !(s.duration > 0.0) || s.coeffs.iter().flatten().any(|c| !c.is_finite())) {
        return Err(Error::invalid("polynomial segments must have positive durations and finite coefficients"));
    }
    let times: Vec<f64> = segments.iter().map(|s| s.duration).collect();
    let mut breaks = vec![0.0];
    let mut t = 0.0;
    for d in &times {
        t += d;
        breaks.push(t);
    }
    build(Method::Minsnap, Model::Poly(segments.to_vec()), times, waypoints.to_vec(), u_max, *g, &breaks, sample_dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_is_fully_determined_and_symmetric() {
        let path = WaypointPath::rest_to_rest(vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)]).unwrap();
        let seg = min_snap(&path, &[2.0]).unwrap()[0];
        // Odd symmetry about the midpoint: r(t) + r(T − t) = 2·r(T/2).
        for tau in [0.1, 0.5, 0.9] {
            let a = seg.eval(tau, 0)[0] + seg.eval(2.0 - tau, 0)[0];
            assert!((a - 2.0).abs() < 1e-12);
        }
        assert!((seg.eval(2.0, 0)[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_coincident_waypoints() {
        let path = WaypointPath::rest_to_rest(vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()]).unwrap();
        assert!(matches!(min_snap(&path, &[1.0, 1.0]), Err(Error::InvalidArgument(_))));
    }
}
