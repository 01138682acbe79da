use crate::error::Result;
use crate::state::{normalize, propagate, BoundaryPair, NormalizedProblem, Vec3};

use super::{Branch, SolveReport, SteeringSolution};

const CONSISTENCY_TOL: f64 = 1e-9;
const COLLINEAR_TOL: f64 = 1e-9;

/// Shortest time `t` with `‖Δv − g·t‖ = t`, i.e. the time needed just to
/// produce the velocity change with a unit input. Zero when `Δv = 0`.
pub(crate) fn velocity_lower_bound(dv: &Vec3, g: &Vec3) -> f64 {
    let a = 1.0 - g.norm_squared();
    let b = dv.dot(g);
    let c = dv.norm_squared();
    if c == 0.0 {
        return 0.0;
    }
    let disc = (b * b + a * c).sqrt();
    if b > 0.0 {
        c / (b + disc)
    } else {
        (disc - b) / a
    }
}

/// Returns the constant-input solution when the boundary is reachable with a
/// single fixed unit input, and `None` otherwise. Such a solution is always
/// the global optimum: no faster control can produce the velocity change.
pub fn constant_input_fallback(b: &BoundaryPair) -> Result<Option<SteeringSolution>> {
    b.check_hover()?;
    Ok(constant_normalized(&normalize(b)?, None))
}

/// Without `boundary_tol` the boundary must be reachable to round-off.
/// With it, a position miss below `boundary_tol` (normalized units) is
/// accepted; this serves data that are degenerate only up to the tolerance
/// of whatever produced them.
pub(crate) fn constant_normalized(p: &NormalizedProblem, boundary_tol: Option<f64>) -> Option<SteeringSolution> {
    let (dr, dv) = p.deltas();
    let t = velocity_lower_bound(&dv, &p.g);
    if !(t > 0.0) {
        return None;
    }
    let e = (dv - p.g * t) / t;
    // r_f − r₀ − v₀t − g t²/2 − e t²/2 collapses to Δr − (v₀ + v_f)·t/2.
    let miss = dr - (p.start.v + p.end.v) * (0.5 * t);
    let accept = boundary_tol.map_or(CONSISTENCY_TOL * (1.0 + dr.norm()), |tol| tol);
    if !(miss.amax() <= accept) {
        return None;
    }
    Some(SteeringSolution {
        xi: Vec3::zeros(),
        eta: e.normalize(),
        mu: 0.0,
        sigma: 0.0,
        t_f: t,
        boundary: *p,
        branch: Branch::Constant,
        report: SolveReport {
            residuals: [miss.norm(), (e.norm() - 1.0).abs(), 0.0],
            ..SolveReport::default()
        },
    })
}

/// Time-optimal one-dimensional profile with accelerations in
/// `[g − 1, g + 1]`: returns `(t1, t2, first_sign)` for the shortest valid
/// two-phase bang-bang.
fn bang_bang_1d(d: f64, v0: f64, vf: f64, g: f64) -> Option<(f64, f64, f64)> {
    let scale = d.abs().max(v0.abs()).max(vf.abs()).max(1.0);
    let mut best: Option<(f64, f64, f64)> = None;
    for sign in [1.0, -1.0] {
        let alpha = g + sign;
        let beta = g - sign;
        let k = 0.5 / alpha - 0.5 / beta;
        let v1_sq = (d + 0.5 * v0 * v0 / alpha - 0.5 * vf * vf / beta) / k;
        let slack = 1e-12 * scale;
        if v1_sq < -slack * scale {
            continue;
        }
        // The switch velocity can have either sign (e.g. still descending
        // when the input flips), so both roots are candidates.
        let root = v1_sq.max(0.0).sqrt();
        for v1 in [root, -root] {
            let t1 = (v1 - v0) / alpha;
            let t2 = (vf - v1) / beta;
            if t1 < -slack || t2 < -slack {
                continue;
            }
            let (t1, t2) = (t1.max(0.0), t2.max(0.0));
            if best.is_none_or(|b| t1 + t2 < b.0 + b.1) {
                best = Some((t1, t2, sign));
            }
        }
    }
    best
}

/// Solves problems whose displacement, velocities and gravity all lie on
/// one line. The optimum then stays on that line and is a bang-bang profile
/// with at most one switch. Returns `None` for non-collinear data.
pub fn collinear_bang_bang(b: &BoundaryPair) -> Result<Option<SteeringSolution>> {
    b.check_hover()?;
    Ok(collinear_normalized(&normalize(b)?, None))
}

/// `boundary_tol` relaxes the collinearity test and the end-state check as
/// in [`constant_normalized`].
pub(crate) fn collinear_normalized(p: &NormalizedProblem, boundary_tol: Option<f64>) -> Option<SteeringSolution> {
    let (dr, _) = p.deltas();
    let vectors = [dr, p.start.v, p.end.v, p.g];
    let reference = vectors.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let scale = reference.norm();
    if scale == 0.0 {
        return None;
    }
    let axis = reference / scale;
    let off_axis = boundary_tol.map_or(COLLINEAR_TOL * scale, |tol| tol);
    if vectors.iter().any(|v| v.cross(&axis).norm() > off_axis) {
        return None;
    }
    let (t1, t2, sign) = bang_bang_1d(dr.dot(&axis), p.start.v.dot(&axis), p.end.v.dot(&axis), p.g.dot(&axis))?;
    let t_f = t1 + t2;
    if !(t_f > 0.0) {
        return None;
    }
    let e = axis * sign;
    let tiny = 1e-12 * t_f;
    let (eta, branch) = if t1 <= tiny {
        (-e, Branch::Constant)
    } else if t2 <= tiny {
        (e, Branch::Constant)
    } else {
        (e, Branch::BangBang { switch_time: t1 })
    };
    let (xi, mu, sigma) = match branch {
        Branch::BangBang { switch_time } => (eta / switch_time, t_f / switch_time, 1.0),
        _ => (Vec3::zeros(), 0.0, 0.0),
    };
    let sol = SteeringSolution {
        xi,
        eta,
        mu,
        sigma,
        t_f,
        boundary: *p,
        branch,
        report: SolveReport::default(),
    };
    let end = match branch {
        Branch::BangBang { switch_time } => {
            let mid = propagate(&p.start, &(eta + p.g), switch_time);
            propagate(&mid, &(p.g - eta), t_f - switch_time)
        }
        _ => propagate(&p.start, &(eta + p.g), t_f),
    };
    let miss = [(end.r - p.end.r).norm(), (end.v - p.end.v).norm(), 0.0];
    let accept = boundary_tol.map_or(CONSISTENCY_TOL * (1.0 + scale), |tol| tol);
    if !((end.r - p.end.r).amax().max((end.v - p.end.v).amax()) <= accept) {
        return None;
    }
    Some(SteeringSolution {
        report: SolveReport {
            residuals: miss,
            ..SolveReport::default()
        },
        ..sol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::PointState;
    use approx::assert_relative_eq;

    fn pair(r0: Vec3, v0: Vec3, rf: Vec3, vf: Vec3, g: Vec3, u_max: f64) -> BoundaryPair {
        BoundaryPair::new(PointState::new(r0, v0), PointState::new(rf, vf), g, u_max).unwrap()
    }

    #[test]
    fn velocity_reversal_is_constant() {
        let b = pair(Vec3::zeros(), Vec3::x(), Vec3::zeros(), -Vec3::x(), Vec3::zeros(), 1.0);
        let sol = constant_input_fallback(&b).unwrap().expect("constant input");
        assert_relative_eq!(sol.t_f, 2.0, epsilon = 1e-14);
        assert_relative_eq!(sol.eta, -Vec3::x(), epsilon = 1e-14);
        assert_eq!(sol.xi, Vec3::zeros());
        assert!(sol.report.residuals[0] < 1e-9);
    }

    #[test]
    fn generic_boundary_is_not_constant() {
        let b = pair(Vec3::zeros(), Vec3::new(0.2, 0.1, 0.0), Vec3::new(1.0, 0.5, 0.3), Vec3::new(0.0, -0.4, 0.1), Vec3::new(0.0, 0.0, -0.3), 1.0);
        assert!(constant_input_fallback(&b).unwrap().is_none());
        assert!(collinear_bang_bang(&b).unwrap().is_none());
    }

    #[test]
    fn rest_to_rest_switches_at_midpoint() {
        let b = pair(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros(), Vec3::zeros(), 1.0);
        let sol = collinear_bang_bang(&b).unwrap().unwrap();
        assert_relative_eq!(sol.t_f, 2.0, epsilon = 1e-14);
        assert_eq!(sol.branch, Branch::BangBang { switch_time: 1.0 });
        assert_eq!(sol.eta, Vec3::x());
    }

    #[test]
    fn hover_climb_matches_asymmetric_closed_form() {
        let b = pair(Vec3::zeros(), Vec3::zeros(), Vec3::z(), Vec3::zeros(), Vec3::new(0.0, 0.0, -9.8), 10.5);
        let sol = collinear_bang_bang(&b).unwrap().unwrap();
        let (a1, a2): (f64, f64) = (10.5 - 9.8, 10.5 + 9.8);
        let expected = (2.0 * a2 / (a1 * (a1 + a2))).sqrt() + (2.0 * a1 / (a2 * (a1 + a2))).sqrt();
        assert_relative_eq!(sol.t_f, expected, max_relative = 1e-13);
        assert!(constant_input_fallback(&b).unwrap().is_none());
    }

    #[test]
    fn constant_time_is_tight_lower_bound() {
        let g = Vec3::new(0.3, 0.0, -0.5);
        let dv = Vec3::new(1.0, -2.0, 0.5);
        let t = velocity_lower_bound(&dv, &g);
        assert_relative_eq!((dv - g * t).norm(), t, max_relative = 1e-14);
    }
}
