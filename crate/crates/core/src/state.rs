//! Point-mass states, boundary problems and the exact kinematics shared by
//! every planner in the crate.
//!
//! All solvers work in input-normalized units: lengths and velocities are
//! divided by the input bound so that the admissible input set is the unit
//! ball. Time is never rescaled. Conversion back to SI happens only at the
//! public API edges.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub(crate) fn is_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Position and velocity of the point mass at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub r: Vec3,
    pub v: Vec3,
}

impl PointState {
    pub fn new(r: Vec3, v: Vec3) -> Self {
        PointState { r, v }
    }

    pub fn at_rest(r: Vec3) -> Self {
        PointState { r, v: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        is_finite(&self.r) && is_finite(&self.v)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        PointState {
            r: self.r * factor,
            v: self.v * factor,
        }
    }
}

/// Two-point steering problem: reach `end` from `start` under constant
/// gravity `g` with `‖u‖ ≤ u_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub start: PointState,
    pub end: PointState,
    pub g: Vec3,
    pub u_max: f64,
}

impl BoundaryPair {
    pub fn new(start: PointState, end: PointState, g: Vec3, u_max: f64) -> Result<Self> {
        let pair = BoundaryPair {
            start,
            end,
            g,
            u_max,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(Error::invalid(format!(
                "input bound must be positive and finite, got {}",
                self.u_max
            )));
        }
        if !self.start.is_finite() || !self.end.is_finite() || !is_finite(&self.g) {
            return Err(Error::invalid("boundary states and gravity must be finite"));
        }
        Ok(())
    }

    /// Errors when the input bound cannot hold the mass against gravity.
    pub fn check_hover(&self) -> Result<()> {
        let g = self.g.norm();
        if g >= self.u_max {
            return Err(Error::Infeasible(format!(
                "gravity {g} is not below the input bound {}",
                self.u_max
            )));
        }
        Ok(())
    }
}

/// A boundary problem expressed in units where the input bound is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedProblem {
    pub start: PointState,
    pub end: PointState,
    pub g: Vec3,
    /// Original input bound; multiply lengths, velocities and accelerations
    /// by it to return to SI units.
    pub scale: f64,
}

impl NormalizedProblem {
    pub const U_MAX: f64 = 1.0;

    pub fn u_max(&self) -> f64 {
        Self::U_MAX
    }

    pub fn denormalize(&self) -> Result<BoundaryPair> {
        check_scale(self.scale)?;
        Ok(BoundaryPair {
            start: self.start.scaled(self.scale),
            end: self.end.scaled(self.scale),
            g: self.g * self.scale,
            u_max: self.scale,
        })
    }

    /// Displacement and velocity change of the boundary, relative to the start.
    pub(crate) fn deltas(&self) -> (Vec3, Vec3) {
        (self.end.r - self.start.r, self.end.v - self.start.v)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must be positive, got {scale}")))
    }
}

pub fn normalize(p: &BoundaryPair) -> Result<NormalizedProblem> {
    p.validate()?;
    let k = p.u_max.recip();
    Ok(NormalizedProblem {
        start: p.start.scaled(k),
        end: p.end.scaled(k),
        g: p.g * k,
        scale: p.u_max,
    })
}

/// Converts a normalized vector quantity (position, velocity or
/// acceleration) back to SI units.
pub fn denormalize_vec(scale: f64, v: &Vec3) -> Result<Vec3> {
    check_scale(scale)?;
    Ok(v * scale)
}

pub fn denormalize_state(scale: f64, s: &PointState) -> Result<PointState> {
    check_scale(scale)?;
    Ok(s.scaled(scale))
}

/// Exact propagation over `dt` under constant input `u` and gravity `g`.
pub fn propagate_constant(s: &PointState, u: &Vec3, g: &Vec3, dt: f64) -> Result<PointState> {
    if !(dt >= 0.0) {
        return Err(Error::invalid(format!("negative duration {dt}")));
    }
    Ok(propagate(s, &(u + g), dt))
}

#[inline]
pub(crate) fn propagate(s: &PointState, accel: &Vec3, dt: f64) -> PointState {
    PointState {
        r: s.r + s.v * dt + accel * (0.5 * dt * dt),
        v: s.v + accel * dt,
    }
}

/// Removes gravity from a boundary problem of known duration `t_f` using the
/// substitution `ṽ = v − g·t`, `r̃ = r − g·t²/2`. The returned problem has
/// `g = 0` and the same admissible controls over `[0, t_f]`.
pub fn gravity_shift(b: &BoundaryPair, t_f: f64) -> Result<BoundaryPair> {
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::invalid(format!("duration must be positive, got {t_f}")));
    }
    Ok(BoundaryPair {
        start: b.start,
        end: PointState {
            r: b.end.r - b.g * (0.5 * t_f * t_f),
            v: b.end.v - b.g * t_f,
        },
        g: Vec3::zeros(),
        u_max: b.u_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(u_max: f64) -> BoundaryPair {
        BoundaryPair::new(
            PointState::new(Vec3::new(4.0, 0.0, 1.0), Vec3::new(0.5, -1.0, 0.0)),
            PointState::new(Vec3::new(-2.0, 3.0, 0.0), Vec3::zeros()),
            Vec3::new(0.0, 0.0, -9.8),
            u_max,
        )
        .unwrap()
    }

    #[test]
    fn unit_bound_normalizes_to_identity() {
        let p = pair(1.0);
        let n = normalize(&p).unwrap();
        assert_eq!(n.start, p.start);
        assert_eq!(n.end, p.end);
        assert_eq!(n.g, p.g);
        assert_eq!(n.u_max(), 1.0);
    }

    #[test]
    fn thrust_bound_of_ten_and_a_half() {
        let n = normalize(&pair(10.5)).unwrap();
        assert_relative_eq!(n.g.z, -0.933_333_333_333_333_3, max_relative = 1e-15);
        let u = denormalize_vec(n.scale, &Vec3::new(0.6, 0.0, 0.8)).unwrap();
        assert_relative_eq!(u.norm(), 10.5, max_relative = 1e-15);
    }

    #[test]
    fn scale_two_round_trip() {
        let mut p = pair(2.0);
        p.start.r = Vec3::new(4.0, 0.0, 0.0);
        let n = normalize(&p).unwrap();
        assert_eq!(n.start.r, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(n.denormalize().unwrap().start.r, Vec3::new(4.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(matches!(
            BoundaryPair::new(PointState::at_rest(Vec3::zeros()), PointState::at_rest(Vec3::x()), Vec3::zeros(), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(denormalize_vec(-1.0, &Vec3::x()).is_err());
        let mut p = pair(10.5);
        p.u_max = 9.8;
        assert!(matches!(p.check_hover(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn hover_input_cancels_gravity() {
        let s = PointState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 2.0));
        let g = Vec3::new(0.0, 0.0, -9.8);
        let out = propagate_constant(&s, &-g, &g, 1.5).unwrap();
        assert_relative_eq!(out.r, s.r + s.v * 1.5, epsilon = 1e-14);
        assert_relative_eq!(out.v, s.v, epsilon = 1e-14);
    }

    #[test]
    fn constant_acceleration_from_rest() {
        let out = propagate_constant(&PointState::at_rest(Vec3::zeros()), &Vec3::x(), &Vec3::zeros(), 2.0).unwrap();
        assert_eq!(out.r, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(out.v, Vec3::new(2.0, 0.0, 0.0));
        assert!(propagate_constant(&out, &Vec3::x(), &Vec3::zeros(), -1e-9).is_err());
    }

    #[test]
    fn gravity_shift_examples() {
        let start = PointState::at_rest(Vec3::zeros());
        let b = BoundaryPair::new(start, start, Vec3::zeros(), 1.0).unwrap();
        assert_eq!(gravity_shift(&b, 3.0).unwrap(), b);

        let b = BoundaryPair::new(start, start, Vec3::new(0.0, 0.0, -9.8), 10.5).unwrap();
        let s = gravity_shift(&b, 1.0).unwrap();
        assert_relative_eq!(s.end.r, Vec3::new(0.0, 0.0, 4.9), epsilon = 1e-15);
        assert_relative_eq!(s.end.v, Vec3::new(0.0, 0.0, 9.8), epsilon = 1e-15);
        assert_eq!(s.g, Vec3::zeros());
        assert!(gravity_shift(&b, 0.0).is_err());
    }
}
