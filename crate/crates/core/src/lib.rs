//! Minimum-time trajectories for a point mass with a norm-bounded input
//! under constant gravity.
//!
//! * [`steer`] solves the two-point problem in closed form.
//! * [`nlp`] picks waypoint velocities with a switching-point program over
//!   piecewise-constant inputs.
//! * [`assemble`] turns a plan into sampled trajectories, either by direct
//!   integration or by re-solving each segment with [`steer`].
//! * [`coverage`] generates lawnmower survey tours and [`baseline`] builds
//!   the minimum-snap comparison trajectory.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dual;
mod optim;
mod rootfind;

pub mod assemble;
pub mod baseline;
pub mod coverage;
pub mod error;
pub mod nlp;
pub mod state;
pub mod steer;

pub use error::{Error, Result};
pub use state::{denormalize_state, denormalize_vec, gravity_shift, normalize, propagate_constant, BoundaryPair, NormalizedProblem, PointState, Vec3};
