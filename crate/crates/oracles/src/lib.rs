//! Reference computations for the test suites. Nothing here shares code
//! with the library under test: quadrature, explicit integration, a dense
//! direct-collocation solver and a few kinematic closed forms.

#![allow(clippy::excessive_precision, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod collocation;
pub mod courses;
pub mod coverage;
pub mod integrate;
pub mod kinematics;
pub mod quad;

pub type V3 = [f64; 3];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}
