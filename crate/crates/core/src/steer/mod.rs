//! Two-point minimum-time steering under gravity.
//!
//! The optimal input has the form `u(t) = Q(t)/‖Q(t)‖` with
//! `Q(t) = η − ξ·t` (normalized units, `‖η‖ = 1`). Writing `μ = ‖ξ‖·t_f`
//! and `σ = ξ·η/‖ξ‖`, the boundary conditions reduce to three scalar
//! equations in `(μ, σ, t_f)`; once those are solved, `ξ` and `η` follow
//! from a 2×2 linear system and the whole trajectory is available in closed
//! form.
//!
//! Two singular families are handled separately: a constant input (`ξ = 0`)
//! and collinear data, where the optimum is a one-dimensional bang-bang
//! profile (`σ = ±1`).

mod degenerate;
mod integrals;
mod solve;

pub use degenerate::{collinear_bang_bang, constant_input_fallback};
pub use integrals::{closed_form_integrals, scalar_coefficients, Integrals, ScalarCoefficients, SIGMA_DEGENERACY};
pub use solve::{solve_two_point, SolveOptions};

use serde::Serialize;

use crate::dual::{Dual3, Real};
use crate::error::{Error, Result};
use crate::state::{propagate, NormalizedProblem, PointState, Vec3};
use integrals::{check_sigma, coefficients_generic};

/// Which closed-form family a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    General,
    /// `ξ = 0`: one constant input direction for the whole segment.
    Constant,
    /// Collinear data: the input flips from `η` to `−η` at `switch_time`.
    BangBang { switch_time: f64 },
}

/// Solver bookkeeping attached to a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SolveReport {
    pub residuals: [f64; 3],
    pub starts: usize,
    pub converged_starts: usize,
}

/// A continuous optimal input segment, stored in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringSolution {
    pub xi: Vec3,
    pub eta: Vec3,
    pub mu: f64,
    pub sigma: f64,
    pub t_f: f64,
    pub boundary: NormalizedProblem,
    pub branch: Branch,
    pub report: SolveReport,
}

impl SteeringSolution {
    pub fn is_degenerate(&self) -> bool {
        !matches!(self.branch, Branch::General)
    }

    pub fn rho(&self) -> f64 {
        self.mu / self.t_f
    }

    /// Input bound of the original problem.
    pub fn scale(&self) -> f64 {
        self.boundary.scale
    }

    fn clamp_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.t_f.max(1.0);
        if !(t >= -slack && t <= self.t_f + slack) {
            return Err(Error::invalid(format!("time {t} outside [0, {}]", self.t_f)));
        }
        Ok(t.clamp(0.0, self.t_f))
    }

    fn q(&self, t: f64) -> Vec3 {
        self.eta - self.xi * t
    }

    /// Normalized Hamiltonian `ξ·v + Q·(u + g)`; constant along an optimal
    /// segment.
    pub fn hamiltonian(&self, t: f64) -> Result<f64> {
        let s = eval_state(self, t)?;
        let u = eval_input(self, t)?;
        let t = self.clamp_time(t)?;
        Ok(self.xi.dot(&s.v) + self.q(t).dot(&(u + self.boundary.g)))
    }

    /// Input in SI units.
    pub fn input_si(&self, t: f64) -> Result<Vec3> {
        Ok(eval_input(self, t)? * self.scale())
    }

    /// State in SI units.
    pub fn state_si(&self, t: f64) -> Result<PointState> {
        Ok(eval_state(self, t)?.scaled(self.scale()))
    }
}

/// Boundary vectors `A = (r₀ − r_f + v_f·t − g·t²/2)/t²` and
/// `B = (v₀ − v_f + g·t)/t` as generic scalars.
fn boundary_vectors<T: Real>(t: T, p: &NormalizedProblem) -> ([T; 3], [T; 3]) {
    let (dr, _) = p.deltas();
    let inv = T::cst(1.0) / t;
    let inv2 = inv * inv;
    let mut a = [T::cst(0.0); 3];
    let mut b = [T::cst(0.0); 3];
    for i in 0..3 {
        a[i] = inv2 * (-dr[i]) + inv * p.end.v[i] - 0.5 * p.g[i];
        b[i] = inv * (p.start.v[i] - p.end.v[i]) + p.g[i];
    }
    (a, b)
}

fn residuals_generic<T: Real>(mu: T, sigma: T, t: T, p: &NormalizedProblem) -> [T; 3] {
    let [az, ae, bz, be] = coefficients_generic(mu, sigma);
    let (a, b) = boundary_vectors(t, p);
    let dot = |x: &[T; 3], y: &[T; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let mu2 = mu * mu;
    let ms = mu * sigma;
    [
        dot(&a, &a) - (az * az * mu2 + ae * ae + az * ae * ms * 2.0),
        dot(&b, &b) - (bz * bz * mu2 + be * be + bz * be * ms * 2.0),
        dot(&a, &b) - (az * bz * mu2 + (az * be + ae * bz) * ms + ae * be),
    ]
}

fn check_unknowns(mu: f64, sigma: f64, t_f: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::degenerate(format!("mu = {mu} must be positive")));
    }
    check_sigma(sigma)?;
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::invalid(format!("t_f = {t_f} must be positive")));
    }
    Ok(())
}

/// The three dot-product identities `A·A`, `B·B`, `A·B` minus their
/// closed-form counterparts. All three vanish at a solution.
pub fn residuals(mu: f64, sigma: f64, t_f: f64, p: &NormalizedProblem) -> Result<[f64; 3]> {
    check_unknowns(mu, sigma, t_f)?;
    Ok(residuals_generic(mu, sigma, t_f, p))
}

/// Residuals and their exact Jacobian with respect to `(μ, σ, t_f)`;
/// `jac[i][j] = ∂res_i/∂x_j`.
pub fn residual_jacobian(mu: f64, sigma: f64, t_f: f64, p: &NormalizedProblem) -> Result<([f64; 3], [[f64; 3]; 3])> {
    check_unknowns(mu, sigma, t_f)?;
    let out = residuals_generic(Dual3::var(mu, 0), Dual3::var(sigma, 1), Dual3::var(t_f, 2), p);
    Ok((out.map(|d| d.re), out.map(|d| d.eps)))
}

/// Residuals multiplied by `t_f⁴`, `t_f²`, `t_f³`. Same roots, but they do not
/// flatten out for long durations, which widens the basins of attraction.
pub(crate) fn scaled_residual_jacobian(mu: f64, sigma: f64, t_f: f64, p: &NormalizedProblem) -> Result<([f64; 3], [[f64; 3]; 3])> {
    check_unknowns(mu, sigma, t_f)?;
    let t = Dual3::var(t_f, 2);
    let t2 = t * t;
    let [r1, r2, r3] = residuals_generic(Dual3::var(mu, 0), Dual3::var(sigma, 1), t, p);
    let out = [r1 * t2 * t2, r2 * t2, r3 * t2 * t];
    Ok((out.map(|d| d.re), out.map(|d| d.eps)))
}

/// Recovers `ξ` and `η` from a solved `(μ, σ, t_f)` by inverting
/// `[A; B] = [[a_ζ, a_η], [b_ζ, b_η]]·[ζ; η]` componentwise.
pub fn recover_vectors(mu: f64, sigma: f64, t_f: f64, p: &NormalizedProblem) -> Result<(Vec3, Vec3)> {
    check_unknowns(mu, sigma, t_f)?;
    let c = scalar_coefficients(mu, sigma)?;
    let det = c.a_zeta * c.b_eta - c.a_eta * c.b_zeta;
    let scale = c.a_zeta.abs().max(c.a_eta.abs()) * c.b_zeta.abs().max(c.b_eta.abs());
    if !(det.abs() > 1e-14 * scale) {
        return Err(Error::degenerate("coefficient matrix is singular; boundary data are collinear"));
    }
    let (a, b) = boundary_vectors(t_f, p);
    let (a, b) = (Vec3::from(a), Vec3::from(b));
    let zeta = (a * c.b_eta - b * c.a_eta) / det;
    let eta = (b * c.a_zeta - a * c.b_zeta) / det;
    if (eta.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::degenerate(format!(
            "recovered eta has norm {}, expected 1; (mu, sigma, t_f) is not a solution",
            eta.norm()
        )));
    }
    Ok((zeta / t_f, eta))
}

/// Unit-norm optimal input at local time `t` (normalized units).
pub fn eval_input(sol: &SteeringSolution, t: f64) -> Result<Vec3> {
    let t = sol.clamp_time(t)?;
    Ok(match sol.branch {
        Branch::General => {
            let q = sol.q(t);
            q / q.norm()
        }
        Branch::Constant => sol.eta,
        Branch::BangBang { switch_time } => {
            if t <= switch_time {
                sol.eta
            } else {
                -sol.eta
            }
        }
    })
}

/// State at local time `t` (normalized units), from the closed-form integrals.
pub fn eval_state(sol: &SteeringSolution, t: f64) -> Result<PointState> {
    let t = sol.clamp_time(t)?;
    let p = &sol.boundary;
    let s0 = p.start;
    Ok(match sol.branch {
        Branch::General => {
            let k = closed_form_integrals(sol.rho(), sol.sigma, t)?;
            PointState {
                r: s0.r + s0.v * t + p.g * (0.5 * t * t) + sol.xi * k.x_xi + sol.eta * k.x_eta,
                v: s0.v + p.g * t + sol.xi * k.v_xi + sol.eta * k.v_eta,
            }
        }
        Branch::Constant => propagate(&s0, &(sol.eta + p.g), t),
        Branch::BangBang { switch_time } => {
            if t <= switch_time {
                propagate(&s0, &(sol.eta + p.g), t)
            } else {
                let mid = propagate(&s0, &(sol.eta + p.g), switch_time);
                propagate(&mid, &(p.g - sol.eta), t - switch_time)
            }
        }
    })
}
