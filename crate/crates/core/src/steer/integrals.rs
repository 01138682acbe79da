//! Closed-form integrals of the unit-norm optimal input
//! `u(t) = (η − ξt) / R(t)`, `R(t) = sqrt(ρ²t² − 2σρt + 1)`.
//!
//! Everything reduces to the three moments
//! `I_m(μ, σ) = ∫₀¹ s^m / sqrt(1 − 2σμs + μ²s²) ds`, `m = 0, 1, 2`,
//! with `μ = ρt`. For `μ ≥ SERIES_LIMIT` they are evaluated from the
//! antiderivatives in `asinh`/logarithm form; below it the antiderivatives
//! cancel catastrophically and the Legendre generating-function series
//! `1/sqrt(1 − 2σx + x²) = Σ Pₙ(σ) xⁿ` is used instead.

use crate::dual::Real;
use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 0.3;
const SERIES_TERMS: usize = 48;

/// Distance of `|σ|` from 1 below which the closed form is treated as singular.
pub const SIGMA_DEGENERACY: f64 = 1e-12;

/// Integrals over `[0, t]` such that
/// `v(t) = v₀ + g·t + V_ξ·ξ + V_η·η` and
/// `r(t) = r₀ + v₀·t + g·t²/2 + X_ξ·ξ + X_η·η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals {
    /// `S(t) = asinh((ρt − σ)/sqrt(1 − σ²))`.
    pub s: f64,
    pub v_xi: f64,
    pub v_eta: f64,
    pub x_xi: f64,
    pub x_eta: f64,
}

/// Coefficients linking the boundary data to `ζ = ξ·t_f` and `η`:
/// `A = a_ζ·ζ + a_η·η`, `B = b_ζ·ζ + b_η·η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCoefficients {
    pub a_zeta: f64,
    pub a_eta: f64,
    pub b_zeta: f64,
    pub b_eta: f64,
    /// `sqrt(μ² − 2μσ + 1) − 1`
    pub a: f64,
    /// `S(t_f) − S(0)`
    pub b: f64,
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || 1.0 - sigma.abs() < SIGMA_DEGENERACY {
        return Err(Error::degenerate(format!(
            "sigma = {sigma} is within {SIGMA_DEGENERACY:e} of ±1; use the collinear or constant-input branch"
        )));
    }
    Ok(())
}

/// `R(1) − 1` without cancellation.
fn a_term<T: Real>(mu: T, sigma: T) -> T {
    let r = (mu * mu - mu * sigma * 2.0 + 1.0).sqrt();
    (mu * mu - mu * sigma * 2.0) / (r + 1.0)
}

/// `S(μ) − S(0)` for `ρ = 1`, picking the branch that avoids cancellation.
fn log_term<T: Real>(mu: T, sigma: T) -> T {
    let r = (mu * mu - mu * sigma * 2.0 + 1.0).sqrt();
    let w = mu - sigma;
    if w.re() >= 0.0 {
        ((w + r) / (-sigma + 1.0)).ln()
    } else {
        ((sigma + 1.0) / (r - w)).ln()
    }
}

/// `[I₀, I₁, I₂]` for `μ ≥ 0`, `|σ| < 1`.
pub(crate) fn moments<T: Real>(mu: T, sigma: T) -> [T; 3] {
    if mu.re() < SERIES_LIMIT {
        let mut acc = [T::cst(0.0); 3];
        let (mut p_prev, mut p) = (T::cst(1.0), sigma);
        let mut pow = T::cst(1.0);
        for n in 0..SERIES_TERMS {
            let pn = if n == 0 { T::cst(1.0) } else { p };
            let term = pn * pow;
            for (m, slot) in acc.iter_mut().enumerate() {
                *slot = *slot + term / ((n + m + 1) as f64);
            }
            if n >= 1 {
                let k = n as f64;
                let next = (sigma * p * (2.0 * k + 1.0) - p_prev * k) / (k + 1.0);
                p_prev = p;
                p = next;
            }
            pow = pow * mu;
        }
        acc
    } else {
        let a = a_term(mu, sigma);
        let b = log_term(mu, sigma);
        let mu2 = mu * mu;
        [
            b / mu,
            (a + sigma * b) / mu2,
            ((mu + sigma * 3.0) * a + mu + (sigma * sigma * 3.0 - 1.0) * b) / (mu2 * mu * 2.0),
        ]
    }
}

pub(crate) fn coefficients_generic<T: Real>(mu: T, sigma: T) -> [T; 4] {
    let [i0, i1, i2] = moments(mu, sigma);
    // a_ζ, a_η, b_ζ, b_η
    [-i2, i1, i1, -i0]
}

pub fn scalar_coefficients(mu: f64, sigma: f64) -> Result<ScalarCoefficients> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    check_sigma(sigma)?;
    let [a_zeta, a_eta, b_zeta, b_eta] = coefficients_generic(mu, sigma);
    let b = if mu < SERIES_LIMIT { -b_eta * mu } else { log_term(mu, sigma) };
    Ok(ScalarCoefficients {
        a_zeta,
        a_eta,
        b_zeta,
        b_eta,
        a: a_term(mu, sigma),
        b,
    })
}

pub fn closed_form_integrals(rho: f64, sigma: f64, t: f64) -> Result<Integrals> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::degenerate(format!(
            "rho = {rho}; the zero-costate case has a constant input"
        )));
    }
    check_sigma(sigma)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    let [i0, i1, i2] = moments(rho * t, sigma);
    let t2 = t * t;
    Ok(Integrals {
        s: ((rho * t - sigma) / (1.0 - sigma * sigma).sqrt()).asinh(),
        v_xi: -t2 * i1,
        v_eta: t * i0,
        x_xi: t2 * t * (i2 - i1),
        x_eta: t2 * (i0 - i1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_interval() {
        let out = closed_form_integrals(1.3, 0.2, 0.0).unwrap();
        assert!(out.s.is_finite());
        assert_eq!([out.v_xi, out.v_eta, out.x_xi, out.x_eta], [0.0; 4]);
    }

    #[test]
    fn unit_rho_zero_sigma() {
        let out = closed_form_integrals(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(out.v_eta, 1f64.asinh(), epsilon = 1e-15);
        assert_relative_eq!(out.v_xi, -(2f64.sqrt() - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn coefficients_at_unit_mu() {
        let c = scalar_coefficients(1.0, 0.0).unwrap();
        assert_relative_eq!(c.a, 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.b, (1.0 + 2f64.sqrt()).ln(), epsilon = 1e-15);
        assert_relative_eq!(c.b_eta, -c.b, epsilon = 1e-15);
        assert_eq!(c.a_eta, c.b_zeta);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for &sigma in &[-0.99, -0.5, 0.0, 0.3, 0.9, 0.999] {
            let lo: [f64; 3] = moments(SERIES_LIMIT * (1.0 - 1e-12), sigma);
            let hi: [f64; 3] = moments(SERIES_LIMIT, sigma);
            for m in 0..3 {
                assert_relative_eq!(lo[m], hi[m], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn near_unit_sigma_below_reversal_is_finite() {
        // σ → 1 with μ < 1 never reaches the input reversal.
        let [i0, ..] = moments(0.5, 1.0 - 1e-9);
        assert_relative_eq!(i0, -(0.5f64).ln() / 0.5, max_relative = 1e-7);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(closed_form_integrals(0.0, 0.1, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(closed_form_integrals(1.0, 1.0 - 1e-13, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(scalar_coefficients(2.0, 1.0), Err(Error::Degenerate(_))));
        assert!(closed_form_integrals(1.0, 0.0, -1.0).is_err());
    }
}
