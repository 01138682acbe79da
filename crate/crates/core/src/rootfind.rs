//! Powell dogleg trust-region iteration for square 3×3 nonlinear systems,
//! with a Levenberg–Marquardt pass as fallback when the dogleg stalls.

use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy)]
pub(crate) struct RootOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest step allowed in the unknowns.
    pub max_radius: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RootResult {
    pub x: Vector3<f64>,
    pub f: Vector3<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl RootResult {
    pub fn residual(&self) -> f64 {
        self.f.amax()
    }
}

/// `system` returns the residual and its Jacobian, or `None` outside the
/// domain of definition.
pub(crate) fn solve<F>(system: F, x0: Vector3<f64>, opts: &RootOptions) -> RootResult
where
    F: Fn(&Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)>,
{
    let Some((f0, j0)) = system(&x0) else {
        return RootResult {
            x: x0,
            f: Vector3::repeat(f64::INFINITY),
            converged: false,
            iterations: 0,
        };
    };
    let mut best = dogleg(&system, x0, f0, j0, opts);
    if !best.converged {
        if let Some((f, j)) = system(&best.x) {
            let lm = levenberg_marquardt(&system, best.x, f, j, opts);
            if lm.residual() < best.residual() {
                best = RootResult {
                    iterations: best.iterations + lm.iterations,
                    ..lm
                };
            }
        }
    }
    best
}

fn dogleg<F>(system: &F, mut x: Vector3<f64>, mut f: Vector3<f64>, mut jac: Matrix3<f64>, opts: &RootOptions) -> RootResult
where
    F: Fn(&Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)>,
{
    let mut radius = opts.max_radius.min(1.0);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if f.amax() < opts.tol {
            return RootResult { x, f, converged: true, iterations };
        }
        iterations += 1;

        let grad = jac.transpose() * f;
        let newton = jac.lu().solve(&-f);
        let jg = jac * grad;
        let cauchy = if jg.norm_squared() > 0.0 {
            -grad * (grad.norm_squared() / jg.norm_squared())
        } else {
            Vector3::zeros()
        };
        let step = match newton {
            Some(n) if n.iter().all(|c| c.is_finite()) && n.norm() <= radius => n,
            Some(n) if n.iter().all(|c| c.is_finite()) => {
                if cauchy.norm() >= radius {
                    cauchy * (radius / cauchy.norm())
                } else {
                    let d = n - cauchy;
                    let (a, b, c) = (d.norm_squared(), 2.0 * cauchy.dot(&d), cauchy.norm_squared() - radius * radius);
                    let tau = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
                    cauchy + d * tau
                }
            }
            _ if cauchy.norm() > 0.0 => cauchy * (radius / cauchy.norm()).min(1.0),
            _ => break,
        };

        let predicted = f.norm_squared() - (f + jac * step).norm_squared();
        let trial = x + step;
        match system(&trial) {
            Some((ft, jt)) if ft.iter().all(|c| c.is_finite()) => {
                let actual = f.norm_squared() - ft.norm_squared();
                let ratio = if predicted > 0.0 { actual / predicted } else { -1.0 };
                if ratio < 0.25 {
                    radius = 0.25 * step.norm();
                } else if ratio > 0.75 && step.norm() > 0.99 * radius {
                    radius = (2.0 * radius).min(opts.max_radius);
                }
                if ratio > 1e-4 || (actual > 0.0 && ft.amax() < opts.tol) {
                    x = trial;
                    f = ft;
                    jac = jt;
                }
            }
            _ => radius = 0.25 * step.norm(),
        }
        if radius < 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let converged = f.amax() < opts.tol;
    RootResult { x, f, converged, iterations }
}

fn levenberg_marquardt<F>(system: &F, mut x: Vector3<f64>, mut f: Vector3<f64>, mut jac: Matrix3<f64>, opts: &RootOptions) -> RootResult
where
    F: Fn(&Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)>,
{
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iter && f.amax() >= opts.tol {
        iterations += 1;
        let jtj = jac.transpose() * jac;
        let grad = jac.transpose() * f;
        let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal().map(|d| lambda * d.max(1e-12)));
        let Some(mut step) = damped.cholesky().map(|c| c.solve(&-grad)) else {
            lambda *= 10.0;
            continue;
        };
        let n = step.norm();
        if n > opts.max_radius {
            step *= opts.max_radius / n;
        }
        match system(&(x + step)) {
            Some((ft, jt)) if ft.norm_squared() < f.norm_squared() => {
                x += step;
                f = ft;
                jac = jt;
                lambda = (lambda * 0.3).max(1e-12);
            }
            _ => {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
            }
        }
    }
    let converged = f.amax() < opts.tol;
    RootResult { x, f, converged, iterations }
}
