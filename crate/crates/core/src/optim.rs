//! Damped Newton for small smooth unconstrained problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonResult {
    pub x: DVector<f64>,
    pub grad: DVector<f64>,
    pub iterations: usize,
}

/// Damped Newton with a Hessian built by forward differences of the
/// gradient. `(H + λI)` is regularized until its Cholesky factor exists;
/// `λ` shrinks after full steps and grows after rejected ones. A stationary
/// point with clearly negative curvature is left along the most negative
/// eigenvector, so saddles such as a collapsed `s²` duration do not stall.
pub(crate) fn newton<F>(f: F, x0: DVector<f64>, opts: &NewtonOptions) -> NewtonResult
where
    F: Fn(&DVector<f64>, &mut DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = DVector::zeros(n);
    let mut fx = f(&x, &mut g);
    let mut gn = DVector::zeros(n);
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut lambda = 0.0f64;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut xp = x.clone();
        for j in 0..n {
            let step = 1e-7 * x[j].abs().max(1.0);
            xp[j] = x[j] + step;
            f(&xp, &mut gn);
            xp[j] = x[j];
            for i in 0..n {
                h[(i, j)] = (gn[i] - g[i]) / step;
            }
        }
        let hs = (&h + h.transpose()) * 0.5;
        if g.amax() < opts.grad_tol {
            match escape_saddle(&f, &hs, &x, fx, &g) {
                Some((xe, fe, ge)) => {
                    x = xe;
                    fx = fe;
                    g = ge;
                    lambda = 0.0;
                    continue;
                }
                None => break,
            }
        }
        let scale = hs.diagonal().amax().max(1e-12);
        let mut accepted = false;
        for _ in 0..60 {
            let mut m = hs.clone();
            for i in 0..n {
                m[(i, i)] += lambda;
            }
            let Some(chol) = m.cholesky() else {
                lambda = (lambda * 4.0).max(1e-10 * scale);
                continue;
            };
            let d = -chol.solve(&g);
            let slope = d.dot(&g);
            let noise = 1e-12 * (1.0 + fx.abs());
            let mut step = 1.0;
            for _ in 0..30 {
                let trial = &x + &d * step;
                let ft = f(&trial, &mut gn);
                let sufficient = ft <= fx + 1e-4 * step * slope;
                let within_noise = ft <= fx + noise && gn.amax() < g.amax();
                if ft.is_finite() && (sufficient || within_noise) {
                    x = trial;
                    fx = ft;
                    g.copy_from(&gn);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if accepted {
                lambda = if step == 1.0 { lambda * 0.1 } else { lambda * 2.0 };
                if lambda < 1e-14 * scale {
                    lambda = 0.0;
                }
                break;
            }
            lambda = (lambda * 10.0).max(1e-8 * scale);
        }
        if !accepted {
            break;
        }
    }
    NewtonResult { x, grad: g, iterations }
}

/// Step along the most negative curvature direction of `h`, if there is one
/// and it lowers `f`.
fn escape_saddle<F>(f: &F, h: &DMatrix<f64>, x: &DVector<f64>, fx: f64, g: &DVector<f64>) -> Option<(DVector<f64>, f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>) -> f64,
{
    let scale = h.diagonal().amax().max(1.0);
    let eig = h.clone().symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let curvature = eig.eigenvalues[k];
    if curvature >= -1e-6 * scale {
        return None;
    }
    let mut d = eig.eigenvectors.column(k).into_owned();
    if d.dot(g) > 0.0 {
        d = -d;
    }
    let mut gt = DVector::zeros(x.len());
    let mut step = 1.0;
    for _ in 0..40 {
        let trial = x + &d * step;
        let ft = f(&trial, &mut gt);
        if ft.is_finite() && ft < fx + 0.25 * curvature * step * step {
            return Some((trial, ft, gt));
        }
        step *= 0.5;
    }
    None
}
