//! Fixed-step classical Runge–Kutta for `r' = v`, `v' = u(t) + g`.

use crate::V3;

/// Integrates from `t0` to `t1` with `steps` equal steps.
pub fn rk4<U: Fn(f64) -> V3>(r0: V3, v0: V3, g: V3, u: U, t0: f64, t1: f64, steps: usize) -> (V3, V3) {
    let h = (t1 - t0) / steps as f64;
    let mut y = [r0[0], r0[1], r0[2], v0[0], v0[1], v0[2]];
    let deriv = |t: f64, y: &[f64; 6]| {
        let a = u(t);
        [y[3], y[4], y[5], a[0] + g[0], a[1] + g[1], a[2] + g[2]]
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = deriv(t, &y);
        let k2 = deriv(t + 0.5 * h, &std::array::from_fn(|j| y[j] + 0.5 * h * k1[j]));
        let k3 = deriv(t + 0.5 * h, &std::array::from_fn(|j| y[j] + 0.5 * h * k2[j]));
        let k4 = deriv(t + h, &std::array::from_fn(|j| y[j] + h * k3[j]));
        for j in 0..6 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    ([y[0], y[1], y[2]], [y[3], y[4], y[5]])
}

/// Constant acceleration `a` over `dt` split into `steps` substeps, each
/// advanced with the trapezoid rule on position (exact for linear velocity).
pub fn trapezoid_substeps(r0: V3, v0: V3, a: V3, dt: f64, steps: usize) -> (V3, V3) {
    let h = dt / steps as f64;
    let (mut r, mut v) = (r0, v0);
    for _ in 0..steps {
        for j in 0..3 {
            let nv = v[j] + a[j] * h;
            r[j] += 0.5 * (v[j] + nv) * h;
            v[j] = nv;
        }
    }
    (r, v)
}
