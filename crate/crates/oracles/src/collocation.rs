//! Dense direct-collocation reference for minimum-time flight through
//! waypoints. Each segment is split into `pieces` equal sub-intervals with
//! a constant unit input on each; the input direction is `w/‖w‖` for a free
//! vector `w` and the segment duration is `exp(s)`. The waypoint arrival
//! constraints are enforced with an augmented Lagrangian whose inner problems
//! are solved by L-BFGS with a hand-written adjoint gradient.

use crate::{add, dot, norm, scale, sub, V3};

#[derive(Debug, Clone)]
pub struct Problem {
    pub waypoints: Vec<V3>,
    pub v_start: V3,
    pub v_end: Option<V3>,
    pub g: V3,
    pub u_max: f64,
    pub pieces: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub segment_times: Vec<f64>,
    pub total_time: f64,
    /// Largest constraint violation, normalized units.
    pub violation: f64,
    /// Arrival velocity at every waypoint after the first, SI units.
    pub velocities: Vec<V3>,
}

struct Scaled {
    w: Vec<V3>,
    v0: V3,
    vf: Option<V3>,
    g: V3,
    k: usize,
}

impl Scaled {
    fn segments(&self) -> usize {
        self.w.len() - 1
    }

    fn n_constraints(&self) -> usize {
        3 * self.segments() + if self.vf.is_some() { 3 } else { 0 }
    }

    fn unit(&self, x: &[f64], j: usize) -> (V3, f64) {
        let o = self.segments() + 3 * j;
        let w = [x[o], x[o + 1], x[o + 2]];
        let n = norm(w);
        (scale(w, 1.0 / n), n)
    }

    /// Constraint values; also returns the states at the start of every piece.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<(V3, V3)>) {
        let mut c = Vec::with_capacity(self.n_constraints());
        let mut states = Vec::with_capacity(self.segments() * self.k);
        let (mut r, mut v) = (self.w[0], self.v0);
        for i in 0..self.segments() {
            let h = x[i].exp() / self.k as f64;
            for p in 0..self.k {
                states.push((r, v));
                let a = add(self.unit(x, i * self.k + p).0, self.g);
                r = add(add(r, scale(v, h)), scale(a, 0.5 * h * h));
                v = add(v, scale(a, h));
            }
            c.extend(sub(r, self.w[i + 1]));
        }
        if let Some(vf) = self.vf {
            c.extend(sub(v, vf));
        }
        (c, states)
    }

    /// Augmented Lagrangian value and gradient.
    fn lagrangian(&self, x: &[f64], lambda: &[f64], rho: f64, grad: &mut [f64]) -> f64 {
        let (c, states) = self.forward(x);
        let m = self.segments();
        let mut value = 0.0;
        for i in 0..m {
            value += x[i].exp();
        }
        let weight: Vec<f64> = c.iter().zip(lambda).map(|(ci, li)| li + rho * ci).collect();
        for (ci, li) in c.iter().zip(lambda) {
            value += li * ci + 0.5 * rho * ci * ci;
        }

        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut lr = [0.0; 3];
        let mut lv = if self.vf.is_some() { [weight[3 * m], weight[3 * m + 1], weight[3 * m + 2]] } else { [0.0; 3] };
        for i in (0..m).rev() {
            lr = add(lr, [weight[3 * i], weight[3 * i + 1], weight[3 * i + 2]]);
            let h = x[i].exp() / self.k as f64;
            let mut dh = 0.0;
            for p in (0..self.k).rev() {
                let j = i * self.k + p;
                let (_, v) = states[j];
                let (u, wn) = self.unit(x, j);
                let a = add(u, self.g);
                let ga = add(scale(lr, 0.5 * h * h), scale(lv, h));
                dh += dot(lr, add(v, scale(a, h))) + dot(lv, a);
                let gu = scale(sub(ga, scale(u, dot(u, ga))), 1.0 / wn);
                let o = m + 3 * j;
                grad[o..o + 3].copy_from_slice(&gu);
                lv = add(lv, scale(lr, h));
            }
            grad[i] = x[i].exp() + dh * h;
        }
        value
    }
}

fn lbfgs<F: Fn(&[f64], &mut [f64]) -> f64>(f: F, x: &mut [f64], tol: f64, max_iter: usize) {
    const MEMORY: usize = 20;
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    for _ in 0..max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol {
            break;
        }
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * s.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.last() {
            let gamma = s.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / y.iter().map(|v| v * v).sum::<f64>();
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * y.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut step = if hist.is_empty() { 1e-2 / d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300) } else { 1.0 };
        let mut accepted = false;
        for _ in 0..60 {
            xn.iter_mut().zip(x.iter().zip(&d)).for_each(|(o, (xi, di))| *o = xi + step * di);
            let fnew = f(&xn, &mut gn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = true;
                let s: Vec<f64> = xn.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                if sy > 1e-14 * s.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt() {
                    if hist.len() == MEMORY {
                        hist.remove(0);
                    }
                    hist.push((s, y, 1.0 / sy));
                }
                x.copy_from_slice(&xn);
                g.copy_from_slice(&gn);
                fx = fnew;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if hist.is_empty() {
                break;
            }
            hist.clear();
        }
    }
}

/// Rest-to-rest guess along each chord with gravity compensated, so that the
/// net acceleration is along the chord in both phases.
fn initial_guess(p: &Scaled) -> Vec<f64> {
    let m = p.segments();
    let mut x = vec![0.0; m + 3 * m * p.k];
    for i in 0..m {
        let chord = sub(p.w[i + 1], p.w[i]);
        let d = norm(chord);
        let e = scale(chord, 1.0 / d);
        let eg = dot(e, p.g);
        let root = (eg * eg - dot(p.g, p.g) + 1.0).sqrt();
        let (c1, c2) = (root + eg, root - eg);
        let t1 = (2.0 * d * c2 / (c1 * (c1 + c2))).sqrt();
        let t2 = t1 * c1 / c2;
        let total = t1 + t2;
        x[i] = total.ln();
        for q in 0..p.k {
            let mid = (q as f64 + 0.5) / p.k as f64 * total;
            let u = if mid < t1 { sub(scale(e, c1), p.g) } else { sub(scale(e, -c2), p.g) };
            // Small deterministic tilt so exactly collinear data do not sit on
            // a saddle where the transverse gradient vanishes.
            let j = (i * p.k + q) as f64;
            let u = add(u, scale([(1.3 * j).sin(), (2.9 * j + 1.0).sin(), (0.7 * j + 2.0).sin()], 1e-3));
            let o = m + 3 * (i * p.k + q);
            x[o..o + 3].copy_from_slice(&u);
        }
    }
    x
}

/// Copies a solution onto a mesh with `k` pieces per segment, taking each
/// new piece's direction from the old piece containing its midpoint.
fn refine(coarse: &Scaled, x: &[f64], k: usize) -> Vec<f64> {
    let m = coarse.segments();
    let mut out = vec![0.0; m + 3 * m * k];
    out[..m].copy_from_slice(&x[..m]);
    for i in 0..m {
        for q in 0..k {
            let old = ((q as f64 + 0.5) / k as f64 * coarse.k as f64) as usize;
            let u = coarse.unit(x, i * coarse.k + old.min(coarse.k - 1)).0;
            let o = m + 3 * (i * k + q);
            out[o..o + 3].copy_from_slice(&u);
        }
    }
    out
}

fn augmented_lagrangian(p: &Scaled, x: &mut [f64], lambda: &mut [f64], rho: &mut f64, final_tol: f64) {
    let mut last_violation = f64::INFINITY;
    let mut inner_tol = 1e-3;
    for _ in 0..40 {
        lbfgs(|x, g| p.lagrangian(x, lambda, *rho, g), x, inner_tol, 5_000);
        let (c, _) = p.forward(x);
        let violation = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        lambda.iter_mut().zip(&c).for_each(|(l, ci)| *l += *rho * ci);
        if violation < final_tol && inner_tol <= 1e-5 {
            break;
        }
        if violation > 0.25 * last_violation && violation > final_tol {
            *rho = (*rho * 10.0).min(1e8);
        }
        last_violation = violation;
        inner_tol = (inner_tol * 0.1).max(1e-6);
    }
}

pub fn solve(problem: &Problem) -> Solution {
    let s = 1.0 / problem.u_max;
    let mut p = Scaled {
        w: problem.waypoints.iter().map(|w| scale(*w, s)).collect(),
        v0: scale(problem.v_start, s),
        vf: problem.v_end.map(|v| scale(v, s)),
        g: scale(problem.g, s),
        k: problem.pieces,
    };
    // Solve on successively finer meshes, ending at the requested one.
    let mut meshes = vec![problem.pieces];
    while *meshes.last().unwrap() > 40 {
        let k = meshes.last().unwrap().div_ceil(2);
        meshes.push(k);
    }
    meshes.reverse();
    p.k = meshes[0];
    let mut x = initial_guess(&p);
    let mut lambda = vec![0.0; p.n_constraints()];
    // Start with the penalty dominating the objective; a weak penalty lets
    // the durations collapse towards zero where the log-parameterization
    // has no gradient left to recover.
    let length = p.w.windows(2).map(|w| norm(sub(w[1], w[0]))).fold(0.0, f64::max);
    let mut rho = 100.0 / (length * length);
    for (level, &k) in meshes.iter().enumerate() {
        if k != p.k {
            x = refine(&p, &x, k);
            p.k = k;
        }
        let tol = if level + 1 == meshes.len() { 1e-8 } else { 1e-5 };
        augmented_lagrangian(&p, &mut x, &mut lambda, &mut rho, tol);
    }
    let (c, states) = p.forward(&x);
    let m = p.segments();
    let segment_times: Vec<f64> = (0..m).map(|i| x[i].exp()).collect();
    let velocities = (0..m)
        .map(|i| {
            let j = (i + 1) * p.k - 1;
            let h = segment_times[i] / p.k as f64;
            let a = add(p.unit(&x, j).0, p.g);
            scale(add(states[j].1, scale(a, h)), problem.u_max)
        })
        .collect();
    Solution {
        total_time: segment_times.iter().sum(),
        segment_times,
        violation: c.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        velocities,
    }
}
