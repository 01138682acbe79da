use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optim::{self, NewtonOptions};
use crate::state::Vec3;

use super::{angles, direction, initial_guess, NlpDiagnostics, NlpOptions, NlpProblem, SwitchingPlan};

/// Forward pass through all pieces: start time, start velocity and
/// acceleration of every piece, plus arrival data at each waypoint.
struct Pass {
    d: Vec<f64>,
    u: Vec<Vec3>,
    t: Vec<f64>,
    v: Vec<Vec3>,
    arrive_t: Vec<f64>,
    arrive_r: Vec<Vec3>,
    arrive_v: Vec<Vec3>,
}

impl NlpProblem {
    fn pass(&self, x: &[f64]) -> Pass {
        let n = self.n_pieces();
        let per = self.pieces_per_segment();
        let mut p = Pass {
            d: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            t: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            arrive_t: Vec::with_capacity(self.segments()),
            arrive_r: Vec::with_capacity(self.segments()),
            arrive_v: Vec::with_capacity(self.segments()),
        };
        let (mut t, mut r, mut v) = (0.0, self.waypoints[0], self.v_start);
        for k in 0..n {
            let d = x[3 * k] * x[3 * k];
            let u = direction(x[3 * k + 1], x[3 * k + 2]);
            let a = u + self.gn;
            p.d.push(d);
            p.u.push(u);
            p.t.push(t);
            p.v.push(v);
            r += v * d + a * (0.5 * d * d);
            v += a * d;
            t += d;
            if (k + 1) % per == 0 {
                p.arrive_t.push(t);
                p.arrive_r.push(r);
                p.arrive_v.push(v);
            }
        }
        p
    }

    fn equality(&self, p: &Pass) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.n_equality());
        for (r, w) in p.arrive_r.iter().zip(&self.waypoints[1..]) {
            c.extend((r - w).iter());
        }
        if let Some(vf) = self.v_end {
            c.extend((p.arrive_v.last().expect("at least one segment") - vf).iter());
        }
        c
    }

    /// `‖v‖² − cap² ≤ 0` at every arrival.
    fn inequality(&self, p: &Pass) -> Vec<f64> {
        match self.speed_cap {
            Some(cap) => p.arrive_v.iter().map(|v| v.norm_squared() - cap * cap).collect(),
            None => Vec::new(),
        }
    }

    /// Augmented Lagrangian and its gradient.
    fn augmented(&self, x: &[f64], lambda: &[f64], mu: &[f64], rho: f64, grad: &mut [f64]) -> f64 {
        let p = self.pass(x);
        let c = self.equality(&p);
        let h = self.inequality(&p);
        let m = self.segments();
        let per = self.pieces_per_segment();

        let mut value: f64 = p.d.iter().sum();
        let mut pos_w = vec![Vec3::zeros(); m];
        let mut vel_w = vec![Vec3::zeros(); m];
        for (i, (ci, li)) in c.iter().zip(lambda).enumerate() {
            value += li * ci + 0.5 * rho * ci * ci;
            let w = li + rho * ci;
            if i < 3 * m {
                pos_w[i / 3][i % 3] = w;
            } else {
                vel_w[m - 1][i - 3 * m] += w;
            }
        }
        for (n, (hn, mn)) in h.iter().zip(mu).enumerate() {
            let q = (mn + rho * hn).max(0.0);
            value += (q * q - mn * mn) / (2.0 * rho);
            vel_w[n] += p.arrive_v[n] * (2.0 * q);
        }

        // Suffix sums over waypoints reached after each segment.
        let (mut sp, mut spt, mut sv) = (Vec3::zeros(), Vec3::zeros(), Vec3::zeros());
        for seg in (0..m).rev() {
            sp += pos_w[seg];
            spt += pos_w[seg] * p.arrive_t[seg];
            sv += vel_w[seg];
            for k in seg * per..(seg + 1) * per {
                let (d, tk) = (p.d[k], p.t[k]);
                let a = p.u[k] + self.gn;
                let lever = spt - sp * tk;
                let gd = 1.0 + sp.dot(&p.v[k]) + lever.dot(&a) + sv.dot(&a);
                let gu = lever * d - sp * (0.5 * d * d) + sv * d;
                let (az, el) = (x[3 * k + 1], x[3 * k + 2]);
                let (sa, ca) = az.sin_cos();
                let (se, ce) = el.sin_cos();
                let du_daz = Vec3::new(-ce * sa, ce * ca, 0.0);
                let du_del = Vec3::new(-se * ca, -se * sa, ce);
                grad[3 * k] = 2.0 * x[3 * k] * gd;
                grad[3 * k + 1] = gu.dot(&du_daz);
                grad[3 * k + 2] = gu.dot(&du_del);
            }
        }
        value
    }
}

struct Outcome {
    index: usize,
    x: Vec<f64>,
    total: f64,
    violation: f64,
    cap_excess: f64,
    stationarity: f64,
    outer: usize,
}

fn run_start(problem: &NlpProblem, index: usize, x0: Vec<f64>, opts: &NlpOptions) -> Outcome {
    let length = problem.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
    // Aim well inside the tolerance so totals are not bought with violation.
    let tol = 1e-2 * opts.position_tol / problem.u_max;
    let mut rho = opts.penalty_init / (length * length);
    let mut lambda = vec![0.0; problem.n_equality()];
    let mut mu = vec![0.0; problem.n_inequality()];
    let mut x = DVector::from_vec(x0);
    let mut inner_tol = 1e-3f64.max(opts.stationarity_tol);
    let mut last = f64::INFINITY;
    let mut stationarity = f64::INFINITY;
    let mut outer = 0;
    let guess = initial_guess(problem);
    let per = 3 * problem.pieces_per_segment();
    let measure = |x: &DVector<f64>| {
        let p = problem.pass(x.as_slice());
        let eq = problem.equality(&p).iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cap = match problem.speed_cap {
            Some(cap) => p.arrive_v.iter().map(|v| v.norm() - cap).fold(0.0, f64::max),
            None => 0.0,
        };
        (p, eq, cap)
    };
    while outer < opts.max_iter {
        outer += 1;
        let result = optim::newton(
            |x, g| problem.augmented(x.as_slice(), &lambda, &mu, rho, g.as_mut_slice()),
            x,
            &NewtonOptions {
                grad_tol: inner_tol,
                max_iter: opts.inner_iter,
            },
        );
        x = result.x;
        stationarity = result.grad.amax();
        let (p, eq, cap) = measure(&x);
        let c = problem.equality(&p);
        let h = problem.inequality(&p);
        for (l, ci) in lambda.iter_mut().zip(&c) {
            *l += rho * ci;
        }
        for (m, hn) in mu.iter_mut().zip(&h) {
            *m = (*m + rho * hn).max(0.0);
        }
        let violation = eq.max(cap);
        log::trace!("start {index} outer {outer}: rho {rho:.1e} violation {violation:.2e} stationarity {stationarity:.2e} after {} steps", result.iterations);
        if violation < tol && stationarity < opts.stationarity_tol {
            break;
        }
        // A segment squeezed to zero duration cannot reach its waypoint, yet
        // `d = s² = 0` can be a local minimum of the augmented objective.
        // Restart such segments from the heuristic guess.
        for (xs, gs) in x.as_mut_slice().chunks_mut(per).zip(guess.chunks(per)) {
            let t: f64 = xs.iter().step_by(3).map(|s| s * s).sum();
            let t0: f64 = gs.iter().step_by(3).map(|s| s * s).sum();
            if violation >= tol && t < 1e-9 * t0 {
                log::debug!("start {index}: reviving a collapsed segment");
                xs.copy_from_slice(gs);
            }
        }
        if violation > 0.25 * last && violation >= tol {
            rho = (rho * opts.penalty_growth).min(opts.penalty_max);
        }
        last = violation;
        inner_tol = (inner_tol * 0.1).max(opts.stationarity_tol);
    }
    let (p, eq, cap) = measure(&x);
    Outcome {
        index,
        total: p.d.iter().sum(),
        x: x.as_slice().to_vec(),
        violation: eq * problem.u_max,
        cap_excess: cap * problem.u_max,
        stationarity,
        outer,
    }
}

/// Perturbed copies of `base`; the first start is `base` itself.
fn starts(problem: &NlpProblem, base: Vec<f64>, opts: &NlpOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![base.clone()];
    for _ in 1..opts.starts {
        let mut x = base.clone();
        for k in 0..problem.n_pieces() {
            x[3 * k] *= (0.5 * rng.random_range(-0.5..0.5f64)).exp();
            x[3 * k + 1] += rng.random_range(-0.6..0.6);
            x[3 * k + 2] += rng.random_range(-0.4..0.4);
        }
        out.push(x);
    }
    out
}

/// Decision vector reproducing a solved plan.
fn plan_vector(plan: &SwitchingPlan) -> Vec<f64> {
    plan.dt
        .iter()
        .zip(&plan.dirs)
        .flat_map(|(d, u)| {
            let (az, el) = angles(u);
            [d.sqrt(), az, el]
        })
        .collect()
}

/// Start for `problem` built from a one-switch solution: the first piece of
/// each segment is split evenly over the first half of the pieces and the
/// second over the rest, which reproduces the same trajectory exactly.
fn split_start(problem: &NlpProblem, coarse: &[f64]) -> Vec<f64> {
    let per = problem.pieces_per_segment();
    let head = per.div_ceil(2);
    let mut x = Vec::with_capacity(problem.n_vars());
    for seg in coarse.chunks(6) {
        for j in 0..per {
            let (piece, parts) = if j < head { (&seg[..3], head) } else { (&seg[3..], per - head) };
            x.extend([piece[0] / (parts as f64).sqrt(), piece[1], piece[2]]);
        }
    }
    x
}

/// Solves the program from `opts.starts` seeded starts and returns the
/// fastest plan that meets the waypoint tolerance.
pub fn solve_nlp(problem: &NlpProblem, opts: &NlpOptions) -> Result<SwitchingPlan> {
    opts.validate()?;
    if opts.switch_points != problem.switch_points {
        return Err(Error::invalid("options and problem disagree on the number of switching points"));
    }
    if let (Some(cap), Some(vf)) = (problem.speed_cap, problem.v_end) {
        if vf.norm() > cap {
            return Err(Error::Infeasible(format!(
                "final speed {} exceeds the waypoint speed cap {}",
                vf.norm() * problem.u_max,
                cap * problem.u_max
            )));
        }
    }
    let guess = initial_guess(problem);
    let guess_time: f64 = guess.chunks(3).map(|c| c[0] * c[0]).sum();
    // More switching points only enlarge the input class, so the one-switch
    // optimum is a feasible and usually close start.
    let base = if problem.switch_points > 1 {
        let coarse_opts = NlpOptions { switch_points: 1, ..*opts };
        let coarse = NlpProblem {
            switch_points: 1,
            ..problem.clone()
        };
        match solve_nlp(&coarse, &coarse_opts) {
            Ok(plan) => split_start(problem, &plan_vector(&plan)),
            Err(e) => {
                log::debug!("one-switch warm start failed ({e}); using the heuristic guess");
                guess
            }
        }
    } else {
        guess
    };
    let x0 = starts(problem, base, opts);
    let outcomes: Vec<Outcome> = x0
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| run_start(problem, i, x, opts))
        .collect();

    let feasible = |o: &&Outcome| o.violation < opts.position_tol && o.cap_excess < opts.position_tol;
    let feasible_starts = outcomes.iter().filter(feasible).count();
    let Some(best) = outcomes
        .iter()
        .filter(feasible)
        .min_by(|a, b| a.total.total_cmp(&b.total).then(a.index.cmp(&b.index)))
    else {
        let closest = outcomes
            .iter()
            .min_by(|a, b| a.violation.max(a.cap_excess).total_cmp(&b.violation.max(b.cap_excess)))
            .expect("at least one start");
        if closest.cap_excess >= opts.position_tol && closest.violation < opts.position_tol {
            return Err(Error::Infeasible(format!(
                "waypoint speed cap exceeded by {:.3e} m/s in every start",
                closest.cap_excess
            )));
        }
        return Err(Error::Convergence {
            context: format!("waypoint program, {} starts", outcomes.len()),
            best_residual: closest.violation.max(closest.cap_excess),
        });
    };
    log::debug!(
        "waypoint program: {feasible_starts}/{} starts feasible, best total {:.6} s",
        outcomes.len(),
        best.total
    );
    Ok(extract(problem, best, guess_time, feasible_starts, outcomes.len()))
}

fn extract(problem: &NlpProblem, best: &Outcome, guess_time: f64, feasible_starts: usize, starts: usize) -> SwitchingPlan {
    let p = problem.pass(&best.x);
    let scale = problem.u_max;
    let collapse = 1e-9 * best.total.max(1.0);
    let mut waypoint_velocities = vec![problem.path.v_start];
    waypoint_velocities.extend(p.arrive_v.iter().map(|v| v * scale));
    SwitchingPlan {
        switch_points: problem.switch_points,
        dt: p.d.clone(),
        dirs: p.u.clone(),
        waypoint_velocities,
        total_time: p.d.iter().sum(),
        waypoints: problem.path.waypoints.clone(),
        u_max: scale,
        g: problem.g,
        diagnostics: NlpDiagnostics {
            max_violation: best.violation,
            cap_excess: best.cap_excess.max(0.0),
            stationarity: best.stationarity,
            outer_iterations: best.outer,
            starts,
            feasible_starts,
            guess_time,
            collapsed_pieces: p.d.iter().enumerate().filter(|(_, d)| **d <= collapse).map(|(i, _)| i).collect(),
            dropped_segments: problem.dropped_segments.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::{build_problem, WaypointPath};

    fn gradient_check(problem: &NlpProblem) {
        let mut x = initial_guess(problem);
        for (i, v) in x.iter_mut().enumerate() {
            *v += 0.05 * ((i * 7 % 11) as f64 / 11.0 - 0.5);
        }
        let lambda: Vec<f64> = (0..problem.n_equality()).map(|i| 0.3 - 0.1 * i as f64).collect();
        let mu: Vec<f64> = (0..problem.n_inequality()).map(|i| 0.2 * i as f64).collect();
        let mut g = vec![0.0; x.len()];
        problem.augmented(&x, &lambda, &mu, 7.0, &mut g);
        let mut scratch = g.clone();
        for i in 0..x.len() {
            let (mut hi, mut lo) = (x.clone(), x.clone());
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            let fd = (problem.augmented(&hi, &lambda, &mu, 7.0, &mut scratch) - problem.augmented(&lo, &lambda, &mu, 7.0, &mut scratch)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "variable {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let path = WaypointPath::new(
            vec![Vec3::zeros(), Vec3::new(2.0, 1.0, 0.0), Vec3::new(3.0, -1.0, 1.0), Vec3::new(1.0, -2.0, 0.5)],
            Vec3::new(0.5, 0.0, 0.0),
            Some(Vec3::new(0.0, 0.3, 0.0)),
        )
        .unwrap()
        .with_speed_cap(0.4)
        .unwrap();
        for m in [1, 3] {
            let opts = NlpOptions {
                switch_points: m,
                ..NlpOptions::default()
            };
            gradient_check(&build_problem(&path, 2.0, &Vec3::new(0.0, 0.0, -1.5), &opts).unwrap());
        }
    }

    #[test]
    fn rest_to_rest_unit_line() {
        let path = WaypointPath::rest_to_rest(vec![Vec3::zeros(), Vec3::x()]).unwrap();
        let opts = NlpOptions::default();
        let plan = solve_nlp(&build_problem(&path, 1.0, &Vec3::zeros(), &opts).unwrap(), &opts).unwrap();
        assert!((plan.total_time - 2.0).abs() < 1e-6, "{plan:?}");
        assert!((plan.dt[0] - 1.0).abs() < 1e-6);
    }
}
