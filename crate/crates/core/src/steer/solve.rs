use nalgebra::{Matrix3, Vector3};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rootfind::{self, RootOptions};
use crate::state::{normalize, BoundaryPair, NormalizedProblem};

use super::degenerate::{collinear_normalized, constant_normalized, velocity_lower_bound};
use super::{eval_state, recover_vectors, residual_jacobian, scaled_residual_jacobian, Branch, SolveReport, SteeringSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Every residual must drop below this (normalized units).
    pub residual_tol: f64,
    /// Number of multi-start points.
    pub max_restarts: usize,
    pub seed: u64,
    /// Upper end of the sampled duration range; defaults to the duration of
    /// a brake / travel / accelerate strategy that is always feasible.
    pub t_f_upper: Option<f64>,
    pub mu_max: f64,
    pub mu_min: f64,
    /// Starts keep `|σ| ≤ 1 − sigma_margin`, spread uniformly in `atanh σ`.
    pub sigma_margin: f64,
    pub max_iter: usize,
    /// Optional extra start `(μ, σ, t_f)`, tried first.
    pub hint: Option<[f64; 3]>,
    /// Largest accepted end-state miss (normalized units).
    pub boundary_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-11,
            max_restarts: 32,
            seed: 0,
            t_f_upper: None,
            mu_max: 50.0,
            mu_min: 1e-2,
            sigma_margin: 1e-3,
            max_iter: 200,
            hint: None,
            boundary_tol: 1e-6,
        }
    }
}

/// Duration of a feasible brake / rest-to-rest / accelerate manoeuvre using
/// net acceleration `1 − ‖g‖` in every phase.
fn strategy_upper_bound(p: &NormalizedProblem) -> f64 {
    let a = 1.0 - p.g.norm();
    let (v0, vf) = (p.start.v, p.end.v);
    let brake_end = p.start.r + v0 * (v0.norm() / (2.0 * a));
    let accel_start = p.end.r - vf * (vf.norm() / (2.0 * a));
    let travel = (accel_start - brake_end).norm();
    (v0.norm() + vf.norm()) / a + 2.0 * (travel / a).sqrt()
}

fn latin_hypercube(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: Vec<Vec<usize>> = (0..3).map(|_| (0..n).collect()).collect();
    for s in strata.iter_mut() {
        s.shuffle(&mut rng);
    }
    (0..n)
        .map(|i| {
            let mut u = [0.0; 3];
            for (d, s) in strata.iter().enumerate() {
                u[d] = (s[i] as f64 + rng.random::<f64>()) / n as f64;
            }
            u
        })
        .collect()
}

const T_CAP_FACTOR: f64 = 4.0;

struct Candidate {
    index: usize,
    solution: Option<SteeringSolution>,
    residual: f64,
    last: [f64; 3],
}

/// Root solve in log/atanh coordinates so the bounds `μ > 0`, `|σ| < 1`,
/// `t_f > 0` hold automatically.
fn solve_from(p: &NormalizedProblem, start: [f64; 3], t_range: (f64, f64), opts: &SolveOptions) -> (Option<[f64; 3]>, [f64; 3], f64, [f64; 3]) {
    let to_x = |y: &Vector3<f64>| [y[0].exp(), y[1].tanh(), y[2].exp()];
    let system = |scaled: bool| {
        move |y: &Vector3<f64>| {
            let x = to_x(y);
            if !(x[2] >= t_range.0 && x[2] <= t_range.1) {
                return None;
            }
            let (f, jac) = if scaled {
                scaled_residual_jacobian(x[0], x[1], x[2], p).ok()?
            } else {
                residual_jacobian(x[0], x[1], x[2], p).ok()?
            };
            let chain = [x[0], 1.0 - x[1] * x[1], x[2]];
            let j = Matrix3::from_fn(|i, k| jac[i][k] * chain[k]);
            let f = Vector3::from(f);
            f.iter().all(|c| c.is_finite()).then_some((f, j))
        }
    };
    let root_opts = RootOptions {
        tol: opts.residual_tol,
        max_iter: opts.max_iter,
        max_radius: 2.0,
    };
    let y0 = Vector3::new(start[0].ln(), start[1].atanh(), start[2].ln());
    let coarse = rootfind::solve(system(true), y0, &root_opts);
    // The scaled and plain residuals differ by powers of t_f; finish on the
    // plain ones so the reported tolerance refers to them.
    let root = rootfind::solve(system(false), coarse.x, &root_opts);
    let x = to_x(&root.x);
    let f = [root.f[0], root.f[1], root.f[2]];
    (root.converged.then_some(x), f, root.residual(), x)
}

fn candidate(p: &NormalizedProblem, index: usize, start: [f64; 3], t_range: (f64, f64), opts: &SolveOptions) -> Candidate {
    let (root, f, residual, last) = solve_from(p, start, t_range, opts);
    let solution = root.and_then(|[mu, sigma, t_f]| {
        let (xi, eta) = recover_vectors(mu, sigma, t_f, p).ok()?;
        let sol = SteeringSolution {
            xi,
            eta: eta.normalize(),
            mu,
            sigma,
            t_f,
            boundary: *p,
            branch: Branch::General,
            report: SolveReport {
                residuals: f,
                ..SolveReport::default()
            },
        };
        let end = eval_state(&sol, t_f).ok()?;
        let miss = (end.r - p.end.r).amax().max((end.v - p.end.v).amax());
        (miss < opts.boundary_tol).then_some(sol)
    });
    Candidate {
        index,
        solution,
        residual,
        last,
    }
}

/// Minimum-time input steering `b.start` to `b.end`.
///
/// Constant-input and collinear boundaries are solved exactly. Otherwise the
/// three scalar equations are solved by trust-region dogleg from a seeded
/// Latin-hypercube of starts; among converged roots the one with the
/// smallest `t_f` is returned. Every root is a feasible control, so the
/// smallest is the best available.
pub fn solve_two_point(b: &BoundaryPair, opts: &SolveOptions) -> Result<SteeringSolution> {
    b.validate()?;
    b.check_hover()?;
    if !(opts.residual_tol > 0.0) {
        return Err(Error::invalid("residual tolerance must be positive"));
    }
    let p = normalize(b)?;
    let (dr, dv) = p.deltas();
    if dr.norm() == 0.0 && dv.norm() == 0.0 && p.start.v.norm() == 0.0 {
        return Err(Error::invalid("start and end states coincide"));
    }
    if let Some(sol) = constant_normalized(&p, None) {
        return Ok(sol);
    }
    if let Some(sol) = collinear_normalized(&p, None) {
        return Ok(sol);
    }

    let t_lo = velocity_lower_bound(&dv, &p.g);
    let t_hi = opts.t_f_upper.unwrap_or_else(|| strategy_upper_bound(&p)).max(t_lo * 1.01);
    let t_lo = t_lo.max(1e-3 * t_hi);
    // Iterates leaving this range are treated as outside the domain: the
    // residuals flatten out for long durations and blow up for short ones,
    // and no root lies below the velocity bound anyway.
    let t_range = (0.5 * t_lo, T_CAP_FACTOR * t_hi);
    let s_max = 1.0 - opts.sigma_margin;
    let (lmu_lo, lmu_hi) = (opts.mu_min.ln(), opts.mu_max.ln());
    let mut starts: Vec<[f64; 3]> = opts.hint.into_iter().collect();
    starts.extend(latin_hypercube(opts.max_restarts, opts.seed).into_iter().map(|u| {
        [
            (lmu_lo + u[0] * (lmu_hi - lmu_lo)).exp(),
            (s_max.atanh() * (2.0 * u[1] - 1.0)).tanh(),
            t_lo + u[2] * (t_hi - t_lo),
        ]
    }));

    let candidates: Vec<Candidate> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| candidate(&p, i, *s, t_range, opts))
        .collect();

    let converged = candidates.iter().filter(|c| c.solution.is_some()).count();
    let best = candidates
        .iter()
        .filter_map(|c| c.solution.map(|s| (c.index, s)))
        .min_by(|a, b| a.1.t_f.total_cmp(&b.1.t_f).then(a.0.cmp(&b.0)));
    match best {
        Some((_, sol)) => Ok(SteeringSolution {
            report: SolveReport {
                starts: starts.len(),
                converged_starts: converged,
                ..sol.report
            },
            ..sol
        }),
        None => {
            // Boundaries that are degenerate up to a small perturbation push
            // the roots against the σ → 1 or μ → 0 limits; the exact
            // degenerate solution is then within the boundary tolerance.
            let tol = opts.boundary_tol;
            if let Some(sol) = constant_normalized(&p, Some(tol)).or_else(|| collinear_normalized(&p, Some(tol))) {
                log::debug!("two-point solve fell back to the {:?} branch", sol.branch);
                return Ok(SteeringSolution {
                    report: SolveReport {
                        starts: starts.len(),
                        ..sol.report
                    },
                    ..sol
                });
            }
            let worst = candidates
                .iter()
                .min_by(|a, b| a.residual.total_cmp(&b.residual))
                .expect("at least one start");
            let [mu, sigma, t_f] = worst.last;
            Err(Error::Convergence {
                context: format!("two-point solve, {} starts, closest at mu={mu:.6e} sigma={sigma:.9} t_f={t_f:.6e}", starts.len()),
                best_residual: worst.residual,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{PointState, Vec3};

    #[test]
    fn upper_bound_is_feasible_scale() {
        let b = BoundaryPair::new(PointState::at_rest(Vec3::zeros()), PointState::at_rest(Vec3::x()), Vec3::zeros(), 1.0).unwrap();
        let p = normalize(&b).unwrap();
        assert!((strategy_upper_bound(&p) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn latin_hypercube_fills_every_stratum() {
        let pts = latin_hypercube(16, 3);
        for d in 0..3 {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 16.0) as usize).collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..16).collect::<Vec<_>>());
        }
        assert_eq!(pts, latin_hypercube(16, 3));
    }

    #[test]
    fn coincident_states_are_rejected() {
        let s = PointState::at_rest(Vec3::x());
        let b = BoundaryPair::new(s, s, Vec3::zeros(), 1.0).unwrap();
        assert!(matches!(solve_two_point(&b, &SolveOptions::default()), Err(Error::InvalidArgument(_))));
    }
}
