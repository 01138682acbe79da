use topt_core::nlp::{build_problem, initial_guess, plan_feasibility_check, solve_nlp, NlpOptions, SwitchingPlan, WaypointPath};
use topt_core::steer::{solve_two_point, SolveOptions};
use topt_core::{BoundaryPair, PointState, Vec3};
use topt_oracles::{collocation, courses};

const G: Vec3 = Vec3::new(0.0, 0.0, -9.8);

fn path(points: &[[f64; 3]]) -> WaypointPath {
    WaypointPath::rest_to_rest(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
}

fn plan(path: &WaypointPath, u_max: f64, g: &Vec3, opts: &NlpOptions) -> SwitchingPlan {
    solve_nlp(&build_problem(path, u_max, g, opts).unwrap(), opts).unwrap()
}

fn oracle(path: &WaypointPath, u_max: f64, g: &Vec3) -> collocation::Solution {
    collocation::solve(&collocation::Problem {
        waypoints: path.waypoints.iter().map(|w| [w.x, w.y, w.z]).collect(),
        v_start: [path.v_start.x, path.v_start.y, path.v_start.z],
        v_end: path.v_end.map(|v| [v.x, v.y, v.z]),
        g: [g.x, g.y, g.z],
        u_max,
        pieces: 200,
    })
}

#[test]
fn single_segment_matches_two_point_solver() {
    let p = path(&[[0.0, 0.0, 0.0], [2.0, 1.0, 0.5]]);
    let b = BoundaryPair::new(PointState::at_rest(p.waypoints[0]), PointState::at_rest(p.waypoints[1]), G, 10.5).unwrap();
    let exact = solve_two_point(&b, &SolveOptions::default()).unwrap().t_f;
    let nlp = plan(&p, 10.5, &G, &NlpOptions::default()).total_time;
    // Two constant pieces cannot beat the optimum and come close to it.
    assert!(nlp >= exact - 1e-6 && nlp <= 1.1 * exact, "{nlp} vs {exact}");
}

#[test]
fn one_dimensional_line_is_bang_bang() {
    let p = path(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    let s = plan(&p, 1.0, &Vec3::zeros(), &NlpOptions::default());
    assert!((s.total_time - 2.0).abs() < 1e-6, "{}", s.total_time);
}

#[test]
fn collinear_flyby_beats_stopping() {
    let p = path(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
    let s = plan(&p, 1.0, &Vec3::zeros(), &NlpOptions::default());
    // Rest-to-rest over the full line is optimal; stopping at the middle costs 2·2 = 4.
    assert!((s.total_time - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{}", s.total_time);
    assert!(s.waypoint_velocities[1].norm() > 1.0);
}

#[test]
fn small_courses_agree_with_collocation_at_four_switches() {
    let opts = NlpOptions { switch_points: 4, ..NlpOptions::default() };
    for course in courses::small_courses() {
        let p = path(&course);
        let ours = plan(&p, 10.5, &G, &opts).total_time;
        let reference = oracle(&p, 10.5, &G).total_time;
        assert!(ours >= reference * (1.0 - 1e-3), "{ours} below the dense optimum {reference}");
        assert!(ours <= reference * 1.01, "{ours} vs {reference}");
    }
}

#[test]
fn plans_pass_the_independent_feasibility_check() {
    for course in courses::small_courses() {
        let p = path(&course);
        let s = plan(&p, 10.5, &G, &NlpOptions::default());
        let report = plan_feasibility_check(&s, &p, 10.5, &G);
        assert!(report.passes(1e-6), "{report:?}");
        assert!(s.diagnostics.guess_time > 0.0);
    }
}

#[test]
fn feasibility_check_catches_corrupted_plans() {
    let p = path(&courses::small_courses()[2]);
    let good = plan(&p, 10.5, &G, &NlpOptions::default());

    let mut stretched = good.clone();
    stretched.dt[0] *= 1.01;
    assert!(plan_feasibility_check(&stretched, &p, 10.5, &G).max_waypoint_miss > 1e-4);

    let mut turned = good.clone();
    turned.dirs[1] = Vec3::new(turned.dirs[1].y, -turned.dirs[1].x, turned.dirs[1].z);
    assert!(!plan_feasibility_check(&turned, &p, 10.5, &G).passes(1e-6));

    let mut scaled = good.clone();
    scaled.dirs[0] *= 1.1;
    assert!(plan_feasibility_check(&scaled, &p, 10.5, &G).max_dir_deviation > 0.09);

    let mut negative = good.clone();
    negative.dt[2] = -negative.dt[2];
    assert_eq!(plan_feasibility_check(&negative, &p, 10.5, &G).negative_durations, vec![2]);

    let mut short = good;
    short.dt.pop();
    short.dirs.pop();
    assert!(!plan_feasibility_check(&short, &p, 10.5, &G).piece_count_ok);
}

#[test]
fn translation_invariance() {
    let base = courses::small_courses()[3].clone();
    let offset = [3.0, -7.0, 11.0];
    let shifted: Vec<[f64; 3]> = base.iter().map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]]).collect();
    let opts = NlpOptions::default();
    let a = plan(&path(&base), 10.5, &G, &opts).segment_times();
    let b = plan(&path(&shifted), 10.5, &G, &opts).segment_times();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{a:?} vs {b:?}");
    }
}

#[test]
fn rotation_equivariance_without_gravity() {
    let base = courses::small_courses()[2].clone();
    let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1);
    let turned: Vec<[f64; 3]> = base.iter().map(|p| (rot * Vec3::from(*p)).into()).collect();
    let opts = NlpOptions::default();
    let a = plan(&path(&base), 1.0, &Vec3::zeros(), &opts);
    let b = plan(&path(&turned), 1.0, &Vec3::zeros(), &opts);
    for (x, y) in a.segment_times().iter().zip(&b.segment_times()) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn solving_is_deterministic() {
    let p = path(&courses::zigzag(6, 5.0, 2.0, 1.0));
    let opts = NlpOptions { seed: 11, ..NlpOptions::default() };
    assert_eq!(plan(&p, 10.5, &G, &opts), plan(&p, 10.5, &G, &opts));
}

#[test]
fn more_switches_never_hurt() {
    let p = path(&courses::small_courses()[1]);
    let m1 = plan(&p, 10.5, &G, &NlpOptions::default()).total_time;
    let m3 = plan(&p, 10.5, &G, &NlpOptions { switch_points: 3, ..NlpOptions::default() }).total_time;
    assert!(m3 <= m1 + 1e-6, "{m3} vs {m1}");
}

#[test]
fn guess_has_the_problem_dimension() {
    let p = path(&courses::small_courses()[4]);
    let problem = build_problem(&p, 10.5, &G, &NlpOptions::default()).unwrap();
    let x = initial_guess(&problem);
    assert_eq!(x.len(), problem.n_vars());
    assert!(x.iter().all(|v| v.is_finite()));
}

#[test]
fn invalid_options_are_rejected() {
    let p = path(&courses::small_courses()[0]);
    let bad = NlpOptions { switch_points: 0, ..NlpOptions::default() };
    assert!(build_problem(&p, 10.5, &G, &bad).is_err());
    assert!(build_problem(&p, 5.0, &G, &NlpOptions::default()).is_err());
}
