use topt_core::assemble::{compare, direct_interpolation, hamiltonian_profile, refine_plan, Trajectory};
use topt_core::nlp::{build_problem, solve_nlp, NlpOptions, WaypointPath};
use topt_core::steer::SolveOptions;
use topt_core::Vec3;
use topt_oracles::courses;

const G: Vec3 = Vec3::new(0.0, 0.0, -9.8);
const U_MAX: f64 = 10.5;

fn both(points: &[[f64; 3]]) -> (Trajectory, Trajectory) {
    let path = WaypointPath::rest_to_rest(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap();
    let opts = NlpOptions::default();
    let problem = build_problem(&path, U_MAX, &G, &opts).unwrap();
    let plan = solve_nlp(&problem, &opts).unwrap();
    let direct = direct_interpolation(&plan, &problem.path, U_MAX, &G, None).unwrap();
    let pmp = refine_plan(&plan, &SolveOptions::default(), None).unwrap();
    (direct, pmp)
}

#[test]
fn refinement_never_slows_a_segment() {
    for course in courses::small_courses() {
        let (direct, pmp) = both(&course);
        for (d, p) in direct.segment_times.iter().zip(&pmp.segment_times) {
            assert!(p <= &(d * (1.0 + 1e-9) + 1e-9), "{p} > {d}");
        }
        assert!(pmp.total_time <= direct.total_time + 1e-9);
    }
}

#[test]
fn pmp_input_saturates_the_bound() {
    let (_, pmp) = both(&courses::small_courses()[3]);
    for s in &pmp.samples {
        assert!((s.u.norm() - U_MAX).abs() < 1e-9 * U_MAX, "{}", s.u.norm());
    }
}

#[test]
fn waypoints_are_reached_with_continuous_velocity() {
    for course in courses::small_courses() {
        let (direct, pmp) = both(&course);
        for traj in [&direct, &pmp] {
            let starts = traj.segment_starts();
            for (i, w) in traj.waypoints.iter().enumerate() {
                let s = traj.eval(starts[i]).unwrap();
                assert!((s.r - w).norm() < 1e-6, "{:?} waypoint {i}: {}", traj.method, (s.r - w).norm());
            }
        }
        let sols = pmp.pmp_segments().unwrap();
        for pair in sols.windows(2) {
            let arrive = pair[0].state_si(pair[0].t_f).unwrap();
            let leave = pair[1].state_si(0.0).unwrap();
            assert!((arrive.r - leave.r).norm() < 1e-6);
            assert!((arrive.v - leave.v).norm() < 1e-6);
        }
    }
}

#[test]
fn samples_are_ordered_and_cover_the_trajectory() {
    let (direct, pmp) = both(&courses::small_courses()[4]);
    for traj in [&direct, &pmp] {
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(traj.samples[0].t, 0.0);
        assert!((traj.samples.last().unwrap().t - traj.total_time).abs() < 1e-12);
        assert!(traj.samples.iter().all(|s| s.segment < traj.segment_times.len()));
    }
}

#[test]
fn hamiltonian_is_constant_per_segment() {
    let (direct, pmp) = both(&courses::small_courses()[2]);
    let profile = hamiltonian_profile(&pmp).unwrap();
    assert!(profile.max_relative_variation() < 1e-6);
    assert_eq!(profile.jumps.len(), pmp.segment_times.len() - 1);
    assert!(hamiltonian_profile(&direct).is_err());
}

#[test]
fn comparison_with_itself_is_exact() {
    let (direct, pmp) = both(&courses::small_courses()[1]);
    let same = compare(&pmp, &pmp).unwrap();
    assert_eq!(same.ratio, 1.0);
    assert_eq!(same.max_position_deviation, 0.0);
    let cross = compare(&direct, &pmp).unwrap();
    assert!(cross.ratio <= 1.0 + 1e-12);
    assert!((cross.total_delta - (pmp.total_time - direct.total_time)).abs() < 1e-12);
}

#[test]
fn mismatched_paths_do_not_compare() {
    let (a, _) = both(&courses::small_courses()[0]);
    let (b, _) = both(&courses::small_courses()[1]);
    assert!(compare(&a, &b).is_err());
}
