use proptest::prelude::*;
use topt_core::assemble::PolySegment;
use topt_core::baseline::{allocate_times, min_snap, peak_thrust, sample_poly, DEFAULT_MARGIN};
use topt_core::nlp::WaypointPath;
use topt_core::Vec3;
use topt_oracles::{courses, kinematics};

const G: Vec3 = Vec3::new(0.0, 0.0, -9.8);

fn path(points: &[[f64; 3]]) -> WaypointPath {
    WaypointPath::rest_to_rest(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
}

fn check_smoothness(p: &WaypointPath, segs: &[PolySegment]) {
    for (i, s) in segs.iter().enumerate() {
        assert!((s.eval(0.0, 0) - p.waypoints[i]).norm() < 1e-8);
        assert!((s.eval(s.duration, 0) - p.waypoints[i + 1]).norm() < 1e-8);
    }
    for w in segs.windows(2) {
        for order in 1..=4 {
            let (a, b) = (w[0].eval(w[0].duration, order), w[1].eval(0.0, order));
            assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "order {order}: {a} vs {b}");
        }
    }
    let (first, last) = (&segs[0], segs.last().unwrap());
    assert!(first.eval(0.0, 1).norm() < 1e-8 && last.eval(last.duration, 1).norm() < 1e-8);
}

#[test]
fn single_rest_segment_matches_closed_form_allocation() {
    let p = path(&[[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]]);
    let t = allocate_times(&p, 2.0, &Vec3::zeros(), 0.0).unwrap()[0];
    // Peak acceleration scales with d/T², so T = sqrt(peak(d, 1) / u_max).
    let expected = (kinematics::minsnap_rest_peak_accel(4.0, 1.0) / 2.0).sqrt();
    assert!((t - expected).abs() < 1e-8 * expected, "{t} vs {expected}");
}

#[test]
fn allocation_hits_the_thrust_target() {
    for course in courses::small_courses() {
        let p = path(&course);
        for margin in [0.0, DEFAULT_MARGIN, 0.05] {
            let times = allocate_times(&p, 10.5, &G, margin).unwrap();
            let segs = min_snap(&p, &times).unwrap();
            let peak = peak_thrust(&segs, &G);
            let target = (1.0 - margin) * 10.5;
            assert!(peak <= target * (1.0 + 1e-12) && peak >= target * (1.0 - 1e-8), "{peak} vs {target}");
        }
    }
}

#[test]
fn peak_thrust_bounds_dense_samples() {
    let p = path(&courses::zigzag(6, 10.0, 3.0, 2.0));
    let times = allocate_times(&p, 10.5, &G, DEFAULT_MARGIN).unwrap();
    let segs = min_snap(&p, &times).unwrap();
    let peak = peak_thrust(&segs, &G);
    let traj = sample_poly(&segs, &p.waypoints, 10.5, &G, Some(1e-3)).unwrap();
    let sampled = traj.samples.iter().map(|s| s.u.norm()).fold(0.0, f64::max);
    assert!(sampled <= peak * (1.0 + 1e-12));
    assert!(sampled >= peak * (1.0 - 1e-5), "{sampled} vs {peak}");
}

#[test]
fn samples_follow_the_polynomials() {
    let p = path(&courses::small_courses()[3]);
    let times = allocate_times(&p, 10.5, &G, DEFAULT_MARGIN).unwrap();
    let segs = min_snap(&p, &times).unwrap();
    let traj = sample_poly(&segs, &p.waypoints, 10.5, &G, None).unwrap();
    assert!((traj.total_time - times.iter().sum::<f64>()).abs() < 1e-12);
    let starts = traj.segment_starts();
    for s in &traj.samples {
        let seg = &segs[s.segment];
        let tau = s.t - starts[s.segment];
        assert!((s.u - (seg.eval(tau, 2) - G)).norm() < 1e-9);
        assert!((s.v - seg.eval(tau, 1)).norm() < 1e-9);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let p = path(&courses::small_courses()[0]);
    assert!(min_snap(&p, &[1.0]).is_err());
    assert!(min_snap(&p, &[1.0, -1.0]).is_err());
    assert!(allocate_times(&p, 10.5, &G, 1.0).is_err());
    assert!(allocate_times(&p, 9.0, &G, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn minimum_snap_is_c4_and_interpolates(
        pts in prop::collection::vec(prop::array::uniform3(-10.0..10.0f64), 2..7),
        durations in prop::collection::vec(0.3..3.0f64, 6),
    ) {
        let p = WaypointPath::rest_to_rest(pts.iter().map(|a| Vec3::from(*a)).collect());
        prop_assume!(p.is_ok());
        let p = p.unwrap();
        prop_assume!(p.waypoints.windows(2).all(|w| (w[1] - w[0]).norm() > 1e-3));
        let segs = min_snap(&p, &durations[..p.segments()]).unwrap();
        check_smoothness(&p, &segs);
    }
}
