//! Waypoint courses shared by the integration tests.

use crate::V3;

/// Lawnmower course with `n` waypoints: lanes `lane` apart along y, each
/// `length` long along x, at height `z`. Two waypoints per lane.
pub fn zigzag(n: usize, length: f64, lane: f64, z: f64) -> Vec<V3> {
    (0..n)
        .map(|k| {
            let row = k / 2;
            let at_end = (k % 2 == 1) ^ (row % 2 == 1);
            [if at_end { length } else { 0.0 }, row as f64 * lane, z]
        })
        .collect()
}

/// Small courses for oracle comparisons, in metres.
pub fn small_courses() -> Vec<Vec<V3>> {
    vec![
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
        vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 1.5, 0.0]],
        vec![[0.0, 0.0, 1.0], [1.5, 1.0, 1.2], [3.0, 0.0, 0.8]],
        vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.5], [2.0, 0.0, 1.0], [3.0, 1.0, 0.5]],
        zigzag(4, 3.0, 1.0, 2.0),
    ]
}
