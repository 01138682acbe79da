//! One-dimensional closed forms.

/// Rest-to-rest minimum time over distance `d > 0` when the available
/// acceleration is `a1` forwards and `a2` backwards.
pub fn rest_to_rest_time(d: f64, a1: f64, a2: f64) -> f64 {
    // Accelerate for t1, brake for t2: a1 t1 = a2 t2, d = a1 t1²/2 + a2 t2²/2.
    let t1 = (2.0 * d * a2 / (a1 * (a1 + a2))).sqrt();
    t1 * (1.0 + a1 / a2)
}

/// Peak speed of the rest-to-rest bang-bang profile.
pub fn rest_to_rest_peak_speed(d: f64, a1: f64, a2: f64) -> f64 {
    a1 * (2.0 * d * a2 / (a1 * (a1 + a2))).sqrt()
}

/// Peak acceleration of the rest-to-rest seventh-degree minimum-snap profile
/// `x(s) = d (35 s⁴ − 84 s⁵ + 70 s⁶ − 20 s⁷)` over duration `t`, found by
/// bisection on the jerk polynomial.
pub fn minsnap_rest_peak_accel(d: f64, t: f64) -> f64 {
    let acc = |s: f64| d * (420.0 * s * s - 1680.0 * s.powi(3) + 2100.0 * s.powi(4) - 840.0 * s.powi(5)) / (t * t);
    let jerk = |s: f64| 840.0 * s - 5040.0 * s * s + 8400.0 * s.powi(3) - 4200.0 * s.powi(4);
    // Jerk changes sign once on (0, 1/2).
    let (mut lo, mut hi) = (0.05, 0.45);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if jerk(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    acc(0.5 * (lo + hi)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_case() {
        assert!((rest_to_rest_time(1.0, 1.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((rest_to_rest_peak_speed(4.0, 1.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn minsnap_peak_is_known_value() {
        // Jerk ∝ s(s − 1)(5s² − 5s + 1) vanishes at s = (5 − √5)/10.
        let s = (5.0 - 5f64.sqrt()) / 10.0;
        let expect = 420.0 * s * s - 1680.0 * s.powi(3) + 2100.0 * s.powi(4) - 840.0 * s.powi(5);
        assert!((minsnap_rest_peak_accel(1.0, 1.0) - expect).abs() < 1e-9);
    }
}
