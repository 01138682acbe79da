//! Brute-force footprint coverage check.

/// True when every point of an `n × n` grid over the rectangle
/// `[x0, x0 + w] × [y0, y0 + h]` lies inside at least one axis-aligned
/// footprint `fx × fy` centred at one of `centres`.
pub fn grid_covered(x0: f64, y0: f64, w: f64, h: f64, fx: f64, fy: f64, centres: &[[f64; 2]], n: usize) -> bool {
    let tol = 1e-9 * (1.0 + fx.max(fy));
    (0..n).all(|i| {
        let x = x0 + w * i as f64 / (n - 1) as f64;
        (0..n).all(|j| {
            let y = y0 + h * j as f64 / (n - 1) as f64;
            centres
                .iter()
                .any(|c| (x - c[0]).abs() <= 0.5 * fx + tol && (y - c[1]).abs() <= 0.5 * fy + tol)
        })
    })
}
