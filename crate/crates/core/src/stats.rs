//! Small fitting helpers shared by the diagnostics.

/// Ordinary least-squares line through `(x, y)` points; returns
/// `(slope, intercept)`. NaN when fewer than two distinct `x` values.
pub fn linear_fit(points: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.into_iter().collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let (s, b) = linear_fit((0..5).map(|i| (i as f64, 3.0 * i as f64 - 2.0)));
        assert!((s - 3.0).abs() < 1e-14 && (b + 2.0).abs() < 1e-14);
    }
}
