//! Partial sums of the square-wave sine series
//! `S_(2N+1)(x) = (4/pi) sum_{n=0}^N sin((2n+1) x) / (2n+1)`,
//! the classic example of a series whose partial sums overshoot their limit
//! by a fixed amount however many terms are kept.

use std::f64::consts::PI;

use crate::quad::CompositeRule;

pub fn fourier_partial_sum(n: usize, x: f64) -> f64 {
    let sum: f64 = (0..=n)
        .map(|k| {
            let m = (2 * k + 1) as f64;
            (m * x).sin() / m
        })
        .sum();
    4.0 / PI * sum
}

/// `S_(2N+1)` on the interior grid `x_i = i pi / (points + 1)`.
pub fn fourier_samples(n: usize, points: usize) -> Vec<(f64, f64)> {
    (1..=points)
        .map(|i| {
            let x = i as f64 * PI / (points + 1) as f64;
            (x, fourier_partial_sum(n, x))
        })
        .collect()
}

/// Location of the first maximum: `S' = (2/pi) sin(2(N+1)x) / sin x`
/// first vanishes at `pi / (2(N+1))`.
pub fn first_peak(n: usize) -> f64 {
    PI / (2.0 * (n + 1) as f64)
}

/// Height of the first (and largest) peak of `S_(2N+1)` on `(0, pi)`.
pub fn overshoot(n: usize) -> f64 {
    fourier_partial_sum(n, first_peak(n))
}

/// `(2/pi) Si(pi)`, the limit of [`overshoot`].
pub fn gibbs_limit() -> f64 {
    let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
    2.0 / PI * CompositeRule::new(16).integrate(sinc, 0.0, PI, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_at_midpoint() {
        assert!((fourier_partial_sum(0, PI / 2.0) - 4.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn midpoint_converges_to_one() {
        assert!((fourier_partial_sum(80, PI / 2.0) - 1.0).abs() < 0.01);
        // Leibniz: the error is below the first omitted term.
        for n in [5, 20, 200] {
            let err = (fourier_partial_sum(n, PI / 2.0) - 1.0).abs();
            assert!(err < 4.0 / PI / (2 * n + 3) as f64);
        }
    }

    #[test]
    fn gibbs_constant() {
        assert!((gibbs_limit() - 1.178_979_744_472_167).abs() < 1e-12);
    }

    #[test]
    fn peak_is_grid_maximum() {
        let n = 40;
        let grid_max = fourier_samples(n, 20_000).iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert!(overshoot(n) >= grid_max - 1e-12);
        assert!(overshoot(n) - grid_max < 1e-5);
    }
}
