//! Root moduli of Taylor partial sums of
//! `f_tau(z) = sum_k exp(i pi tau (k^2 + k)) z^k`.
//!
//! `rho_n(f)` is the largest modulus among the zeros of the degree-`n`
//! partial sum. Roots come from Aberth–Ehrlich simultaneous iteration
//! followed by a Newton polish.

use num_complex::Complex64;
use num_traits::{Float, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseriesError {
    #[error("root iteration did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `sum_k coeffs[k] z^k` with a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    /// Drops trailing zero coefficients; fails if nothing is left.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self, PseriesError> {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(PseriesError::InvalidArgument("zero polynomial".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, PseriesError> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn scaled(&self, factor: Complex64) -> Result<Self, PseriesError> {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, &c| acc * z + c)
    }

    /// `(p(z), p'(z))` by Horner.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::zero();
        let mut dp = Complex64::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `max(1, sum |a_k| / |a_n|)`, a crude upper bound on every root modulus.
    pub fn root_bound(&self) -> f64 {
        let lead = self.coeffs[self.degree()].norm();
        let sum: f64 = self.coeffs[..self.degree()].iter().map(|c| c.norm()).sum();
        (sum / lead).max(1.0)
    }

    /// Cauchy's bound: the positive root of `|a_n| r^n = sum_{k<n} |a_k| r^k`.
    /// Every root modulus is at most this, and it is far tighter than
    /// [`Self::root_bound`] at high degree (about 2 for unit coefficients).
    pub fn cauchy_bound(&self) -> f64 {
        let n = self.degree();
        // Divided through by r^n so it cannot overflow; increasing in r.
        let g = |r: f64| {
            let inv = 1.0 / r;
            let lower = self.coeffs[..n].iter().fold(0.0, |acc, c| (acc + c.norm()) * inv);
            self.coeffs[n].norm() - lower
        };
        let (mut lo, mut hi) = (0.0, self.root_bound());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `sum |a_k| |z|^k`, which bounds the rounding error of Horner's rule
    /// up to a factor of about `2 n eps`.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Scale for judging `|p(z)|`: `sum |a_k| max(1, |z|)^n`.
    pub fn residual_scale(&self, z: Complex64) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm()).sum();
        sum * z.norm().max(1.0).powi(self.degree() as i32)
    }
}

/// Exact `tau (k^2 + k) mod 2`, using the binary expansion of `tau`.
pub fn reduced_phase(tau: f64, k: u64) -> f64 {
    if tau == 0.0 || k == 0 {
        return 0.0;
    }
    let (mantissa, exp, sign) = Float::integer_decode(tau);
    let m = mantissa as u128 * (k as u128 * (k as u128 + 1));
    // tau (k^2 + k) = sign * m * 2^exp
    let reduced = if exp >= 1 {
        0.0
    } else {
        let bits = (1 - exp as i32) as u32;
        let r = if bits >= 128 { m } else { m & ((1u128 << bits) - 1) };
        r as f64 * 2f64.powi(exp as i32)
    };
    if sign < 0 && reduced != 0.0 {
        2.0 - reduced
    } else {
        reduced
    }
}

/// Degree-`n` partial sum of `f_tau`.
pub fn ftau_partial_sum(tau: f64, n: usize) -> Result<ComplexPolynomial, PseriesError> {
    if n == 0 {
        return Err(PseriesError::InvalidArgument("n must be >= 1".into()));
    }
    if !tau.is_finite() {
        return Err(PseriesError::InvalidArgument(format!("tau = {tau}")));
    }
    let coeffs = (0..=n as u64)
        .map(|k| Complex64::from_polar(1.0, PI * reduced_phase(tau, k)))
        .collect();
    ComplexPolynomial::new(coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl Root {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus(&self) -> f64 {
        self.z().norm()
    }
}

fn aberth(poly: &ComplexPolynomial, rotation: f64) -> Option<Vec<Complex64>> {
    let n = poly.degree();
    let r = poly.cauchy_bound();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64 + rotation))
        .collect();
    let mut done = vec![false; n];
    let noise = 4.0 * (n as f64 + 1.0) * f64::EPSILON;
    for _ in 0..MAX_ITERATIONS {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = poly.eval_with_derivative(z[i]);
            // Below the rounding level of Horner's rule further steps only
            // wander; this also stops the slow crawl onto multiple roots.
            if p.norm() <= noise * poly.abs_eval(z[i]) {
                done[i] = true;
                continue;
            }
            let w = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = w / (Complex64::new(1.0, 0.0) - w * s);
            if !step.is_finite() {
                return None;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(1e-300) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return Some(z);
        }
    }
    None
}

/// All `degree` roots with their residuals `|p(z)|`.
///
/// Starting points lie on the circle of radius [`ComplexPolynomial::cauchy_bound`];
/// a failed run is retried once from rotated starting points.
pub fn all_roots(poly: &ComplexPolynomial) -> Result<Vec<Root>, PseriesError> {
    if poly.degree() == 0 {
        return Err(PseriesError::InvalidArgument("constant polynomial".into()));
    }
    let z = aberth(poly, 0.4)
        .or_else(|| aberth(poly, 1.3))
        .ok_or(PseriesError::NoConvergence { iterations: MAX_ITERATIONS })?;
    Ok(z
        .into_iter()
        .map(|mut zi| {
            for _ in 0..3 {
                let (p, dp) = poly.eval_with_derivative(zi);
                let next = zi - p / dp;
                if !next.is_finite() || poly.eval(next).norm() >= p.norm() {
                    break;
                }
                zi = next;
            }
            Root { re: zi.re, im: zi.im, residual: poly.eval(zi).norm() }
        })
        .collect())
}

pub fn max_root_modulus(poly: &ComplexPolynomial) -> Result<f64, PseriesError> {
    Ok(all_roots(poly)?.iter().map(Root::modulus).fold(0.0, f64::max))
}

/// `rho_n(f_tau)`.
pub fn rho_n(tau: f64, n: usize) -> Result<f64, PseriesError> {
    max_root_modulus(&ftau_partial_sum(tau, n)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub tau: f64,
    /// `None` where root finding failed.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauScan {
    pub n: usize,
    pub points: Vec<ScanPoint>,
    /// Local maxima `(tau, rho)`, largest first.
    pub maxima: Vec<(f64, f64)>,
    pub failures: usize,
}

impl TauScan {
    /// `max |rho(tau) - rho(tau + shift)|` over scan points whose shifted
    /// partner is also on the grid (within `1e-9`).
    pub fn shift_mismatch(&self, shift: f64) -> Option<f64> {
        self.paired_mismatch(|t| t + shift)
    }

    /// `max |rho(tau) - rho(1 - tau)|`; zero up to rounding because the
    /// coefficients of `f_(1-tau)` are the conjugates of those of `f_tau`.
    pub fn reflection_mismatch(&self) -> Option<f64> {
        self.paired_mismatch(|t| 1.0 - t)
    }

    fn paired_mismatch(&self, partner: impl Fn(f64) -> f64) -> Option<f64> {
        let lookup = |t: f64| {
            self.points
                .binary_search_by(|p| p.tau.total_cmp(&t))
                .map_or_else(|i| i, |i| i)
        };
        let mut worst: Option<f64> = None;
        for p in &self.points {
            let t = partner(p.tau);
            let i = lookup(t);
            let near = [i.wrapping_sub(1), i, i + 1]
                .into_iter()
                .filter_map(|j| self.points.get(j))
                .find(|q| (q.tau - t).abs() < 1e-9);
            if let (Some(q), Some(a)) = (near, p.rho) {
                if let Some(b) = q.rho {
                    worst = Some(worst.unwrap_or(0.0).max((a - b).abs()));
                }
            }
        }
        worst
    }

    /// Largest local maxima at least `separation` apart in `tau`.
    pub fn top_maxima(&self, count: usize, separation: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &m in &self.maxima {
            if out.len() == count {
                break;
            }
            if out.iter().all(|o| (o.0 - m.0).abs() >= separation) {
                out.push(m);
            }
        }
        out
    }
}

/// `rho_n(f_tau)` on `tau = start, start + step, ..., <= end`.
pub fn tau_scan(start: f64, end: f64, step: f64, n: usize) -> Result<TauScan, PseriesError> {
    if !(step > 0.0) || !(end >= start) {
        return Err(PseriesError::InvalidArgument("scan needs step > 0 and end >= start".into()));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    let points: Vec<ScanPoint> = (0..count)
        .into_par_iter()
        .map(|i| {
            let tau = start + i as f64 * step;
            ScanPoint { tau, rho: rho_n(tau, n).ok() }
        })
        .collect();
    let failures = points.iter().filter(|p| p.rho.is_none()).count();
    let mut maxima: Vec<(f64, f64)> = points
        .windows(3)
        .filter_map(|w| match (w[0].rho, w[1].rho, w[2].rho) {
            (Some(a), Some(b), Some(c)) if b > a && b >= c => Some((w[1].tau, b)),
            _ => None,
        })
        .collect();
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(TauScan { n, points, maxima, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfEstimate {
    pub tau: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    /// `min rho_n` over the window: a finite-window stand-in for the liminf.
    pub rho: f64,
    pub argmin: usize,
}

pub fn liminf_window(tau: f64, n_lo: usize, n_hi: usize) -> Result<LiminfEstimate, PseriesError> {
    if n_lo == 0 || n_hi < n_lo {
        return Err(PseriesError::InvalidArgument(format!("window [{n_lo}, {n_hi}]")));
    }
    let rhos: Vec<f64> = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| rho_n(tau, n))
        .collect::<Result<_, _>>()?;
    let (i, &rho) = rhos
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty window");
    Ok(LiminfEstimate { tau, n_lo, n_hi, rho, argmin: n_lo + i })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_roots() {
        let r = all_roots(&ComplexPolynomial::from_real(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].z() - c(-1.0, 0.0)).norm() < 1e-14);
        let mut r = all_roots(&ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap()).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0].z() - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((r[1].z() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn quarter_tau_coefficients() {
        let p = ftau_partial_sum(0.25, 7).unwrap();
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(-1.0, 0.0)];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.coeffs()[k] - e).norm() < 1e-15, "k = {k}");
        }
        // (k+4)^2 + (k+4) = k^2 + k + 4(2k + 5): the phase gains an odd
        // multiple of pi, matching the 1/(1 + z^4) denominator.
        for k in 0..4 {
            assert!((p.coeffs()[k + 4] + p.coeffs()[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_tau_is_geometric() {
        let p = ftau_partial_sum(0.0, 12).unwrap();
        assert!(p.coeffs().iter().all(|a| *a == c(1.0, 0.0)));
        assert!((rho_n(0.0, 12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_reduction_is_exact() {
        // 0.375 (k^2 + k) mod 2 for large k, by integer arithmetic.
        for k in [1u64, 7, 199, 1000] {
            let exact = ((3 * k * (k + 1)) % 16) as f64 / 8.0;
            assert_eq!(reduced_phase(0.375, k), exact);
        }
        assert_eq!(reduced_phase(-0.25, 1), 1.5);
        assert_eq!(reduced_phase(3.0, 5), 0.0);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = ComplexPolynomial::from_real(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        assert!(ComplexPolynomial::from_real(&[0.0]).is_err());
        assert!(all_roots(&ComplexPolynomial::from_real(&[3.0]).unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(ftau_partial_sum(0.3, 0).is_err());
        assert!(tau_scan(0.0, 1.0, 0.0, 10).is_err());
        assert!(liminf_window(0.3, 10, 5).is_err());
    }
}
