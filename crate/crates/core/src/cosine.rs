//! The model equation `y' = cos(pi x y)` and its analytic companions.
//!
//! Besides the right-hand sides in original and scaled variables this module
//! holds the Taylor expansion about `x = 0`, the divergent large-`x` series
//! `y ~ (m + 1/2)/x + sum c_k x^(-2k-1)` and a numerical measurement of the
//! exponentially small splitting between two curves of the same bundle.

use std::f64::consts::PI;

use thiserror::Error;

use crate::ode::{self, IntegratorConfig, OdeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CosineError {
    #[error("asymptotic tail with m = {m} is not asymptotic at x = {x}")]
    TailNotAsymptotic { m: i64, x: f64 },
    #[error("solutions settle on different bundles (m = {m1} and m = {m2})")]
    BundleMismatch { m1: i64, m2: i64 },
    #[error("difference of the two solutions underflowed at x = {x}")]
    Underflow { x: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// `cos(pi x y)`.
#[inline]
pub fn rhs_unscaled(x: f64, y: f64) -> f64 {
    (PI * x * y).cos()
}

/// `cos(lambda t z)`, the equation after the change of variables
/// `x = sqrt(lambda/pi) t`, `y = sqrt(lambda/pi) z`.
#[inline]
pub fn rhs_scaled(t: f64, z: f64, lambda: f64) -> f64 {
    (lambda * t * z).cos()
}

/// `lambda = (2n - 1/2) pi` for the `n`th separatrix.
pub fn lambda_for(n: i64) -> f64 {
    (2.0 * n as f64 - 0.5) * PI
}

/// Integrates the model equation from `(x0, y0)` to `x1`.
pub fn solve(x0: f64, y0: f64, x1: f64, cfg: &IntegratorConfig) -> Result<ode::Trajectory<1>, OdeError> {
    ode::integrate(|x, y| [rhs_unscaled(x, y[0])], x0, [y0], x1, cfg)
}

/// Integrates the scaled equation from `(t0, z0)` to `t1`.
pub fn solve_scaled(
    t0: f64,
    z0: f64,
    t1: f64,
    lambda: f64,
    cfg: &IntegratorConfig,
) -> Result<ode::Trajectory<1>, OdeError> {
    ode::integrate(|t, z| [rhs_scaled(t, z[0], lambda)], t0, [z0], t1, cfg)
}

/// Taylor coefficients `b_0..=b_N` of the solution with `y(0) = a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub a: f64,
    pub coeffs: Vec<f64>,
}

impl TaylorSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &b| acc * x + b)
    }
}

/// Taylor coefficients about `x = 0` up to `x^n`.
///
/// With `u = pi x y`, `c = cos u` and `s = sin u` the system
/// `y' = c`, `c' = -s u'`, `s' = c u'` turns into Cauchy-product recurrences
/// for the coefficients.
pub fn taylor_coefficients(a: f64, n: usize) -> TaylorSeries {
    let n = n.max(1);
    let mut b = vec![0.0; n + 1];
    let mut c = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    // du/dx coefficients: du[j] = (j + 1) u_{j+1} with u_{j+1} = pi b_j.
    let mut du = vec![0.0; n + 1];
    b[0] = a;
    c[0] = 1.0;
    for k in 0..n {
        b[k + 1] = c[k] / (k + 1) as f64;
        du[k] = (k + 1) as f64 * PI * b[k];
        let mut sc = 0.0;
        let mut ss = 0.0;
        for j in 0..=k {
            sc += c[j] * du[k - j];
            ss += s[j] * du[k - j];
        }
        c[k + 1] = -ss / (k + 1) as f64;
        s[k + 1] = sc / (k + 1) as f64;
    }
    TaylorSeries { a, coeffs: b }
}

/// Number of correction coefficients available for the large-`x` tail.
pub const TAIL_TERMS: usize = 6;

/// Large-`x` expansion `y ~ (m + 1/2)/x + sum_{k<=K} c_k x^(-2k-1)`.
///
/// Only odd `m` describe separatrices; even `m` are the bundles that
/// generic solutions settle on.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AsymptoticTail {
    pub m: i64,
    /// `c_1..=c_6` evaluated for this `m`.
    pub coeffs: [f64; TAIL_TERMS],
    /// Number of correction terms used, `0..=6`.
    pub truncation: usize,
}

impl AsymptoticTail {
    pub fn new(m: i64, truncation: usize) -> Self {
        let q = m as f64 + 0.5;
        let s = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let (p, p2, p3, p4, p5, p6) = (PI, PI.powi(2), PI.powi(3), PI.powi(4), PI.powi(5), PI.powi(6));
        let coeffs = [
            s * q / p,
            3.0 * q / p2,
            s * (q.powi(3) / (6.0 * p) + 15.0 * q / p3),
            8.0 * q.powi(3) / (3.0 * p2) + 105.0 * q / p4,
            s * (3.0 * q.powi(5) / (40.0 * p) + 36.0 * q.powi(3) / p3 + 945.0 * q / p5),
            38.0 * q.powi(5) / (15.0 * p2) + 498.0 * q.powi(3) / p4 + 10395.0 * q / p6,
        ];
        Self {
            m,
            coeffs,
            truncation: truncation.min(TAIL_TERMS),
        }
    }

    /// Tail of the `n`th separatrix, `m = 2n - 1`, with every available term.
    pub fn separatrix(n: i64) -> Self {
        Self::new(2 * n - 1, TAIL_TERMS)
    }

    pub fn leading(&self) -> f64 {
        self.m as f64 + 0.5
    }

    /// The series terms `T_0 = (m+1/2)/x, T_k = c_k x^(-2k-1)`, `k <= 6`.
    pub fn terms(&self, x: f64) -> [f64; TAIL_TERMS + 1] {
        let mut t = [0.0; TAIL_TERMS + 1];
        t[0] = self.leading() / x;
        let inv2 = 1.0 / (x * x);
        let mut p = 1.0 / x;
        for k in 0..TAIL_TERMS {
            p *= inv2;
            t[k + 1] = self.coeffs[k] * p;
        }
        t
    }

    /// True when each term used is below a tenth of the one before it.
    pub fn is_asymptotic_at(&self, x: f64) -> bool {
        if !(x > 0.0) {
            return false;
        }
        let t = self.terms(x);
        // The first correction is always checked, even for K = 0.
        (1..=self.truncation.max(1)).all(|k| t[k].abs() < 0.1 * t[k - 1].abs())
    }

    /// Largest truncation `K <= truncation` for which the terms still
    /// decrease by the factor ten at `x`; the tail is returned with it.
    pub fn optimally_truncated(&self, x: f64) -> Result<Self, CosineError> {
        let t = self.terms(x);
        if !(x > 0.0) || !(t[1].abs() < 0.1 * t[0].abs()) {
            return Err(CosineError::TailNotAsymptotic { m: self.m, x });
        }
        let mut k = 1;
        while k < self.truncation && t[k + 1].abs() < 0.1 * t[k].abs() {
            k += 1;
        }
        Ok(Self {
            truncation: k.min(self.truncation),
            ..self.clone()
        })
    }

    /// `(y, y')` from the truncated series.
    pub fn eval(&self, x: f64) -> Result<(f64, f64), CosineError> {
        if !self.is_asymptotic_at(x) {
            return Err(CosineError::TailNotAsymptotic { m: self.m, x });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> (f64, f64) {
        let t = self.terms(x);
        let mut y = t[0];
        let mut dy = -t[0] / x;
        for k in 1..=self.truncation {
            y += t[k];
            dy -= (2 * k + 1) as f64 * t[k] / x;
        }
        (y, dy)
    }

    /// `|y' - cos(pi x y)|` for the truncated series.
    ///
    /// Uses `cos(pi (m + 1/2) + pi d) = -(-1)^m sin(pi d)` with
    /// `d = x y - (m + 1/2)`, so the large phase never enters a cosine.
    pub fn residual(&self, x: f64) -> f64 {
        let t = self.terms(x);
        let s = if self.m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let d: f64 = (1..=self.truncation).map(|k| t[k] * x).sum();
        let (_, dy) = self.eval_unchecked(x);
        (dy + s * (PI * d).sin()).abs()
    }
}

/// Bundle index `round(x y - 1/2)` of a state far out in the decaying region.
pub fn bundle_index(x: f64, y: f64) -> i64 {
    (x * y - 0.5).round() as i64
}

/// Result of [`bundle_decay_fit`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BundleDecay {
    pub bundle_m: i64,
    /// Least-squares slope of `ln|y1 - y2|` against `x^2`.
    pub slope: f64,
    pub intercept: f64,
    /// Sampled `(x, ln|y1 - y2|)`.
    pub samples: Vec<(f64, f64)>,
}

/// Slope of `ln|y1(x) - y2(x)|` against `x^2` over `window` for the
/// solutions starting at `a1` and `a2`.
///
/// The difference `Y = y1 - y2` is carried as its own state with
/// `Y' = -2 sin(pi x (y1 + y2)/2) sin(pi x Y/2)`, which keeps full relative
/// precision long after `Y` drops below the rounding level of `y1`.
pub fn bundle_decay_fit(
    a1: f64,
    a2: f64,
    window: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<BundleDecay, CosineError> {
    if a1 == a2 {
        return Err(CosineError::InvalidArgument(
            "a1 == a2 gives a zero difference".into(),
        ));
    }
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi) {
        return Err(CosineError::InvalidArgument(format!("bad window {window:?}")));
    }
    let x_bundle = hi.max(12.0).max(2.5 * a1.abs().max(a2.abs()));
    let classify = |a: f64| -> Result<i64, CosineError> {
        let t = solve(0.0, a, x_bundle, cfg)?;
        let (x, y) = t.end();
        Ok(bundle_index(x, y[0]))
    };
    let (m1, m2) = (classify(a1)?, classify(a2)?);
    if m1 != m2 || m1.rem_euclid(2) != 0 {
        return Err(CosineError::BundleMismatch { m1, m2 });
    }

    let rhs = |x: f64, s: &[f64; 2]| {
        let (y1, d) = (s[0], s[1]);
        [
            rhs_unscaled(x, y1),
            -2.0 * (0.5 * PI * x * (2.0 * y1 - d)).sin() * (0.5 * PI * x * d).sin(),
        ]
    };
    let diff_cfg = IntegratorConfig {
        abs_tol: 1e-300,
        ..*cfg
    };
    let traj = ode::integrate(rhs, 0.0, [a1, a1 - a2], hi, &diff_cfg)?;
    let npts = 201;
    let mut samples = Vec::with_capacity(npts);
    for i in 0..npts {
        let x = lo + (hi - lo) * i as f64 / (npts - 1) as f64;
        let d = traj.eval(x).expect("inside trajectory")[1].abs();
        if !(d > 1e-300) {
            return Err(CosineError::Underflow { x });
        }
        samples.push((x, d.ln()));
    }
    let (slope, intercept) = crate::stats::linear_fit(samples.iter().map(|&(x, l)| (x * x, l)));
    Ok(BundleDecay {
        bundle_m: m1,
        slope,
        intercept,
        samples,
    })
}
