//! The `lambda -> infinity` limit `Z(t)` of the scaled separatrices.
//!
//! `Z` solves `Z Z' + t + Z' sqrt(Z^2 - t^2) = 0` with `Z(1) = 1`. Writing
//! `Z = t G` separates the equation, and the implicit solution
//!
//! ```text
//! K / t^3 = (1 + 3 G^2) (G + sqrt(G^2 - 1)) (sqrt(G^2 - 1) - 2 G) / (sqrt(G^2 - 1) + 2 G)
//! ```
//!
//! with `K = -4` gives `Z(0) = 2^(1/3)`.
//!
//! Near `t = 1` the square root vanishes like `sqrt(1 - t)`, so the ODE is
//! integrated in `s = sqrt(1 - t)`, where it is smooth:
//! `dZ/ds = 2 s t / (Z + sqrt(Z^2 - t^2))`.

use serde::Serialize;
use thiserror::Error;

use crate::cosine;
use crate::ode::{self, IntegratorConfig, OdeError, Trajectory};
use crate::quad::CompositeRule;
use crate::separatrix::{self, ScaledSeparatrix, SeparatrixConfig, SeparatrixError};

pub use crate::alpha::{alpha_closed_form, alpha_recursion, AlphaError, AlphaTable};

/// Constant of the implicit solution fixed by `G(1) = 1`.
pub const IMPLICIT_K: f64 = -4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("Z^2 < t^2 at t = {t} (Z = {z})")]
    DomainViolation { t: f64, z: f64 },
    #[error("implicit equation has no bracketed root at t = {t}")]
    RootNotBracketed { t: f64 },
    #[error("quadrature produced a non-finite value on [0, {t}]")]
    QuadratureFailure { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Separatrix(#[from] SeparatrixError),
}

/// `2^(1/3)`.
pub fn z_at_origin() -> f64 {
    2f64.powf(1.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    Ode,
    Implicit,
}

/// `Z` sampled on an equally spaced grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCurve {
    pub source: CurveSource,
    pub t: Vec<f64>,
    pub z: Vec<f64>,
}

impl LimitCurve {
    pub fn z0(&self) -> f64 {
        self.z[0]
    }
}

/// Dense solution of the limit ODE.
#[derive(Debug, Clone)]
pub struct LimitOde {
    traj: Trajectory<1>,
}

/// `Z'` from the limit ODE.
pub fn limit_slope(t: f64, z: f64) -> f64 {
    -t / (z + (z * z - t * t).max(0.0).sqrt())
}

impl LimitOde {
    pub fn solve() -> Result<Self, LimitError> {
        let cfg = IntegratorConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            initial_step: 1e-4,
            max_step: 0.02,
            ..IntegratorConfig::default()
        };
        let violation = std::cell::Cell::new(None);
        let rhs = |s: f64, z: &[f64; 1]| {
            let t = 1.0 - s * s;
            let z = z[0];
            // (Z - t)(Z + t) keeps the small factor accurate near s = 0.
            let d = (z - t) * (z + t);
            if d < -1e-14 && violation.get().is_none() {
                violation.set(Some((t, z)));
            }
            [2.0 * s * t / (z + d.max(0.0).sqrt())]
        };
        let traj = ode::integrate(rhs, 0.0, [1.0], 1.0, &cfg)?;
        if let Some((t, z)) = violation.get() {
            return Err(LimitError::DomainViolation { t, z });
        }
        Ok(Self { traj })
    }

    /// `Z(t)` for `t` in `[0, 1]`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        self.traj.eval((1.0 - t).sqrt()).map(|z| z[0])
    }

    pub fn derivative(&self, t: f64) -> Option<f64> {
        self.eval(t).map(|z| limit_slope(t, z))
    }

    pub fn sample(&self, grid_size: usize) -> LimitCurve {
        let t = grid(grid_size);
        let z = t.iter().map(|&t| self.eval(t).expect("t in [0, 1]")).collect();
        LimitCurve {
            source: CurveSource::Ode,
            t,
            z,
        }
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Integrates the limit ODE from `t = 1` down to `t = 0` and samples it on
/// `grid_size` equally spaced points.
pub fn solve_limit_ode(grid_size: usize) -> Result<LimitCurve, LimitError> {
    if grid_size < 2 {
        return Err(LimitError::InvalidArgument("grid_size must be >= 2".into()));
    }
    Ok(LimitOde::solve()?.sample(grid_size))
}

/// Right-hand side of the implicit relation as a function of `G >= 1`.
pub fn implicit_rhs(g: f64) -> f64 {
    let r = ((g - 1.0) * (g + 1.0)).max(0.0).sqrt();
    (1.0 + 3.0 * g * g) * (g + r) * (r - 2.0 * g) / (r + 2.0 * g)
}

fn implicit_rhs_derivative(g: f64) -> f64 {
    let r = ((g - 1.0) * (g + 1.0)).max(0.0).sqrt();
    let value = implicit_rhs(g);
    let logd = 6.0 * g / (1.0 + 3.0 * g * g) + 1.0 / r + (2.0 - g / r) / (2.0 * g - r)
        - (g / r + 2.0) / (r + 2.0 * g);
    value * logd
}

/// Solves the implicit relation with `K = -4` for `G` in `[1, 4/t + 1]`
/// and returns `Z = t G`; at `t = 0` the limit `2^(1/3)` is returned.
pub fn implicit_z(t: f64) -> Result<f64, LimitError> {
    if t == 0.0 {
        return Ok(z_at_origin());
    }
    if !(0.0 < t && t <= 1.0) {
        return Err(LimitError::InvalidArgument(format!("t = {t} outside (0, 1]")));
    }
    let target = IMPLICIT_K / (t * t * t);
    let f = |g: f64| implicit_rhs(g) - target;
    let (mut lo, mut hi) = (1.0, 4.0 / t + 1.0);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(t);
    }
    if flo.signum() == fhi.signum() {
        return Err(LimitError::RootNotBracketed { t });
    }
    let mut g = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fg = f(g);
        if fg == 0.0 {
            break;
        }
        if fg.signum() == flo.signum() {
            lo = g;
        } else {
            hi = g;
        }
        let d = implicit_rhs_derivative(g);
        let newton = g - fg / d;
        let next = if d.is_finite() && d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - g).abs() <= 4.0 * f64::EPSILON * g || hi - lo <= 4.0 * f64::EPSILON * hi {
            g = next;
            break;
        }
        g = next;
    }
    Ok(t * g)
}

/// [`implicit_z`] on an equally spaced grid of `[0, 1]`.
pub fn implicit_curve(grid_size: usize) -> Result<LimitCurve, LimitError> {
    if grid_size < 2 {
        return Err(LimitError::InvalidArgument("grid_size must be >= 2".into()));
    }
    let t = grid(grid_size);
    let z = t.iter().map(|&t| implicit_z(t)).collect::<Result<_, _>>()?;
    Ok(LimitCurve {
        source: CurveSource::Implicit,
        t,
        z,
    })
}

/// `A = sqrt(2) Z(0)`, the growth constant of `a_n / sqrt(n)`.
pub fn compute_a() -> f64 {
    let z0 = implicit_z(0.0).expect("t = 0 is always valid");
    std::f64::consts::SQRT_2 * z0
}

/// Outcome of [`eta_consistency_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaCheck {
    pub n: i64,
    pub t: f64,
    pub lambda: f64,
    /// `int_0^t s cos(2 lambda s z(s)) ds`.
    pub eta_direct: f64,
    /// `int_0^t z z' sqrt(1 - s^2/z^2) ds - int_0^t z z' ds`.
    pub eta_closed: f64,
    /// `|z(t)^2 - z(0)^2 + t^2/2 + eta_direct|`.
    pub residual_18: f64,
    /// `|eta_direct - eta_closed|`.
    pub mismatch_29: f64,
}

/// Compares the integral relation for `z^2` and the summed moment series
/// for `eta` along the `n`th scaled separatrix.
pub fn eta_consistency_check(
    n: i64,
    t: f64,
    cfg: &SeparatrixConfig,
) -> Result<EtaCheck, LimitError> {
    let sep = separatrix::scaled_separatrix(n, cfg)?;
    eta_check_on(&sep, t)
}

/// [`eta_consistency_check`] on an already traced separatrix.
pub fn eta_check_on(sep: &ScaledSeparatrix, t: f64) -> Result<EtaCheck, LimitError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(LimitError::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    let lambda = sep.lambda;
    let z = |s: f64| sep.eval(s).expect("s inside traced range");
    let z0 = sep.z0();
    // Panels of at most a quarter period of cos(2 lambda s z) with 16 nodes.
    let z_max = 1.5 * z0;
    let panel = std::f64::consts::PI / (lambda * z_max) / 2.0;
    let rule = CompositeRule::new(16);
    let eta_direct = rule.integrate(|s| s * (2.0 * lambda * s * z(s)).cos(), 0.0, t, panel);
    let eta_closed = rule.integrate(
        |s| {
            let zs = z(s);
            let dz = cosine::rhs_scaled(s, zs, lambda);
            zs * dz * ((1.0 - (s / zs).powi(2)).max(0.0).sqrt() - 1.0)
        },
        0.0,
        t,
        panel,
    );
    if !eta_direct.is_finite() || !eta_closed.is_finite() {
        return Err(LimitError::QuadratureFailure { t });
    }
    let zt = z(t);
    let residual_18 = (zt * zt - z0 * z0 + 0.5 * t * t + eta_direct).abs();
    Ok(EtaCheck {
        n: sep.n,
        t,
        lambda,
        eta_direct,
        eta_closed,
        residual_18,
        mismatch_29: (eta_direct - eta_closed).abs(),
    })
}

/// `sup |z_n(t) - Z(t)|` over `[t_lo, t_hi]`, sampled at sixteen points per
/// oscillation period of the separatrix.
pub fn sup_deviation(
    sep: &ScaledSeparatrix,
    limit: &LimitOde,
    t_lo: f64,
    t_hi: f64,
) -> f64 {
    let period = 2.0 * std::f64::consts::PI / (sep.lambda * z_at_origin() / 1.3);
    let n = (((t_hi - t_lo) / (period / 16.0)).ceil() as usize).max(2);
    (0..=n)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64)
        .map(|t| (sep.eval(t).unwrap() - limit.eval(t).unwrap()).abs())
        .fold(0.0, f64::max)
}
