//! Eigenvalues of `y' = cos(pi x y)`: the `y(0)` intercepts of the
//! separatrices.
//!
//! Two independent routes are provided. Forward bisection looks for the
//! initial value where the number of maxima jumps from `n` to `n + 1`.
//! Backward tracing starts on the odd-`m` asymptotic tail far out in the
//! decaying region, where the separatrix is attracting for decreasing `x`,
//! and integrates back to `x = 0`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cosine::{self, AsymptoticTail, CosineError};
use crate::extrapolate::{self, ExtrapolationError, ExtrapolationResult};
use crate::ode::{self, ExtremumKind, IntegratorConfig, OdeError, Trajectory};

/// Reference `y(0)` intercepts `(n, a_n)` of the separatrices `n = -3..=6`.
pub const REFERENCE_INTERCEPTS: [(i64, f64); 10] = [
    (-3, -3.231360),
    (-2, -2.698369),
    (-1, -2.032651),
    (0, -1.016702),
    (1, 1.602573),
    (2, 2.388358),
    (3, 2.976682),
    (4, 3.467542),
    (5, 3.897484),
    (6, 4.284674),
];

/// `2^(5/6)`, the large-`n` growth constant of `a_n / sqrt(n)`.
pub fn growth_constant() -> f64 {
    2f64.powf(5.0 / 6.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatrixError {
    #[error("classification of a = {a} is undecidable (x y - 1/2 = {estimate} at x = {x})")]
    Undecidable { a: f64, x: f64, estimate: f64 },
    #[error("no class change n -> n+1 for n = {n} in bracket [{lo}, {hi}]")]
    BracketFailure { n: i64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Cosine(#[from] CosineError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Extrapolation(#[from] ExtrapolationError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatrixConfig {
    pub ode: IntegratorConfig,
    /// Width below which the bisection stops.
    pub bisect_tol: f64,
    /// Classification is refused within this distance of a known eigenvalue.
    pub sep_guard: f64,
    pub known_eigenvalues: Vec<f64>,
}

impl Default for SeparatrixConfig {
    fn default() -> Self {
        Self {
            ode: IntegratorConfig::default(),
            bisect_tol: 1e-10,
            sep_guard: 1e-9,
            known_eigenvalues: Vec::new(),
        }
    }
}

impl SeparatrixConfig {
    pub fn with_ode(ode: IntegratorConfig) -> Self {
        Self {
            ode,
            ..Self::default()
        }
    }
}

/// How a solution with `y(0) = a` behaves on `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionClass {
    pub n_maxima: usize,
    /// Even bundle index `m` with `x y -> m + 1/2`.
    pub bundle_m: i64,
    /// Location of the last maximum, if any.
    pub x_turn: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bisect,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueRecord {
    pub n: i64,
    pub a_n: f64,
    pub method: Method,
    /// `|bisect - backward|` when both routes were run.
    pub residual: Option<f64>,
    /// Odd tail index `2n - 1`.
    pub tail_m: i64,
}

/// End of the counting window, `max(12, 2.5 |a|)`.
pub fn classification_window(a: f64) -> f64 {
    12f64.max(2.5 * a.abs())
}

fn count_maxima(traj: &Trajectory<1>) -> (usize, Option<f64>) {
    let maxima: Vec<f64> = ode::find_extrema(traj)
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .map(|e| e.x)
        .collect();
    (maxima.len(), maxima.last().copied())
}

/// Counts maxima on `[0, max(12, 2.5|a|)]` and reads off the bundle index.
pub fn classify_initial_condition(
    a: f64,
    cfg: &SeparatrixConfig,
) -> Result<SolutionClass, SeparatrixError> {
    if let Some(&e) = cfg
        .known_eigenvalues
        .iter()
        .find(|&&e| (e - a).abs() < cfg.sep_guard)
    {
        return Err(SeparatrixError::Undecidable {
            a,
            x: 0.0,
            estimate: e,
        });
    }
    let x_max = classification_window(a);
    let traj = cosine::solve(0.0, a, x_max, &cfg.ode)?;
    let (n_maxima, x_turn) = count_maxima(&traj);
    let (x, y) = traj.end();
    let estimate = x * y[0] - 0.5;
    let m = estimate.round();
    if (estimate - m).abs() > 0.25 || (m as i64).rem_euclid(2) != 0 {
        return Err(SeparatrixError::Undecidable { a, x, estimate });
    }
    Ok(SolutionClass {
        n_maxima,
        bundle_m: m as i64,
        x_turn,
    })
}

fn maxima_count(a: f64, cfg: &SeparatrixConfig) -> Result<usize, SeparatrixError> {
    let traj = cosine::solve(0.0, a, classification_window(a), &cfg.ode)?;
    Ok(count_maxima(&traj).0)
}

/// Bisection on the boundary between the classes with `n` and `n + 1`
/// maxima.
///
/// The bracket is seeded at `2^(5/6) sqrt(n) +- 1` and widened by 0.5 on
/// either side while it fails to straddle the jump.
pub fn find_eigenvalue_bisect(
    n: i64,
    cfg: &SeparatrixConfig,
) -> Result<EigenvalueRecord, SeparatrixError> {
    if n < 1 {
        return Err(SeparatrixError::InvalidArgument(format!(
            "bisection needs n >= 1, got {n}"
        )));
    }
    let nu = n as usize;
    let center = growth_constant() * (n as f64).sqrt();
    let (mut lo, mut hi) = ((center - 1.0).max(0.0), center + 1.0);
    let mut expansions = 0;
    while maxima_count(lo, cfg)? > nu {
        lo -= 0.5;
        expansions += 1;
        if expansions > 40 {
            return Err(SeparatrixError::BracketFailure { n, lo, hi });
        }
    }
    while maxima_count(hi, cfg)? <= nu {
        hi += 0.5;
        expansions += 1;
        if expansions > 40 {
            return Err(SeparatrixError::BracketFailure { n, lo, hi });
        }
    }
    while hi - lo > cfg.bisect_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if maxima_count(mid, cfg)? <= nu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EigenvalueRecord {
        n,
        a_n: 0.5 * (lo + hi),
        method: Method::Bisect,
        residual: None,
        tail_m: 2 * n - 1,
    })
}

/// Default starting abscissa for backward tracing, `max(20, 3 sqrt(|n|))`.
pub fn backward_start(n: i64) -> f64 {
    20f64.max(3.0 * (n.unsigned_abs().max(1) as f64).sqrt())
}

/// Traces the `n`th separatrix from the tail `m = 2n - 1` back to `x = 0`.
pub fn trace_separatrix_backward(
    n: i64,
    cfg: &SeparatrixConfig,
) -> Result<(EigenvalueRecord, Trajectory<1>), SeparatrixError> {
    trace_separatrix_from(n, backward_start(n), cfg)
}

/// [`trace_separatrix_backward`] with an explicit starting abscissa.
pub fn trace_separatrix_from(
    n: i64,
    x_start: f64,
    cfg: &SeparatrixConfig,
) -> Result<(EigenvalueRecord, Trajectory<1>), SeparatrixError> {
    let tail = AsymptoticTail::separatrix(n).optimally_truncated(x_start)?;
    let (y_start, _) = tail.eval(x_start)?;
    let traj = cosine::solve(x_start, y_start, 0.0, &cfg.ode)?;
    let a_n = traj.end().1[0];
    Ok((
        EigenvalueRecord {
            n,
            a_n,
            method: Method::Backward,
            residual: None,
            tail_m: 2 * n - 1,
        },
        traj,
    ))
}

/// The `n`th separatrix in scaled variables `t = x / s`, `z = y / s` with
/// `s = sqrt(2n - 1/2)`, so that `z' = cos(lambda t z)`.
#[derive(Debug, Clone)]
pub struct ScaledSeparatrix {
    pub n: i64,
    pub scale: f64,
    pub lambda: f64,
    traj: Trajectory<1>,
}

impl ScaledSeparatrix {
    pub fn z0(&self) -> f64 {
        self.traj.end().1[0] / self.scale
    }

    /// Largest `t` covered by the traced curve.
    pub fn t_max(&self) -> f64 {
        self.traj.start().0 / self.scale
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        self.traj.eval(t * self.scale).map(|y| y[0] / self.scale)
    }

    /// `z'(t)`, which equals `y'(x)` at `x = s t`.
    pub fn eval_derivative(&self, t: f64) -> Option<f64> {
        self.eval(t).map(|z| cosine::rhs_scaled(t, z, self.lambda))
    }

    pub fn trajectory(&self) -> &Trajectory<1> {
        &self.traj
    }

    /// `(t, z(t))` at the given grid points; points beyond `t_max` are
    /// dropped.
    pub fn sample(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter()
            .filter_map(|&t| self.eval(t).map(|z| (t, z)))
            .collect()
    }
}

/// Backward-traced `n`th separatrix in scaled variables.
pub fn scaled_separatrix(
    n: i64,
    cfg: &SeparatrixConfig,
) -> Result<ScaledSeparatrix, SeparatrixError> {
    if n < 1 {
        return Err(SeparatrixError::InvalidArgument(format!(
            "scaled separatrix needs n >= 1, got {n}"
        )));
    }
    let (_, traj) = trace_separatrix_backward(n, cfg)?;
    Ok(ScaledSeparatrix {
        n,
        scale: (2.0 * n as f64 - 0.5).sqrt(),
        lambda: cosine::lambda_for(n),
        traj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSelection {
    Bisect,
    Backward,
    Both,
}

/// Eigenvalues for `n_min..=n_max`, ordered by `n`.
///
/// Bisection is only defined for `n >= 1`; with [`MethodSelection::Both`]
/// both records of an index carry the cross-method discrepancy.
pub fn eigenvalue_table(
    n_min: i64,
    n_max: i64,
    methods: MethodSelection,
    cfg: &SeparatrixConfig,
) -> Result<Vec<EigenvalueRecord>, SeparatrixError> {
    if n_min > n_max {
        return Err(SeparatrixError::InvalidArgument(format!(
            "empty range {n_min}..={n_max}"
        )));
    }
    let rows: Vec<Result<Vec<EigenvalueRecord>, SeparatrixError>> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let back = match methods {
                MethodSelection::Bisect => None,
                _ => Some(trace_separatrix_backward(n, cfg)?.0),
            };
            let bis = match methods {
                MethodSelection::Backward => None,
                _ if n < 1 => None,
                _ => Some(find_eigenvalue_bisect(n, cfg)?),
            };
            let residual = match (&back, &bis) {
                (Some(b), Some(s)) => Some((b.a_n - s.a_n).abs()),
                _ => None,
            };
            Ok([bis, back]
                .into_iter()
                .flatten()
                .map(|r| EigenvalueRecord { residual, ..r })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Correction exponents of `z_n(0) - 2^(1/3)`: powers of `lambda^(-2/3)`
/// from the turning point, starting at `n^(-4/3)`.
pub const GROWTH_EXPONENTS: [f64; 3] = [4.0 / 3.0, 5.0 / 3.0, 2.0];

/// Richardson estimate of `A = lim sqrt(2) a_n / sqrt(2n - 1/2)` from
/// backward-traced eigenvalues at the given (increasing) indices.
pub fn estimate_growth_constant(
    indices: &[i64],
    stages: usize,
    cfg: &SeparatrixConfig,
) -> Result<ExtrapolationResult, SeparatrixError> {
    if stages > GROWTH_EXPONENTS.len() {
        return Err(SeparatrixError::InvalidArgument(format!(
            "at most {} stages, got {stages}",
            GROWTH_EXPONENTS.len()
        )));
    }
    if indices.iter().any(|&n| n < 1) {
        return Err(SeparatrixError::InvalidArgument("indices must be >= 1".into()));
    }
    let values = indices
        .par_iter()
        .map(|&n| {
            let a = trace_separatrix_backward(n, cfg)?.0.a_n;
            Ok(std::f64::consts::SQRT_2 * a / (2.0 * n as f64 - 0.5).sqrt())
        })
        .collect::<Result<Vec<f64>, SeparatrixError>>()?;
    let ns: Vec<f64> = indices.iter().map(|&n| n as f64).collect();
    Ok(extrapolate::richardson(&ns, &values, &GROWTH_EXPONENTS, stages)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SeparatrixConfig {
        SeparatrixConfig::default()
    }

    #[test]
    fn classes_between_reference_intercepts() {
        let c = classify_initial_condition(0.5, &cfg()).unwrap();
        assert_eq!(c.n_maxima, 1);
        assert_eq!(c.bundle_m % 2, 0);
        let c = classify_initial_condition(2.0, &cfg()).unwrap();
        assert_eq!(c.n_maxima, 2);
        assert!(c.x_turn.unwrap() > 0.0);
    }

    #[test]
    fn reflection_symmetry_of_negative_start() {
        // w(x) = -y(-x) solves the same equation, so y(0) = -1.5 traced to
        // negative x mirrors y(0) = 1.5 traced to positive x.
        let c = cfg();
        let left = cosine::solve(0.0, -1.5, -8.0, &c.ode).unwrap();
        let right = cosine::solve(0.0, 1.5, 8.0, &c.ode).unwrap();
        for i in 0..=80 {
            let x = 0.1 * i as f64;
            let l = left.eval(-x).unwrap()[0];
            let r = right.eval(x).unwrap()[0];
            assert!((l + r).abs() < 1e-8, "x = {x}: {l} vs {r}");
        }
        let direct = classify_initial_condition(-1.5, &c).unwrap();
        assert_eq!(direct.bundle_m % 2, 0);
    }

    #[test]
    fn near_separatrix_is_refused() {
        let c = SeparatrixConfig {
            known_eigenvalues: vec![1.602573],
            ..cfg()
        };
        assert!(matches!(
            classify_initial_condition(1.602573 + 1e-10, &c),
            Err(SeparatrixError::Undecidable { .. })
        ));
    }

    #[test]
    fn bisection_rejects_nonpositive_index() {
        assert!(find_eigenvalue_bisect(0, &cfg()).is_err());
    }

    #[test]
    fn empty_table_range() {
        assert!(eigenvalue_table(3, 2, MethodSelection::Both, &cfg()).is_err());
    }
}
