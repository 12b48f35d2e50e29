//! Painlevé I, `y'' = y^2 + x`, integrated from `x = 0` toward `-inf`.
//!
//! Real solutions have movable double poles `y ~ 6/(x - x0)^2`. The
//! integrator stops once `y` reaches `y_match`, fits the two free constants
//! `(x0, h)` of the local Laurent series to the observed `(y, y')`, and
//! restarts on the far side of the pole from the same series.
//!
//! A solution either ends up oscillating about the stable curve `-sqrt(-x)`
//! after finitely many poles, or keeps passing through poles. The initial
//! slopes separating these fates are the eigenvalues.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::extrapolate::{self, ExtrapolationError, ExtrapolationResult};
use crate::ode::{self, IntegratorConfig, OdeError, State, Trajectory};
use crate::stats::linear_fit;

/// Slopes `y'(0)` of the first twelve positive eigencurves for `y(0) = 1`.
pub const REFERENCE_EIGENVALUES: [f64; 12] = [
    0.231955, 3.980669, 6.257998, 8.075911, 9.654843, 11.078201, 12.389217, 13.613878,
    14.769304, 15.867511, 16.917331, 17.925488,
];

/// Reference growth constant in `a_n ~ C n^(3/5)`.
pub const REFERENCE_C: f64 = 4.28373;

/// Stands in for the pole count of a solution that never stops hitting poles.
pub const INFINITE_POLES: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PainleveError {
    #[error("Laurent match diverged near x = {x} (y = {y})")]
    MatchDiverged { x: f64, y: f64 },
    #[error("fate of a = {a} undecided by x = {x_min}")]
    Undecided { a: f64, x_min: f64 },
    #[error("only {found} usable extrema (need {needed})")]
    InsufficientExtrema { found: usize, needed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Extrapolation(#[from] ExtrapolationError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PainleveConfig {
    #[serde(skip)]
    pub ode: IntegratorConfig,
    pub y0: f64,
    /// `|y|` at which a pole is matched. Near a pole the regular part of
    /// the solution, which carries `h`, is swamped by `6/s^2`; matching at
    /// `1e3` leaves `h` uncertain enough to move `a_3` by `2e-3`.
    pub y_match: f64,
    /// `|y|` at which integration resumes past the pole.
    pub y_restart: f64,
    /// Laurent terms kept beyond `6/s^2`.
    pub series_terms: usize,
    pub x_min: f64,
    pub scan_step: f64,
    pub bisect_tol: f64,
}

impl Default for PainleveConfig {
    fn default() -> Self {
        Self {
            ode: IntegratorConfig::with_tolerances(1e-12, 1e-14),
            y0: 1.0,
            y_match: 1e2,
            y_restart: 1e2,
            series_terms: 20,
            x_min: -60.0,
            scan_step: 0.05,
            bisect_tol: 1e-7,
        }
    }
}

impl PainleveConfig {
    pub fn with_ode(ode: IntegratorConfig) -> Self {
        Self { ode, ..Self::default() }
    }

    /// Distance from the pole at which integration resumes.
    pub fn restart_offset(&self) -> f64 {
        (6.0 / self.y_restart).sqrt()
    }
}

pub fn painleve_rhs(x: f64, s: &State<2>) -> State<2> {
    [s[1], s[0] * s[0] + x]
}

/// Laurent series `y = sum_j c_j s^(j-2)`, `s = x - x0`, about a double pole.
///
/// `c_0 = 6`, `c_1 = c_2 = c_3 = 0`, `c_4 = -x0/10`, `c_5 = -1/6`, `c_6 = h`
/// free; beyond that `(j - 6)(j + 1) c_j = sum_{0<i<j} c_i c_(j-i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    pub x0: f64,
    pub h: f64,
    pub coeffs: Vec<f64>,
    // Derivatives of the coefficients with respect to x0 and h.
    d_x0: Vec<f64>,
    d_h: Vec<f64>,
}

impl LaurentSeries {
    pub fn new(x0: f64, h: f64, terms: usize) -> Self {
        let len = terms.max(6) + 1;
        let mut c = vec![0.0; len];
        let mut dx = vec![0.0; len];
        let mut dh = vec![0.0; len];
        c[0] = 6.0;
        c[4] = -x0 / 10.0;
        dx[4] = -0.1;
        c[5] = -1.0 / 6.0;
        c[6] = h;
        dh[6] = 1.0;
        for j in 7..len {
            let den = ((j - 6) * (j + 1)) as f64;
            let (mut s, mut sx, mut sh) = (0.0, 0.0, 0.0);
            for i in 1..j {
                s += c[i] * c[j - i];
                sx += 2.0 * c[i] * dx[j - i];
                sh += 2.0 * c[i] * dh[j - i];
            }
            c[j] = s / den;
            dx[j] = sx / den;
            dh[j] = sh / den;
        }
        Self { x0, h, coeffs: c, d_x0: dx, d_h: dh }
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `(y, y')` at offset `s` from the pole.
    pub fn eval_offset(&self, s: f64) -> State<2> {
        let (y, v, _, _, _, _) = self.eval_with_partials(s);
        [y, v]
    }

    pub fn eval(&self, x: f64) -> State<2> {
        self.eval_offset(x - self.x0)
    }

    /// `y'' - y^2 - x` of the truncated series.
    pub fn ode_residual(&self, s: f64) -> f64 {
        let (mut y, mut ypp) = (0.0, 0.0);
        for (j, &c) in self.coeffs.iter().enumerate() {
            let p = j as i32 - 2;
            y += c * s.powi(p);
            ypp += c * (p * (p - 1)) as f64 * s.powi(p - 2);
        }
        ypp - y * y - (self.x0 + s)
    }

    /// Largest term magnitude relative to `6/s^2` among the last two terms.
    pub fn tail_ratio(&self, s: f64) -> f64 {
        let n = self.coeffs.len();
        let lead = 6.0 / (s * s);
        (n - 2..n)
            .map(|j| (self.coeffs[j] * s.powi(j as i32 - 2)).abs() / lead)
            .fold(0.0, f64::max)
    }

    // (y, v, dy/dx0, dv/dx0, dy/dh, dv/dh) at fixed x.
    fn eval_with_partials(&self, s: f64) -> (f64, f64, f64, f64, f64, f64) {
        let (mut y, mut v, mut yx, mut vx, mut yh, mut vh) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut a = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate() {
            let p = j as i32 - 2;
            let sp = s.powi(p);
            let dsp = p as f64 * s.powi(p - 1);
            y += c * sp;
            v += c * dsp;
            yx += self.d_x0[j] * sp;
            vx += self.d_x0[j] * dsp;
            yh += self.d_h[j] * sp;
            vh += self.d_h[j] * dsp;
            a += c * p as f64 * (p - 1) as f64 * s.powi(p - 2);
        }
        // s = x - x0, so moving the pole shifts s by -1.
        (y, v, yx - v, vx - a, yh, vh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleEvent {
    pub x0: f64,
    pub h: f64,
    /// Relative mismatch of `(y, y')` after the Newton solve.
    pub match_residual: f64,
    pub x_match: f64,
}

/// Fits `(x0, h)` so the series reproduces the observed `(y, v)` at `x`.
pub fn laurent_match(x: f64, y: f64, v: f64, terms: usize) -> Result<(PoleEvent, LaurentSeries), PainleveError> {
    let diverged = || PainleveError::MatchDiverged { x, y };
    if !(y > 0.0) || v == 0.0 || !y.is_finite() || !v.is_finite() {
        return Err(diverged());
    }
    let mut x0 = x + 2.0 * y / v;
    let mut h = 0.0;
    let scale = |f: (f64, f64)| ((f.0 / y).powi(2) + (f.1 / v).powi(2)).sqrt();
    for _ in 0..50 {
        let series = LaurentSeries::new(x0, h, terms);
        let (ys, vs, yx, vx, yh, vh) = series.eval_with_partials(x - x0);
        let (f1, f2) = ((ys - y) / y, (vs - v) / v);
        let (a11, a12, a21, a22) = (yx / y, yh / y, vx / v, vh / v);
        let det = a11 * a22 - a12 * a21;
        if !det.is_finite() || det == 0.0 {
            return Err(diverged());
        }
        let dx0 = (f1 * a22 - f2 * a12) / det;
        let dh = (a11 * f2 - a21 * f1) / det;
        x0 -= dx0;
        h -= dh;
        if !x0.is_finite() || !h.is_finite() || (x0 - x).abs() > 1.0 {
            return Err(diverged());
        }
        if dx0.abs() <= 1e-15 * (1.0 + x0.abs()) && dh.abs() <= 1e-12 * (1.0 + h.abs()) {
            break;
        }
    }
    let series = LaurentSeries::new(x0, h, terms);
    let [ys, vs] = series.eval(x);
    let match_residual = scale((ys - y, vs - v));
    if match_residual > 1e-8 || series.tail_ratio(x - x0) > 1e-10 {
        return Err(diverged());
    }
    Ok((PoleEvent { x0, h, match_residual, x_match: x }, series))
}

/// Solution of Painlevé I continued through its poles.
#[derive(Debug, Clone)]
pub struct PoleTrajectory {
    pub a: f64,
    pub y0: f64,
    pub segments: Vec<Trajectory<2>>,
    pub poles: Vec<PoleEvent>,
}

impl PoleTrajectory {
    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    pub fn end(&self) -> (f64, State<2>) {
        self.segments.last().expect("at least one segment").end()
    }

    /// State at `x`, or `None` inside a pole gap or outside the range.
    pub fn eval(&self, x: f64) -> Option<State<2>> {
        self.segments.iter().find(|s| s.contains(x)).and_then(|s| s.eval(x))
    }

    /// Segment after the last pole.
    pub fn final_segment(&self) -> &Trajectory<2> {
        self.segments.last().expect("at least one segment")
    }

    /// `(x, y)` samples of every segment, each segment closed by a NaN row
    /// so plots break at the poles.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for seg in &self.segments {
            out.extend(seg.samples().map(|(x, s)| (x, s[0])));
            out.push((f64::NAN, f64::NAN));
        }
        out.pop();
        out
    }
}

/// Continues `state` at `x` to `x_end`, passing through poles.
pub fn continue_through_poles(
    x: f64,
    state: State<2>,
    x_end: f64,
    cfg: &PainleveConfig,
) -> Result<(Vec<Trajectory<2>>, Vec<PoleEvent>), PainleveError> {
    if cfg.y_match <= 0.0 || cfg.y_restart <= 0.0 {
        return Err(PainleveError::InvalidArgument("pole thresholds must be positive".into()));
    }
    let dir = if x_end < x { -1.0 } else { 1.0 };
    let delta = cfg.restart_offset();
    let (mut x, mut state) = (x, state);
    let mut segments = Vec::new();
    let mut poles = Vec::new();
    loop {
        // Only a rising y (along the direction of integration) can be
        // heading into a pole.
        let event = |_: f64, s: &State<2>| if dir * s[1] > 0.0 { s[0] - cfg.y_match } else { -1.0 };
        let (traj, hit) = ode::integrate_until(painleve_rhs, x, state, x_end, &cfg.ode, event)?;
        segments.push(traj);
        let Some(hit) = hit else { break };
        let (pole, series) = laurent_match(hit.x, hit.y[0], hit.y[1], cfg.series_terms)?;
        x = pole.x0 + dir * delta;
        poles.push(pole);
        if dir * (x_end - x) <= 0.0 {
            break;
        }
        state = series.eval(x);
    }
    Ok((segments, poles))
}

/// Integrates `y(0) = cfg.y0`, `y'(0) = a` to `x_end < 0`.
pub fn integrate_with_poles(a: f64, x_end: f64, cfg: &PainleveConfig) -> Result<PoleTrajectory, PainleveError> {
    if !(x_end < 0.0) {
        return Err(PainleveError::InvalidArgument(format!("x_end = {x_end} must be negative")));
    }
    let (segments, poles) = continue_through_poles(0.0, [cfg.y0, a], x_end, cfg)?;
    Ok(PoleTrajectory { a, y0: cfg.y0, segments, poles })
}

/// Poles an eigencurve crosses before it settles onto `+sqrt(-x)`, and the
/// first `x` where `|y - sqrt(-x)| < tol`.
///
/// An eigencurve computed in floating point only tracks `+sqrt(-x)` for a
/// while before the unstable mode takes over; poles after that point belong
/// to the departure, not to the curve.
pub fn poles_before_tracking(sol: &PoleTrajectory, tol: f64) -> Option<(usize, f64)> {
    let (x_end, _) = sol.end();
    let steps = (-x_end / 0.01).floor() as usize;
    let x_track = (1..=steps).map(|i| -0.01 * i as f64).find(|&x| {
        sol.eval(x)
            .is_some_and(|s| (s[0] - (-x).sqrt()).abs() < tol && s[1].abs() < 1.0)
    })?;
    Some((sol.poles.iter().filter(|p| p.x0 > x_track).count(), x_track))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lock {
    Oscillatory,
    PoleChain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FateReport {
    pub a: f64,
    /// [`INFINITE_POLES`] for a pole chain.
    pub pole_count: usize,
    pub poles_seen: usize,
    pub lock: Lock,
    /// First of the straddling extrema that established the lock.
    pub lock_onset: Option<f64>,
    /// Extrema `(x, y + sqrt(-x))` of the final segment.
    pub extrema: Vec<(f64, f64)>,
}

impl FateReport {
    /// Quantity whose jumps mark eigenvalues.
    pub fn key(&self) -> (Lock, usize) {
        (self.lock, self.pole_count)
    }
}

/// Extrema of `u = y + sqrt(-x)` on `traj` for `x < x_hi <= 0`.
pub fn deviation_extrema(traj: &Trajectory<2>, x_hi: f64) -> Vec<(f64, f64)> {
    let du = |x: f64| traj.eval(x).map(|s| s[1] - 0.5 / (-x).sqrt());
    let mut probe: Vec<f64> = Vec::new();
    let xs = traj.xs();
    for w in xs.windows(2) {
        probe.push(w[0]);
        probe.push(0.5 * (w[0] + w[1]));
    }
    probe.extend(xs.last());
    probe.retain(|&x| x < x_hi && x < 0.0);
    let mut out = Vec::new();
    for w in probe.windows(2) {
        let (Some(d0), Some(d1)) = (du(w[0]), du(w[1])) else { continue };
        if d0 == 0.0 || d0.signum() == d1.signum() {
            continue;
        }
        let (mut lo, mut hi, mut dlo) = (w[0], w[1], d0);
        while (hi - lo).abs() > 1e-12 * (1.0 + lo.abs()) {
            let mid = 0.5 * (lo + hi);
            let Some(dm) = du(mid) else { break };
            if dm.signum() == dlo.signum() {
                lo = mid;
                dlo = dm;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        if let Some(s) = traj.eval(x) {
            out.push((x, s[0] + (-x).sqrt()));
        }
    }
    out
}

/// Integrates to `cfg.x_min` and decides how the solution ends.
pub fn classify_fate(a: f64, cfg: &PainleveConfig) -> Result<FateReport, PainleveError> {
    let sol = integrate_with_poles(a, cfg.x_min, cfg)?;
    fate_of(&sol, cfg).ok_or(PainleveError::Undecided { a, x_min: cfg.x_min })
}

fn fate_of(sol: &PoleTrajectory, cfg: &PainleveConfig) -> Option<FateReport> {
    let seg = sol.final_segment();
    let extrema = deviation_extrema(seg, 0.0);
    let poles_seen = sol.pole_count();
    // Four consecutive extrema on alternating sides of -sqrt(-x) with a
    // shrinking envelope on each side.
    let lock_onset = if extrema.len() >= 4 {
        let tail = &extrema[extrema.len() - 4..];
        let straddle = tail.windows(2).all(|w| w[0].1 * w[1].1 < 0.0);
        let decaying = tail.windows(3).all(|w| w[2].1.abs() < w[0].1.abs());
        (straddle && decaying).then_some(tail[0].0)
    } else {
        None
    };
    let (lock, pole_count) = if lock_onset.is_some() {
        (Lock::Oscillatory, poles_seen)
    } else if sol.poles.last().is_some_and(|p| p.x0 < cfg.x_min + 10.0) {
        (Lock::PoleChain, INFINITE_POLES)
    } else {
        return None;
    };
    Some(FateReport { a: sol.a, pole_count, poles_seen, lock, lock_onset, extrema })
}

fn bisect_fate(lo: f64, hi: f64, key_lo: (Lock, usize), cfg: &PainleveConfig) -> Result<f64, PainleveError> {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > cfg.bisect_tol {
        let mid = 0.5 * (lo + hi);
        if classify_fate(mid, cfg)?.key() == key_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fate discontinuities of `a -> classify_fate(a)` in `[a_lo, a_hi]`.
pub fn fate_discontinuities(a_lo: f64, a_hi: f64, cfg: &PainleveConfig) -> Result<Vec<f64>, PainleveError> {
    if !(a_hi > a_lo) || !(cfg.scan_step > 0.0) {
        return Err(PainleveError::InvalidArgument("empty scan".into()));
    }
    let steps = ((a_hi - a_lo) / cfg.scan_step).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| (a_lo + i as f64 * cfg.scan_step).min(a_hi)).collect();
    let keys: Vec<(Lock, usize)> = grid
        .par_iter()
        .map(|&a| classify_fate(a, cfg).map(|f| f.key()))
        .collect::<Result<_, _>>()?;
    let cells: Vec<usize> = (0..grid.len() - 1).filter(|&i| keys[i] != keys[i + 1]).collect();
    cells
        .par_iter()
        .map(|&i| bisect_fate(grid[i], grid[i + 1], keys[i], cfg))
        .collect()
}

/// First `count` positive eigenvalues, by scanning upward from 0.
pub fn painleve_eigenvalues(count: usize, cfg: &PainleveConfig) -> Result<Vec<f64>, PainleveError> {
    if count == 0 || count > 20 {
        return Err(PainleveError::InvalidArgument(format!("count = {count} outside 1..=20")));
    }
    let mut found = Vec::new();
    let mut lo = 0.0;
    // a_n grows like n^(3/5); scan in windows until enough are found.
    while found.len() < count {
        let hi = lo + 5.0;
        found.extend(fate_discontinuities(lo, hi, cfg)?);
        lo = hi;
        if lo > 200.0 {
            return Err(PainleveError::InvalidArgument("eigenvalue scan ran past a = 200".into()));
        }
    }
    found.truncate(count);
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationFit {
    /// `p` in `|y + sqrt(-x)| ~ c (-x)^p`.
    pub amplitude_exponent: f64,
    /// Coefficient of `(-x)^(5/4)` in the phase.
    pub phase_coefficient: f64,
    pub extrema_used: usize,
}

/// Fits the decay and phase of the oscillation about `-sqrt(-x)` using the
/// extrema of the final segment with `x <= x_hi`.
///
/// The amplitude is half the distance between consecutive extrema, which
/// cancels the slow drift of the oscillation centre. Consecutive extrema
/// are half a period apart, so the phase of extremum `k` is `k pi`.
pub fn fit_oscillation_envelope(sol: &PoleTrajectory, x_hi: f64) -> Result<OscillationFit, PainleveError> {
    let ext: Vec<(f64, f64)> = deviation_extrema(sol.final_segment(), x_hi);
    if ext.len() < 8 {
        return Err(PainleveError::InsufficientExtrema { found: ext.len(), needed: 8 });
    }
    let amp = ext.windows(2).map(|w| {
        let x = 0.5 * (w[0].0 + w[1].0);
        ((-x).ln(), (0.5 * (w[0].1 - w[1].1).abs()).ln())
    });
    let (amplitude_exponent, _) = linear_fit(amp);
    let phase = ext
        .iter()
        .enumerate()
        .map(|(k, &(x, _))| ((-x).powf(1.25), k as f64 * std::f64::consts::PI));
    let (phase_coefficient, _) = linear_fit(phase);
    Ok(OscillationFit { amplitude_exponent, phase_coefficient, extrema_used: ext.len() })
}

/// Exact phase coefficient `(4/5) sqrt(2)`.
pub fn phase_coefficient() -> f64 {
    0.8 * std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub c: f64,
    pub extrapolation: ExtrapolationResult,
    /// Least-squares slope of `ln a_n` against `ln n` over `n = 6..=12`
    /// (or whatever part of that range is available).
    pub loglog_slope: f64,
    /// Local exponent of the leading correction to `a_n / n^(3/5)`, from
    /// `n = 3, 6, 12` (NaN when unavailable).
    pub correction_exponent: f64,
    /// `(17/5) 2^(1/3)`, quoted for comparison only.
    pub nearby_closed_form: f64,
}

/// Extrapolates `a_n / n^(3/5)` for `eigs = [a_1, a_2, ...]` using all `n >= 4`
/// and integer correction exponents, three stages.
pub fn estimate_c(eigs: &[f64]) -> Result<GrowthEstimate, PainleveError> {
    if eigs.len() < 8 {
        return Err(PainleveError::InvalidArgument(format!("{} eigenvalues, need >= 8", eigs.len())));
    }
    let scaled = |n: usize| eigs[n - 1] / (n as f64).powf(0.6);
    let ns: Vec<f64> = (4..=eigs.len()).map(|n| n as f64).collect();
    let vals: Vec<f64> = (4..=eigs.len()).map(scaled).collect();
    let stages = 3.min(ns.len() - 1);
    let extrapolation = extrapolate::richardson(&ns, &vals, &extrapolate::integer_exponents(stages), stages)?;
    let (loglog_slope, _) = linear_fit((6..=eigs.len().min(12)).map(|n| ((n as f64).ln(), eigs[n - 1].ln())));
    let correction_exponent = if eigs.len() >= 12 {
        extrapolate::fit_leading_exponent([scaled(3), scaled(6), scaled(12)], 2.0)
    } else {
        f64::NAN
    };
    Ok(GrowthEstimate {
        c: extrapolation.limit,
        extrapolation,
        loglog_slope,
        correction_exponent,
        nearby_closed_form: 3.4 * 2f64.cbrt(),
    })
}
