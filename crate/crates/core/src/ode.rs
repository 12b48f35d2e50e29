//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! The integrator works on fixed-size states `[f64; N]`, which covers the
//! scalar problems (`N = 1`) and the second-order Painlevé system written in
//! first-order form (`N = 2`). Every accepted step keeps the coefficients of
//! the pair's continuous extension, so a [`Trajectory`] can be evaluated
//! anywhere inside the integrated interval.
//!
//! Step size selection uses the PI controller of Hairer, Nørsett and Wanner
//! with `beta = 0.04`.

use thiserror::Error;

/// State vector of an `N`-dimensional first-order system.
pub type State<const N: usize> = [f64; N];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("integration interval is empty (x0 == x1 == {0})")]
    EmptyInterval(f64),
    #[error("step limit of {steps} exceeded at x = {x}")]
    StepLimitExceeded { x: f64, steps: usize },
    #[error("state became non-finite near x = {x}")]
    NonFiniteState { x: f64 },
}

/// Tolerances and step limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Magnitude of the first trial step.
    pub initial_step: f64,
    /// Largest step magnitude the controller may take.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: 1e-3,
            max_step: 0.5,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    /// Same configuration with both tolerances multiplied by `factor`.
    pub fn scale_tolerances(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }

    pub fn with_max_step(&self, max_step: f64) -> Self {
        Self { max_step, ..*self }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        let bad = |what: &str| Err(OdeError::InvalidConfig(what.to_string()));
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol must be positive");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MAX_GROWTH: f64 = 10.0;
const MAX_SHRINK: f64 = 5.0;

/// Interpolation data for one accepted step.
#[derive(Debug, Clone, Copy)]
struct DenseStep<const N: usize> {
    x0: f64,
    h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn theta(&self, x: f64) -> f64 {
        (x - self.x0) / self.h
    }

    fn eval(&self, x: f64) -> State<N> {
        let t = self.theta(x);
        let t1 = 1.0 - t;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| r1[i] + t * (r2[i] + t1 * (r3[i] + t * (r4[i] + t1 * r5[i]))))
    }

    fn eval_derivative(&self, x: f64) -> State<N> {
        let t = self.theta(x);
        let t1 = 1.0 - t;
        let [_, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            (r2[i]
                + (1.0 - 2.0 * t) * r3[i]
                + t * (2.0 - 3.0 * t) * r4[i]
                + 2.0 * t * t1 * (1.0 - 2.0 * t) * r5[i])
                / self.h
        })
    }
}

/// Sampled solution of an initial value problem.
///
/// Samples are the accepted step endpoints; between them the solution is
/// reconstructed from the pair's fourth-order interpolant.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    xs: Vec<f64>,
    ys: Vec<State<N>>,
    dys: Vec<State<N>>,
    steps: Vec<DenseStep<N>>,
    direction: f64,
    rejected: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[State<N>] {
        &self.ys
    }

    /// Right-hand side evaluated at each sample.
    pub fn derivatives(&self) -> &[State<N>] {
        &self.dys
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &State<N>)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter())
    }

    /// +1 for forward integration, -1 for backward.
    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn start(&self) -> (f64, State<N>) {
        (self.xs[0], self.ys[0])
    }

    pub fn end(&self) -> (f64, State<N>) {
        let i = self.xs.len() - 1;
        (self.xs[i], self.ys[i])
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = (self.xs[0], self.xs[self.xs.len() - 1]);
        a.min(b) <= x && x <= a.max(b)
    }

    fn locate(&self, x: f64) -> Option<&DenseStep<N>> {
        if self.steps.is_empty() || !self.contains(x) {
            return None;
        }
        // xs is monotone in `direction`; search on the signed coordinate.
        let key = x * self.direction;
        let idx = self
            .xs
            .partition_point(|&xi| xi * self.direction <= key)
            .saturating_sub(1)
            .min(self.steps.len() - 1);
        Some(&self.steps[idx])
    }

    /// Dense evaluation; `None` outside the integrated interval.
    pub fn eval(&self, x: f64) -> Option<State<N>> {
        if self.steps.is_empty() {
            return (x == self.xs[0]).then_some(self.ys[0]);
        }
        self.locate(x).map(|s| s.eval(x))
    }

    /// Derivative of the dense interpolant.
    pub fn eval_derivative(&self, x: f64) -> Option<State<N>> {
        if self.steps.is_empty() {
            return (x == self.xs[0]).then_some(self.dys[0]);
        }
        self.locate(x).map(|s| s.eval_derivative(x))
    }

    /// Samples `n` equally spaced points between the two ends.
    pub fn resample(&self, n: usize) -> Vec<(f64, State<N>)> {
        let (a, b) = (self.xs[0], self.xs[self.xs.len() - 1]);
        (0..n)
            .map(|i| {
                let x = if n == 1 {
                    a
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                let x = if i + 1 == n { b } else { x };
                (x, self.eval(x).expect("inside trajectory"))
            })
            .collect()
    }

    fn truncate_at(&mut self, x: f64, y: State<N>, dy: State<N>) {
        // The last step stays as the interpolant over the full step; we only
        // shorten its recorded endpoint.
        let last = self.xs.len() - 1;
        self.xs[last] = x;
        self.ys[last] = y;
        self.dys[last] = dy;
    }
}

/// Outcome of a terminal event detected by [`integrate_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub x: f64,
    pub y: State<N>,
}

fn all_finite<const N: usize>(v: &State<N>) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Integrates `y' = rhs(x, y)` from `x0` to `x1`.
pub fn integrate<const N: usize, F>(
    rhs: F,
    x0: f64,
    y0: State<N>,
    x1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, OdeError>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    integrate_until(rhs, x0, y0, x1, cfg, |_, _| 1.0).map(|(t, _)| t)
}

/// Integrates like [`integrate`] but stops at the first sign change of
/// `event(x, y)`.
///
/// The crossing is located by 20 bisection steps on the interpolant of the
/// step in which it occurred; the trajectory then ends at the crossing.
pub fn integrate_until<const N: usize, F, G>(
    rhs: F,
    x0: f64,
    y0: State<N>,
    x1: f64,
    cfg: &IntegratorConfig,
    mut event: G,
) -> Result<(Trajectory<N>, Option<EventHit<N>>), OdeError>
where
    F: Fn(f64, &State<N>) -> State<N>,
    G: FnMut(f64, &State<N>) -> f64,
{
    cfg.validate()?;
    if x1 == x0 {
        return Err(OdeError::EmptyInterval(x0));
    }
    if !all_finite(&y0) || !x0.is_finite() || !x1.is_finite() {
        return Err(OdeError::NonFiniteState { x: x0 });
    }
    let dir = if x1 > x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    if !all_finite(&k1) {
        return Err(OdeError::NonFiniteState { x });
    }
    let mut g_prev = event(x, &y);

    let mut traj = Trajectory {
        xs: vec![x],
        ys: vec![y],
        dys: vec![k1],
        steps: Vec::new(),
        direction: dir,
        rejected: 0,
    };

    let span = (x1 - x0).abs();
    let mut h = cfg.initial_step.min(cfg.max_step).min(span);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut attempts = 0usize;

    loop {
        let remaining = (x1 - x) * dir;
        if remaining <= 0.0 {
            break;
        }
        if traj.steps.len() >= cfg.max_steps || attempts >= cfg.max_steps.saturating_mul(4) {
            return Err(OdeError::StepLimitExceeded {
                x,
                steps: traj.steps.len(),
            });
        }
        attempts += 1;
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        let hs = h * dir;
        if x + hs == x {
            return Err(OdeError::NonFiniteState { x });
        }

        let stage = |coef: &[(f64, &State<N>)]| -> State<N> {
            std::array::from_fn(|i| y[i] + hs * coef.iter().map(|(c, k)| c * k[i]).sum::<f64>())
        };
        let k2 = rhs(x + C2 * hs, &stage(&[(A21, &k1)]));
        let k3 = rhs(x + C3 * hs, &stage(&[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(x + C4 * hs, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            x + C5 * hs,
            &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            x + hs,
            &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let x_new = if last { x1 } else { x + hs };
        let k7 = rhs(x_new, &y_new);

        let finite = [&k2, &k3, &k4, &k5, &k6, &k7, &y_new]
            .iter()
            .all(|v| all_finite(v));
        if !finite {
            traj.rejected += 1;
            last_rejected = true;
            h *= 0.2;
            if h < 1e-15 * x.abs().max(1.0) {
                return Err(OdeError::NonFiniteState { x });
            }
            continue;
        }

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        let fac11 = err.powf(ALPHA);
        if err <= 1.0 {
            let mut fac = fac11 / err_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / MAX_GROWTH, MAX_SHRINK);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_rejected = false;

            let ydiff: State<N> = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: State<N> = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let dense = DenseStep {
                x0: x,
                h: x_new - x,
                coeffs: [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        hs * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i])
                    }),
                ],
            };
            traj.steps.push(dense);
            traj.xs.push(x_new);
            traj.ys.push(y_new);
            traj.dys.push(k7);

            let g_new = event(x_new, &y_new);
            if g_prev.signum() * g_new.signum() < 0.0 || g_new == 0.0 {
                let (mut lo, mut hi) = (x, x_new);
                for _ in 0..20 {
                    let mid = 0.5 * (lo + hi);
                    let gm = event(mid, &dense.eval(mid));
                    if gm.signum() == g_prev.signum() && gm != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let yx = dense.eval(hi);
                traj.truncate_at(hi, yx, rhs(hi, &yx));
                return Ok((traj, Some(EventHit { x: hi, y: yx })));
            }
            g_prev = g_new;

            x = x_new;
            y = y_new;
            k1 = k7;
            h = h_new.min(cfg.max_step);
        } else {
            traj.rejected += 1;
            h /= (fac11 / SAFETY).min(MAX_SHRINK);
            last_rejected = true;
        }
    }
    Ok((traj, None))
}

/// Kind of a turning point of a scalar trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub y: f64,
    pub kind: ExtremumKind,
}

/// Sign changes of `y'` along a scalar trajectory, in integration order.
///
/// Each change is refined by bisection on the interpolant's derivative to an
/// `x` resolution of `1e-10`. A maximum is a `+ -> -` change of `y'` with
/// respect to increasing `x`, whatever the direction of integration.
pub fn find_extrema(traj: &Trajectory<1>) -> Vec<Extremum> {
    find_extrema_of(traj, 0)
}

/// [`find_extrema`] for component `c` of a vector trajectory.
pub fn find_extrema_of<const N: usize>(traj: &Trajectory<N>, c: usize) -> Vec<Extremum> {
    let mut out = Vec::new();
    let dys = traj.derivatives();
    for (i, step) in traj.steps.iter().enumerate() {
        let (d0, d1) = (dys[i][c], dys[i + 1][c]);
        if d0 == 0.0 && i > 0 {
            // Counted as the right end of the previous step.
            continue;
        }
        if d0.signum() == d1.signum() && d1 != 0.0 {
            continue;
        }
        if d0 == 0.0 && d1 == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (traj.xs[i], traj.xs[i + 1]);
        let s0 = d0.signum();
        while (hi - lo).abs() > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let dm = step.eval_derivative(mid)[c];
            if dm.signum() == s0 && dm != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let xe = 0.5 * (lo + hi);
        // Slope signs left and right of the turning point in increasing x.
        let (left, right) = if traj.direction > 0.0 { (d0, d1) } else { (d1, d0) };
        let is_max = left > 0.0 || (left == 0.0 && right < 0.0);
        out.push(Extremum {
            x: xe,
            y: step.eval(xe)[c],
            kind: if is_max {
                ExtremumKind::Max
            } else {
                ExtremumKind::Min
            },
        });
    }
    out
}
