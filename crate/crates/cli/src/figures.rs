//! Data behind each plotted figure.

use anyhow::Result;
use rayon::prelude::*;
use serde_json::{json, Value};

use nel_core::cosine;
use nel_core::fourier::{fourier_samples, gibbs_limit, overshoot};
use nel_core::limit_curve::{sup_deviation, LimitOde};
use nel_core::ode::IntegratorConfig;
use nel_core::painleve::{integrate_with_poles, painleve_eigenvalues, PainleveConfig, PoleTrajectory};
use nel_core::pseries::tau_scan;
use nel_core::separatrix::{scaled_separatrix, trace_separatrix_backward, ScaledSeparatrix, SeparatrixConfig};

use crate::output::{float, Table};

pub const FIGURES: [&str; 8] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub struct FigureOptions {
    /// Index of the separatrix compared with the limiting curve in fig4.
    pub fig4_n: i64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self { fig4_n: 500_000 }
    }
}

pub fn generate(name: &str, opts: &FigureOptions) -> Result<(Table, Option<Value>)> {
    match name {
        "fig1" => Ok((fig1()?, None)),
        "fig2" => fig2(),
        "fig3" => Ok((fig3()?, None)),
        "fig4" => fig4(opts.fig4_n),
        "fig5" => Ok(fig5()),
        "fig6" => fig6(),
        "fig7" => Ok((fig7()?, None)),
        "fig8" => fig8(),
        _ => anyhow::bail!("unknown figure {name:?} (expected one of {})", FIGURES.join(", ")),
    }
}

fn grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
}

/// Solutions with `y(0) = 0.2 k`, `k = 1..=50`, on `[0, 24]`.
fn fig1() -> Result<Table> {
    let cfg = IntegratorConfig::default();
    let curves = (1..=50)
        .into_par_iter()
        .map(|k| cosine::solve(0.0, 0.2 * k as f64, 24.0, &cfg).map(|t| (k, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["k", "a", "x", "y"]);
    for (k, traj) in curves {
        for x in grid(0.0, 24.0, 1201) {
            let y = traj.eval(x).expect("inside trajectory")[0];
            table.push(vec![k.to_string(), float(0.2 * k as f64), float(x), float(y)]);
        }
    }
    Ok(table)
}

/// The separatrices `n = -3..=6`, traced back from their tails.
fn fig2() -> Result<(Table, Option<Value>)> {
    let cfg = SeparatrixConfig::default();
    let traces = (-3..=6i64)
        .into_par_iter()
        .map(|n| trace_separatrix_backward(n, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["n", "a_n", "x", "y"]);
    let mut intercepts = Vec::new();
    for (rec, traj) in &traces {
        for x in grid(0.0, 20.0, 1001) {
            let y = traj.eval(x).expect("inside trajectory")[0];
            table.push(vec![rec.n.to_string(), float(rec.a_n), float(x), float(y)]);
        }
        intercepts.push(json!({ "n": rec.n, "a_n": rec.a_n }));
    }
    Ok((table, Some(json!({ "intercepts": intercepts }))))
}

fn limit_value(limit: &LimitOde, t: f64) -> f64 {
    if t <= 1.0 {
        limit.eval(t).expect("t inside [0, 1]")
    } else {
        // Past the turning point the limit is the decaying branch z = 1/t.
        1.0 / t
    }
}

fn push_scaled(table: &mut Table, sep: &ScaledSeparatrix, limit: &LimitOde, ts: impl Iterator<Item = f64>) {
    for t in ts {
        let Some(z) = sep.eval(t) else { continue };
        let zl = limit_value(limit, t);
        table.push(vec![sep.n.to_string(), float(t), float(z), float(zl), float(z - zl)]);
    }
}

/// The first four scaled separatrices against the limiting curve.
fn fig3() -> Result<Table> {
    let cfg = SeparatrixConfig::default();
    let limit = LimitOde::solve()?;
    let seps = (1..=4i64)
        .into_par_iter()
        .map(|n| scaled_separatrix(n, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["n", "t", "z", "Z", "z_minus_Z"]);
    for sep in &seps {
        push_scaled(&mut table, sep, &limit, grid(0.0, 2.0, 1001));
    }
    Ok(table)
}

/// One high separatrix and its distance from the limiting curve.
fn fig4(n: i64) -> Result<(Table, Option<Value>)> {
    let cfg = SeparatrixConfig::with_ode(IntegratorConfig::with_tolerances(1e-12, 1e-14));
    let limit = LimitOde::solve()?;
    let sep = scaled_separatrix(n, &cfg)?;
    let mut table = Table::new(&["n", "t", "z", "Z", "z_minus_Z"]);
    push_scaled(&mut table, &sep, &limit, grid(0.0, 1.5, 3001));
    let sup = sup_deviation(&sep, &limit, 0.0, 0.9);
    Ok((table, Some(json!({ "n": n, "sup_deviation_0_to_0.9": sup }))))
}

/// Square-wave partial sums for `N = 5, 20, 80`.
fn fig5() -> (Table, Option<Value>) {
    let ns = [5usize, 20, 80];
    (fourier_table(&ns, 1001), Some(fourier_summary(&ns)))
}

pub fn fourier_table(ns: &[usize], points: usize) -> Table {
    let mut table = Table::new(&["N", "x", "S"]);
    for &n in ns {
        for (x, s) in fourier_samples(n, points) {
            table.push(vec![n.to_string(), float(x), float(s)]);
        }
    }
    table
}

pub fn fourier_summary(ns: &[usize]) -> Value {
    let peaks: Vec<Value> = ns.iter().map(|&n| json!({ "N": n, "overshoot": overshoot(n) })).collect();
    json!({ "peaks": peaks, "gibbs_limit": gibbs_limit() })
}

fn push_poles(table: &mut Table, label: &str, sol: &PoleTrajectory, x_end: f64) {
    for x in grid(0.0, x_end, (-x_end * 100.0) as usize + 1) {
        // Inside the excised neighbourhoods of the poles y exceeds the
        // matching threshold; those stretches are left out.
        if let Some(s) = sol.eval(x) {
            table.push(vec![label.to_string(), float(sol.a), float(x), float(s[0])]);
        }
    }
}

/// The first four Painleve eigencurves.
fn fig6() -> Result<(Table, Option<Value>)> {
    let cfg = PainleveConfig::default();
    let eigs = painleve_eigenvalues(4, &cfg)?;
    let mut table = Table::new(&["n", "a", "x", "y"]);
    let mut poles = Vec::new();
    for (i, &a) in eigs.iter().enumerate() {
        let sol = integrate_with_poles(a, -12.0, &cfg)?;
        push_poles(&mut table, &(i + 1).to_string(), &sol, -12.0);
        poles.push(sol.poles.iter().map(|p| p.x0).collect::<Vec<_>>());
    }
    Ok((table, Some(json!({ "eigenvalues": eigs, "poles": poles }))))
}

/// Painleve solutions between eigenvalues: three that settle into
/// oscillation about `-sqrt(-x)` and three that run through poles.
fn fig7() -> Result<Table> {
    let cfg = PainleveConfig::default();
    let mut table = Table::new(&["panel", "a", "x", "y"]);
    for (panel, slopes) in [("oscillatory", [1.0, 2.0, 3.0]), ("poles", [4.5, 5.0, 5.5])] {
        for a in slopes {
            let sol = integrate_with_poles(a, -20.0, &cfg)?;
            push_poles(&mut table, panel, &sol, -20.0);
        }
    }
    Ok(table)
}

/// `rho_50(f_tau)` for `tau` in `[0, 1]`.
fn fig8() -> Result<(Table, Option<Value>)> {
    let (table, summary) = rho_scan(0.0, 1.0, 5e-4, 50)?;
    Ok((table, Some(summary)))
}

pub fn rho_scan(start: f64, end: f64, step: f64, n: usize) -> Result<(Table, Value)> {
    let scan = tau_scan(start, end, step, n)?;
    let mut table = Table::new(&["tau", "rho"]);
    for p in &scan.points {
        table.push(vec![float(p.tau), p.rho.map_or_else(String::new, float)]);
    }
    let summary = json!({
        "n": n,
        "maxima": scan.top_maxima(4, 0.05),
        "failures": scan.failures,
        "half_shift_mismatch": scan.shift_mismatch(0.5),
        "reflection_mismatch": scan.reflection_mismatch(),
    });
    Ok((table, summary))
}
