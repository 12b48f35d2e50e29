mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nel_core::extrapolate::{integer_exponents, richardson};
use nel_core::limit_curve::{compute_a, implicit_curve, solve_limit_ode};
use nel_core::ode::IntegratorConfig;
use nel_core::painleve::{
    classify_fate, estimate_c, fate_discontinuities, integrate_with_poles, painleve_eigenvalues, PainleveConfig,
    REFERENCE_EIGENVALUES,
};
use nel_core::pseries::{all_roots, ftau_partial_sum, liminf_window};
use nel_core::separatrix::{
    eigenvalue_table, estimate_growth_constant, growth_constant, MethodSelection, SeparatrixConfig,
};

use figures::{FigureOptions, FIGURES};
use output::{emit, Payload, Table};

#[derive(Parser)]
#[command(name = "nel", version, about = "Separatrix eigenvalues, limiting curves, Painleve I eigencurves and root moduli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every figure and table into one directory.
    Run(RunArgs),
    /// Data for one figure.
    Figures(FigureArgs),
    /// Separatrix intercepts a_n of y' = cos(pi x y).
    Eigen(EigenArgs),
    /// The limiting curve Z(t) from the ODE and from the implicit relation.
    LimitingCurve(LimitArgs),
    /// Richardson extrapolation.
    Extrapolate {
        #[command(subcommand)]
        what: ExtrapolateCommand,
    },
    /// Painleve I eigencurves, fates and trajectories.
    Painleve {
        #[command(subcommand)]
        what: PainleveCommand,
    },
    /// Root moduli of partial sums of f_tau.
    Pseries {
        #[command(subcommand)]
        what: PseriesCommand,
    },
    /// Partial sums of the square-wave sine series.
    Fourier(FourierArgs),
}

#[derive(Args, Serialize)]
struct RunArgs {
    #[arg(long, default_value = "nel-out")]
    out_dir: PathBuf,
    /// Separatrix index used for fig4.
    #[arg(long, default_value_t = 500_000)]
    fig4_n: i64,
}

#[derive(Args, Serialize)]
struct FigureArgs {
    /// fig1 .. fig8
    name: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 500_000)]
    fig4_n: i64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Bisect,
    Backward,
    Both,
}

#[derive(Args, Serialize)]
struct EigenArgs {
    /// Index range `lo:hi` (inclusive).
    #[arg(long, default_value = "1:6", allow_hyphen_values = true)]
    n: String,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    /// Relative integration tolerance, also the bisection width.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LimitArgs {
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
enum ExtrapolateCommand {
    /// A = lim sqrt(2) a_n / sqrt(2n - 1/2) from traced separatrices.
    Growth {
        #[arg(long, value_delimiter = ',', default_value = "125,250,500,1000,2000")]
        n: Vec<i64>,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// C = lim a_n / n^(3/5) for the Painleve eigenvalues.
    Painleve {
        #[arg(long, default_value_t = 12)]
        count: usize,
        /// Use the reference eigenvalues instead of computing them.
        #[arg(long)]
        reference: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A user-supplied sequence.
    Sequence {
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Correction exponents; integer powers 1, 2, ... when omitted.
        #[arg(long, value_delimiter = ',')]
        exponents: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        stages: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Serialize)]
enum PainleveCommand {
    /// Slopes a_n of the eigencurves through y(0) = 1.
    Eigen {
        #[arg(long, default_value_t = 12)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-range fate of the solution with y'(0) = a.
    Fate {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slopes in [from, to] where the fate changes.
    Discontinuities {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The solution with y'(0) = a continued through its poles.
    Trajectory {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        x_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Serialize)]
enum PseriesCommand {
    /// rho_n(f_tau) over a tau grid `start:end:step`.
    Scan {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value = "0:1:0.0005")]
        tau: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All roots of one partial sum.
    Roots {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// min of rho_n over a window of degrees.
    Liminf {
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value = "40:60")]
        n: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Serialize)]
struct FourierArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,20,80")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad flags or arguments, as opposed to a failed computation.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_int_range(s: &str) -> Result<(i64, i64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| usage(format!("expected lo:hi, got {s:?}")))?;
    let parse = |v: &str| v.trim().parse::<i64>().map_err(|e| usage(format!("{v:?}: {e}")));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(usage(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

fn parse_float_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(usage(format!("expected start:end:step, got {s:?}")));
    };
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| usage(format!("{v:?}: {e}")));
    Ok((parse(a)?, parse(b)?, parse(c)?))
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("NEL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("NEL_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn eigen_config(tol: f64) -> Result<SeparatrixConfig> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(usage(format!("--tol {tol} outside (0, 1e-2)")));
    }
    Ok(SeparatrixConfig {
        bisect_tol: tol,
        ..SeparatrixConfig::with_ode(IntegratorConfig::with_tolerances(tol, tol * 1e-2))
    })
}

fn limit_table(grid: usize) -> Result<(Table, serde_json::Value)> {
    if grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let ode = solve_limit_ode(grid)?;
    let imp = implicit_curve(grid)?;
    let mut table = Table::new(&["t", "z_ode", "z_implicit", "difference"]);
    let mut sup = 0.0f64;
    for ((t, a), b) in ode.t.iter().zip(&ode.z).zip(&imp.z) {
        sup = sup.max((a - b).abs());
        table.push_floats(&[*t, *a, *b, a - b]);
    }
    let summary = json!({ "z0": ode.z0(), "A": compute_a(), "sup_difference": sup });
    Ok((table, summary))
}

fn run_all(args: &RunArgs, started: Instant) -> Result<()> {
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let params = serde_json::to_value(args)?;
    let opts = FigureOptions { fig4_n: args.fig4_n };
    let mut outputs = Vec::new();
    // Each file's manifest times its own step.
    let mut step = Instant::now();
    let mut write = |name: &str, payload: Payload, summary| -> Result<()> {
        let path = dir.join(name);
        emit(&format!("run {name}"), params.clone(), step, &payload, summary, Some(&path))?;
        outputs.push(path);
        step = Instant::now();
        Ok(())
    };
    for name in FIGURES {
        let (table, summary) = figures::generate(name, &opts)?;
        write(&format!("{name}.csv"), Payload::Csv(table), summary)?;
    }
    let eig = eigenvalue_table(-3, 10, MethodSelection::Both, &SeparatrixConfig::default())?;
    write("eigenvalues.json", Payload::json(&eig)?, None)?;
    let (table, summary) = limit_table(1001)?;
    write("limiting_curve.csv", Payload::Csv(table), Some(summary))?;
    let growth = estimate_growth_constant(
        &[125, 250, 500, 1000, 2000],
        3,
        &SeparatrixConfig::with_ode(IntegratorConfig::with_tolerances(1e-13, 1e-15)),
    )?;
    write("growth_constant.json", Payload::json(&json!({ "target": growth_constant(), "estimate": growth }))?, None)?;
    let eigs = painleve_eigenvalues(12, &PainleveConfig::default())?;
    let growth = estimate_c(&eigs)?;
    write("painleve_eigenvalues.json", Payload::json(&eigs)?, None)?;
    write("painleve_growth.json", Payload::json(&growth)?, None)?;
    let manifest = output::RunManifest {
        subcommand: "run".into(),
        parameters: params.clone(),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs,
        summary: None,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)
}

fn dispatch(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let done = |name: &str, params: serde_json::Value, payload: Payload, summary, out: &Option<PathBuf>| {
        emit(name, params, started, &payload, summary, out.as_deref())
    };
    match &cli.command {
        Command::Run(args) => run_all(args, started),
        Command::Figures(args) => {
            if !FIGURES.contains(&args.name.as_str()) {
                return Err(usage(format!("unknown figure {:?}; expected one of {}", args.name, FIGURES.join(", "))));
            }
            let (table, summary) = figures::generate(&args.name, &FigureOptions { fig4_n: args.fig4_n })?;
            done(&format!("figures {}", args.name), serde_json::to_value(args)?, Payload::Csv(table), summary, &args.out)
        }
        Command::Eigen(args) => {
            let (lo, hi) = parse_int_range(&args.n)?;
            let methods = match args.method {
                MethodArg::Bisect => MethodSelection::Bisect,
                MethodArg::Backward => MethodSelection::Backward,
                MethodArg::Both => MethodSelection::Both,
            };
            if !matches!(args.method, MethodArg::Backward) && lo < 1 {
                return Err(usage("bisection needs n >= 1; use --method backward for n <= 0"));
            }
            let table = eigenvalue_table(lo, hi, methods, &eigen_config(args.tol)?)?;
            done("eigen", serde_json::to_value(args)?, Payload::json(&table)?, None, &args.out)
        }
        Command::LimitingCurve(args) => {
            let (table, summary) = limit_table(args.grid)?;
            done("limiting-curve", serde_json::to_value(args)?, Payload::Csv(table), Some(summary), &args.out)
        }
        Command::Extrapolate { what } => {
            let (value, out) = match what {
                ExtrapolateCommand::Growth { n, stages, tol, out } => {
                    let cfg = SeparatrixConfig::with_ode(IntegratorConfig::with_tolerances(*tol, tol * 1e-2));
                    let r = estimate_growth_constant(n, *stages, &cfg)?;
                    (json!({ "target": growth_constant(), "estimate": r }), out)
                }
                ExtrapolateCommand::Painleve { count, reference, out } => {
                    let eigs = if *reference {
                        REFERENCE_EIGENVALUES[..(*count).min(REFERENCE_EIGENVALUES.len())].to_vec()
                    } else {
                        painleve_eigenvalues(*count, &PainleveConfig::default())?
                    };
                    (json!({ "eigenvalues": eigs, "estimate": estimate_c(&eigs)? }), out)
                }
                ExtrapolateCommand::Sequence { indices, values, exponents, stages, out } => {
                    let exps = if exponents.is_empty() { integer_exponents(*stages) } else { exponents.clone() };
                    (serde_json::to_value(richardson(indices, values, &exps, *stages)?)?, out)
                }
            };
            done("extrapolate", serde_json::to_value(what)?, Payload::Json(value), None, out)
        }
        Command::Painleve { what } => {
            let cfg = PainleveConfig::default();
            let (payload, summary, out) = match what {
                PainleveCommand::Eigen { count, out } => {
                    (Payload::json(&painleve_eigenvalues(*count, &cfg)?)?, None, out)
                }
                PainleveCommand::Fate { a, out } => (Payload::json(&classify_fate(*a, &cfg)?)?, None, out),
                PainleveCommand::Discontinuities { from, to, out } => {
                    (Payload::json(&fate_discontinuities(*from, *to, &cfg)?)?, None, out)
                }
                PainleveCommand::Trajectory { a, x_end, out } => {
                    let sol = integrate_with_poles(*a, *x_end, &cfg)?;
                    let mut table = Table::new(&["x", "y"]);
                    for (x, y) in sol.samples() {
                        table.push_floats(&[x, y]);
                    }
                    (Payload::Csv(table), Some(serde_json::to_value(&sol.poles)?), out)
                }
            };
            done("painleve", serde_json::to_value(what)?, payload, summary, out)
        }
        Command::Pseries { what } => {
            let (payload, summary, out) = match what {
                PseriesCommand::Scan { n, tau, out } => {
                    let (start, end, step) = parse_float_range(tau)?;
                    let (table, summary) = figures::rho_scan(start, end, step, *n)?;
                    (Payload::Csv(table), Some(summary), out)
                }
                PseriesCommand::Roots { tau, n, out } => {
                    let roots = all_roots(&ftau_partial_sum(*tau, *n)?)?;
                    let rho = roots.iter().map(|r| r.modulus()).fold(0.0, f64::max);
                    (Payload::json(&json!({ "tau": tau, "n": n, "rho": rho, "roots": roots }))?, None, out)
                }
                PseriesCommand::Liminf { tau, n, out } => {
                    let (lo, hi) = parse_int_range(n)?;
                    if lo < 1 {
                        return Err(usage("degrees start at 1"));
                    }
                    (Payload::json(&liminf_window(*tau, lo as usize, hi as usize)?)?, None, out)
                }
            };
            done("pseries", serde_json::to_value(what)?, payload, summary, out)
        }
        Command::Fourier(args) => {
            if args.points == 0 {
                return Err(usage("--points must be positive"));
            }
            let table = figures::fourier_table(&args.n, args.points);
            let summary = figures::fourier_summary(&args.n);
            done("fourier", serde_json::to_value(args)?, Payload::Csv(table), Some(summary), &args.out)
        }
    }
}

fn report(kind: &str, err: &anyhow::Error) {
    let chain: Vec<String> = err.chain().skip(1).map(|e| e.to_string()).collect();
    let body = json!({ "error": { "kind": kind, "message": err.to_string(), "causes": chain } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report("usage", &anyhow::Error::msg(e.to_string().trim().to_string()));
            return ExitCode::from(2);
        }
    };
    let result = init_threads().and_then(|()| dispatch(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            report("usage", &e);
            ExitCode::from(2)
        }
        Err(e) => {
            report("computation", &e);
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::float;

    #[test]
    fn ranges() {
        assert_eq!(parse_int_range("1:6").unwrap(), (1, 6));
        assert_eq!(parse_int_range("-3:0").unwrap(), (-3, 0));
        assert!(parse_int_range("6:1").is_err());
        assert!(parse_int_range("6").is_err());
        assert_eq!(parse_float_range("0:1:0.0005").unwrap(), (0.0, 1.0, 0.0005));
        assert!(parse_float_range("0:1").is_err());
    }

    #[test]
    fn floats_in_tables_reparse() {
        let mut t = Table::new(&["x"]);
        t.push_floats(&[std::f64::consts::PI]);
        assert_eq!(float(std::f64::consts::PI).parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
