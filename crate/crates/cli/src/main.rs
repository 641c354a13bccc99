use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sop_core::config::{ScenarioConfig, SweepConfig};
use sop_core::sweep::{
    checks_csv_string, csv_string, evaluate_method, figure_preset, fmt_sig, gnuplot_string,
    run_sweep, FigureId, MethodKind, Param, SweepSpec, SweepTable, REGRESSION_THRESHOLD,
};
use sop_core::validate::{cross_validate, default_grid};
use sop_core::{Execution, SecrecyTarget};

#[derive(Parser)]
#[command(
    name = "sop",
    version,
    about = "Secrecy outage probability under Rayleigh fading with co-channel interference"
)]
struct Cli {
    /// Worker threads for parallel evaluation (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Evaluate everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single scenario.
    Eval(EvalArgs),
    /// Run a sweep from a TOML file or a figure preset.
    Sweep(SweepArgs),
    /// Reproduce one of the figure sweeps (fig1..fig5).
    Figure(FigureArgs),
    /// Cross-check the three engines over a grid of scenarios.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// Comma-separated subset of closed_form, quadrature, monte_carlo.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Relative pole separation below which the closed form integrates a pair numerically.
    #[arg(long)]
    pair_tolerance: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// CSV destination (default: stdout). Per-point discrepancies go to `<output>.checks.csv`.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write gnuplot data blocks to this path.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

/// Replacement curve lists; each one overrides the preset's list for that parameter.
#[derive(Args)]
struct CurveArgs {
    /// Secrecy rates (bit/s/Hz).
    #[arg(long = "rs", value_delimiter = ',')]
    r_s: Option<Vec<f64>>,
    /// Transmit SNR values in dB.
    #[arg(long, value_delimiter = ',')]
    es_db: Option<Vec<f64>>,
    /// Interferer SNR values in dB.
    #[arg(long, value_delimiter = ',')]
    esi_db: Option<Vec<f64>>,
    /// Path-loss exponents.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Interferer counts (collinear geometry only).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<f64>>,
}

#[derive(Args)]
struct EvalArgs {
    /// Scenario file; without it the reference geometry is used with the flags below.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0, conflicts_with = "config")]
    es_db: f64,
    #[arg(long, default_value_t = 15.0, conflicts_with = "config")]
    esi_db: f64,
    #[arg(long, default_value_t = 3.0, conflicts_with = "config")]
    alpha: f64,
    /// Secrecy rates in bit/s/Hz.
    #[arg(long = "rs", value_delimiter = ',', conflicts_with = "config")]
    r_s: Option<Vec<f64>>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false, args = ["spec", "preset"])]
struct SweepArgs {
    /// Sweep file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Figure preset (fig1..fig5).
    #[arg(long)]
    preset: Option<FigureId>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    curves: CurveArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1..fig5
    id: FigureId,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    curves: CurveArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Monte Carlo trials per point; 0 skips Monte Carlo.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted closed form vs quadrature difference.
    #[arg(long, default_value_t = REGRESSION_THRESHOLD)]
    tolerance: f64,
    /// CSV destination (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Outcome {
    Ok,
    Regression,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Regression) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building thread pool")?;
            pool.install(|| dispatch(cli.command, exec))
        }
        None => dispatch(cli.command, exec),
    }
}

fn dispatch(cmd: Command, exec: Execution) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Eval(a) => eval(a, exec),
        Command::Sweep(a) => {
            let spec = match (&a.spec, a.preset) {
                (Some(path), _) => {
                    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
                    SweepConfig::load(path)?.to_spec(name)?
                }
                (None, Some(id)) => figure_preset(id),
                (None, None) => unreachable!("clap requires --spec or --preset"),
            };
            sweep(spec, &a.engine, &a.curves, &a.output, exec)
        }
        Command::Figure(a) => sweep(figure_preset(a.id), &a.engine, &a.curves, &a.output, exec),
        Command::Validate(a) => validate(a, exec),
    }
}

fn parse_methods(list: &[String]) -> anyhow::Result<Vec<MethodKind>> {
    let mut out = Vec::new();
    for m in list {
        let kind = MethodKind::parse(m.trim())?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn apply_engine(spec: &mut SweepSpec, e: &EngineArgs) -> anyhow::Result<()> {
    if let Some(m) = &e.methods {
        spec.methods = parse_methods(m)?;
    }
    if let Some(s) = e.seed {
        spec.seed = s;
    }
    if let Some(t) = e.trials {
        spec.mc_trials = t;
    }
    if let Some(p) = e.pair_tolerance {
        spec.pair_tolerance = p;
    }
    Ok(())
}

fn apply_curves(spec: &mut SweepSpec, c: &CurveArgs) -> anyhow::Result<()> {
    let lists = [
        (Param::Rs, &c.r_s),
        (Param::EsDb, &c.es_db),
        (Param::EsiDb, &c.esi_db),
        (Param::Alpha, &c.alpha),
        (Param::M, &c.m),
    ];
    for (param, values) in lists {
        if let Some(v) = values {
            if param == spec.axis {
                bail!(
                    "`{}` is the sweep axis and cannot carry a curve list",
                    param.name()
                );
            }
            spec.curves.set(param, v.clone());
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn checks_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".checks.csv");
    PathBuf::from(s)
}

fn report_checks(table: &SweepTable) -> Outcome {
    if table.checks.is_empty() {
        return Outcome::Ok;
    }
    let worst = table
        .checks
        .iter()
        .map(|c| c.max_discrepancy)
        .fold(0.0, f64::max);
    eprintln!("max pairwise discrepancy: {}", fmt_sig(worst));
    match table.regression(REGRESSION_THRESHOLD) {
        Some(c) => {
            eprintln!(
                "regression: closed form and quadrature differ by {} at {}={} curve {}",
                fmt_sig(c.closed_vs_quadrature.unwrap_or(f64::NAN)),
                table.axis.name(),
                c.axis_value,
                c.curve
            );
            Outcome::Regression
        }
        None => Outcome::Ok,
    }
}

fn sweep(
    mut spec: SweepSpec,
    e: &EngineArgs,
    c: &CurveArgs,
    out: &OutputArgs,
    exec: Execution,
) -> anyhow::Result<Outcome> {
    apply_engine(&mut spec, e)?;
    apply_curves(&mut spec, c)?;
    let table = run_sweep(&spec, exec)?;
    if table.rows.is_empty() {
        bail!("sweep `{}` produced no rows", spec.name);
    }
    let csv = csv_string(&table);
    match &out.output {
        Some(path) => {
            write_file(path, &csv)?;
            if !table.checks.is_empty() {
                write_file(&checks_path(path), &checks_csv_string(&table))?;
            }
        }
        None => std::io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .context("writing stdout")?,
    }
    if let Some(path) = &out.gnuplot {
        write_file(path, &gnuplot_string(&table))?;
    }
    Ok(report_checks(&table))
}

fn eval(a: EvalArgs, exec: Execution) -> anyhow::Result<Outcome> {
    let (scenario, targets) = match &a.config {
        Some(path) => {
            let cfg = ScenarioConfig::load(path)?;
            (cfg.scenario()?, cfg.targets()?)
        }
        None => {
            let s = sop_core::scenario::default_scenario(a.alpha, a.es_db, a.esi_db)?;
            let rates = a.r_s.clone().unwrap_or_else(|| vec![1.0]);
            let t = rates
                .into_iter()
                .map(SecrecyTarget::new)
                .collect::<Result<Vec<_>, _>>()?;
            (s, t)
        }
    };
    let methods = match &a.engine.methods {
        Some(m) => parse_methods(m)?,
        None => vec![
            MethodKind::ClosedForm,
            MethodKind::Quadrature,
            MethodKind::MonteCarlo,
        ],
    };
    if methods.is_empty() {
        bail!("no methods selected");
    }
    let tol = a
        .engine
        .pair_tolerance
        .unwrap_or(sop_core::analytic::DEFAULT_PAIR_TOLERANCE);
    let trials = a.engine.trials.unwrap_or(1_000_000);
    let seed = a.engine.seed.unwrap_or(0);

    let mut out = String::from("r_s,method,sop,uncertainty,fallbacks\n");
    let mut outcome = Outcome::Ok;
    for (k, t) in targets.iter().enumerate() {
        let mut values = Vec::new();
        for &m in &methods {
            let mc_seed = sop_core::montecarlo::derive_seed(seed, k as u64);
            let r = evaluate_method(m, &scenario, t, tol, trials, mc_seed, exec)?;
            let unc = r.uncertainty.map(fmt_sig).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.r_s(),
                m.name(),
                fmt_sig(r.value),
                unc,
                r.fallback_pairs.len()
            );
            values.push((m, r.value));
        }
        let get = |k: MethodKind| values.iter().find(|(m, _)| *m == k).map(|(_, v)| *v);
        if let (Some(a), Some(b)) = (get(MethodKind::ClosedForm), get(MethodKind::Quadrature)) {
            if (a - b).abs() > REGRESSION_THRESHOLD {
                eprintln!(
                    "regression: closed form and quadrature differ by {} at r_s={}",
                    fmt_sig((a - b).abs()),
                    t.r_s()
                );
                outcome = Outcome::Regression;
            }
        }
    }
    print!("{out}");
    Ok(outcome)
}

fn validate(a: ValidateArgs, exec: Execution) -> anyhow::Result<Outcome> {
    let points = default_grid();
    let results = cross_validate(&points, a.trials, a.seed, exec)?;
    let mut out = String::from("es_db,esi_db,r_s,alpha,closed_form,quadrature,monte_carlo,closed_vs_quadrature,mc_z,fallbacks\n");
    let mut worst = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut beyond_3sigma = 0;
    for r in &results {
        let p = &r.point;
        let d = r.closed_vs_quadrature();
        worst = worst.max(d);
        let z = r.mc_z();
        if let Some(z) = z {
            worst_z = worst_z.max(z);
            if z > 3.0 {
                beyond_3sigma += 1;
            }
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.es_db,
            p.esi_db,
            p.r_s,
            p.alpha,
            fmt_sig(r.closed.value),
            fmt_sig(r.quadrature.value),
            r.monte_carlo
                .map(|m| fmt_sig(m.sop_hat))
                .unwrap_or_default(),
            fmt_sig(d),
            z.map(|z| format!("{z:.3}")).unwrap_or_default(),
            r.closed.fallback_pairs.len()
        );
    }
    match &a.output {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    eprintln!(
        "{} points, max |closed - quadrature| = {}",
        results.len(),
        fmt_sig(worst)
    );
    if a.trials > 0 {
        eprintln!("max Monte Carlo z = {worst_z:.3}, {beyond_3sigma} point(s) beyond 3 sigma");
    }
    if worst > a.tolerance {
        eprintln!("regression: tolerance {} exceeded", a.tolerance);
        return Ok(Outcome::Regression);
    }
    Ok(Outcome::Ok)
}
