//! Command-line front end.
//!
//! ```text
//! aggseek check|solve|run|sweep [--scenario PATH] [--k R[,R...]] [--h R]
//!         [--T R] [--lambda R] [--tol R] [--out PREFIX]
//! ```
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

mod plot;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::equilibrium::{solve_equilibrium, EquilibriumResult, SolverConfig, DEFAULT_LAMBDA, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::experiment::{self, RunOutcome, DEFAULT_SAMPLES};
use crate::flow::{IntegratorConfig, Trajectory, DEFAULT_HORIZON, DEFAULT_STEP};
use crate::lyapunov::compare_conditions;
use crate::model::{load_scenario, load_scenario_file, GameSpec, DEMAND_RESPONSE_SCENARIO};
use crate::parallel::init_thread_pool;

pub use plot::{comparison_svg, trajectory_csv, trajectory_svg, CSV_HEADER};
pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const THREADS_ENV: &str = "AGGSEEK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "aggseek", version, about = "Equilibrium seeking in aggregative games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the gain condition and the Lyapunov certificate.
    Check(Common),
    /// Compute the reference equilibrium by fixed-point iteration.
    Solve(Common),
    /// Integrate the dynamics for one gain and write CSV and SVG.
    Run(Common),
    /// Integrate for several gains and compare.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario document; defaults to the built-in 100-agent demand-response game.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Integral gain(s), comma separated; overrides the scenario value.
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    h: f64,
    #[arg(long = "T", default_value_t = DEFAULT_HORIZON)]
    horizon: f64,
    /// Relaxation of the fixed-point iteration.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Output prefix for CSV, SVG and JSON files.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_INPUT;
    }
    let result = match cli.command {
        Command::Check(c) => cmd_check(&c),
        Command::Solve(c) => cmd_solve(&c),
        Command::Run(c) => cmd_run(&c),
        Command::Sweep(c) => cmd_sweep(&c),
    };
    match result {
        Ok(report) => {
            let _ = out.write_all(report.render().as_bytes());
            let not_unique = report
                .entries()
                .iter()
                .any(|(k, v)| k.ends_with("equilibrium.unique") && v == "false");
            if not_unique {
                let _ = writeln!(err, "warning: strict monotonicity fails, the reference equilibrium may not be unique");
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            }
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            init_thread_pool(n);
            Ok(())
        }
        _ => Err(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")),
    }
}

fn load(c: &Common) -> Result<GameSpec> {
    match &c.scenario {
        Some(path) => load_scenario_file(path),
        None => load_scenario(DEMAND_RESPONSE_SCENARIO),
    }
}

fn solver_config(c: &Common) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        lambda: c.lambda,
        tol: c.tol,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn integrator_config(c: &Common) -> Result<IntegratorConfig> {
    IntegratorConfig::with_target_samples(c.h, c.horizon, DEFAULT_SAMPLES)
}

fn gains(c: &Common, game: &GameSpec) -> Vec<f64> {
    if c.k.is_empty() {
        vec![game.k]
    } else {
        c.k.clone()
    }
}

fn single_gain(c: &Common, game: GameSpec) -> Result<GameSpec> {
    match c.k.as_slice() {
        [] => Ok(game),
        [k] => game.with_gain(*k),
        _ => Err(Error::InvalidParameter {
            name: "k",
            message: "this command takes a single gain; use `sweep` for several".into(),
        }),
    }
}

/// `<prefix><suffix>`, keeping the prefix's directory.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn default_prefix(c: &Common, name: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(name))
}

fn write_json(path: &Path, value: &serde_json::Value, report: &mut Report) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    report.push("output.json", path.display());
    Ok(())
}

fn cmd_check(c: &Common) -> Result<Report> {
    let base = load(c)?;
    let mut report = Report::new();
    let mut dumps = Vec::new();
    for (idx, k) in gains(c, &base).into_iter().enumerate() {
        let game = base.with_gain(k)?;
        let cert = compare_conditions(&game);
        let scope = if c.k.len() > 1 { format!("run{idx}.") } else { String::new() };
        report.scenario(&scope, &game);
        report.certificate(&scope, &cert);
        dumps.push(serde_json::json!({ "scenario": report::digest_json(&game), "certificate": cert }));
    }
    if let Some(prefix) = &c.out {
        write_json(&with_suffix(prefix, ".json"), &serde_json::json!({ "check": dumps }), &mut report)?;
    }
    Ok(report)
}

fn cmd_solve(c: &Common) -> Result<Report> {
    let game = single_gain(c, load(c)?)?;
    let eq = solve_equilibrium(&game, &solver_config(c)?)?;
    let mut report = Report::new();
    report.scenario("", &game);
    report.equilibrium("", &eq);
    if let Some(prefix) = &c.out {
        let path = with_suffix(prefix, ".xbar.csv");
        std::fs::write(&path, plot::xbar_csv(&eq.xbar, game.n))?;
        report.push("output.xbar", path.display());
        let dump = serde_json::json!({ "scenario": report::digest_json(&game), "equilibrium": eq });
        write_json(&with_suffix(prefix, ".json"), &dump, &mut report)?;
    }
    Ok(report)
}

fn write_run_files(prefix: &Path, traj: &Trajectory, title: &str, report: &mut Report, scope: &str) -> Result<(PathBuf, PathBuf)> {
    let csv = with_suffix(prefix, ".csv");
    let svg = with_suffix(prefix, ".svg");
    std::fs::write(&csv, trajectory_csv(traj))?;
    std::fs::write(&svg, trajectory_svg(traj, title))?;
    report.push(&format!("{scope}output.csv"), csv.display());
    report.push(&format!("{scope}output.svg"), svg.display());
    Ok((csv, svg))
}

fn run_dump(game: &GameSpec, eq: &EquilibriumResult, outcome: &RunOutcome, csv: &Path, svg: &Path) -> serde_json::Value {
    serde_json::json!({
        "scenario": report::digest_json(game),
        "equilibrium": report::equilibrium_summary(eq),
        "run": outcome,
        "outputs": { "csv": csv.display().to_string(), "svg": svg.display().to_string() },
    })
}

fn cmd_run(c: &Common) -> Result<Report> {
    let game = single_gain(c, load(c)?)?;
    let cfg = integrator_config(c)?;
    let eq = solve_equilibrium(&game, &solver_config(c)?)?;
    let outcome = experiment::run(&game, &eq, &cfg)?;
    let prefix = default_prefix(c, "aggseek_run");
    let mut report = Report::new();
    report.scenario("", &game);
    report.equilibrium("", &eq);
    report.certificate("", &outcome.certificate);
    report.outcome("", &outcome);
    let title = format!("k = {}", game.k);
    let (csv, svg) = write_run_files(&prefix, &outcome.trajectory, &title, &mut report, "")?;
    let dump = run_dump(&game, &eq, &outcome, &csv, &svg);
    write_json(&with_suffix(&prefix, ".json"), &dump, &mut report)?;
    Ok(report)
}

fn cmd_sweep(c: &Common) -> Result<Report> {
    let game = load(c)?;
    let ks = gains(c, &game);
    let cfg = integrator_config(c)?;
    let eq = solve_equilibrium(&game, &solver_config(c)?)?;
    let outcomes = experiment::sweep(&game, &ks, &eq, &cfg)?;
    let prefix = default_prefix(c, "aggseek_sweep");
    let mut report = Report::new();
    report.scenario("", &game);
    report.push("sweep.k", report::join(&ks));
    report.equilibrium("", &eq);
    let mut runs = Vec::new();
    for (idx, outcome) in outcomes.iter().enumerate() {
        let scope = format!("run{idx}.");
        let run_game = game.with_gain(outcome.k)?;
        report.certificate(&scope, &outcome.certificate);
        report.outcome(&scope, outcome);
        let run_prefix = with_suffix(&prefix, &format!("_k{idx}"));
        let title = format!("k = {}", outcome.k);
        let (csv, svg) = write_run_files(&run_prefix, &outcome.trajectory, &title, &mut report, &scope)?;
        runs.push(run_dump(&run_game, &eq, outcome, &csv, &svg));
    }
    let compare = with_suffix(&prefix, "_compare.svg");
    let series: Vec<(f64, &Trajectory)> = outcomes.iter().map(|o| (o.k, &o.trajectory)).collect();
    std::fs::write(&compare, comparison_svg(&series))?;
    report.push("output.compare_svg", compare.display());
    write_json(&with_suffix(&prefix, ".json"), &serde_json::json!({ "sweep": runs }), &mut report)?;
    Ok(report)
}
