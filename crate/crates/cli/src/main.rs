//! `srf` command line: scenario-driven verification of flow inequalities on
//! discrete instances, generator families and Riemannian charts, plus the
//! transportation distance between two time-dependent instances.

mod report;
mod runner;
mod scenario;

use clap::{Parser, Subcommand};
use report::ReportDocument;
use runner::RunContext;
use scenario::Scenario;
use srf_core::Real;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "srf", version, about = "Numerical checks for super-Ricci flow inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override every check tolerance.
    #[arg(long, global = true)]
    tol: Option<Real>,

    /// Output format.
    #[arg(long, global = true, default_value = "json")]
    format: Format,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for check-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Seed recorded in the report (fixed iteration orders keep runs
    /// deterministic regardless).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Json,
    #[value(name = "csv-slack-series")]
    CsvSlackSeries,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check declared in a scenario.
    Verify { scenario: PathBuf },
    /// Run only the transport-level checks of a scenario.
    Ot { scenario: PathBuf },
    /// Run only the generator-family checks of a scenario.
    Gamma { scenario: PathBuf },
    /// Run only the chart-level checks of a scenario.
    Riemann { scenario: PathBuf },
    /// Transportation distance between two instance scenarios.
    Ddi {
        a: PathBuf,
        b: PathBuf,
        /// Alternation rounds of the upper-bound solver.
        #[arg(long, default_value_t = 8)]
        rounds: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> Result<i32, srf_core::Error> {
    let report = match &cli.command {
        Command::Verify { scenario } => run_scenario(cli, scenario, None)?,
        Command::Ot { scenario } => run_scenario(cli, scenario, Some(OPS_OT))?,
        Command::Gamma { scenario } => run_scenario(cli, scenario, Some(OPS_GAMMA))?,
        Command::Riemann { scenario } => run_scenario(cli, scenario, Some(OPS_RIEMANN))?,
        Command::Ddi { a, b, rounds } => {
            runner::run_ddi(a, b, *rounds, cli.tol.unwrap_or(1e-6), cli.seed)?
        }
    };
    emit(cli, &report)?;
    Ok(report.exit_code())
}

const OPS_OT: &[&str] = &["wasserstein", "controls"];
const OPS_GAMMA: &[&str] = &["srf_gamma", "gradient_estimate", "n_gradient_estimate"];
const OPS_RIEMANN: &[&str] = &[
    "srf_tensor",
    "sub_rf_tensor",
    "n_srf_tensor",
    "weight_identity",
    "gradient_flow_evi",
    "distance_expansion",
];

fn run_scenario(
    cli: &Cli,
    path: &Path,
    filter: Option<&[&str]>,
) -> Result<ReportDocument, srf_core::Error> {
    let (mut scenario, bytes) = Scenario::load(path)?;
    if let Some(ops) = filter {
        scenario.checks.retain(|c| ops.contains(&c.op.as_str()));
    }
    let ctx = RunContext {
        scenario,
        base_dir: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        bytes,
        seed: cli.seed,
        tol_override: cli.tol,
        threads: cli.threads.max(1),
    };
    runner::run(&ctx)
}

fn emit(cli: &Cli, report: &ReportDocument) -> Result<(), srf_core::Error> {
    let mut payload = match cli.format {
        Format::Json => report.to_json(),
        Format::CsvSlackSeries => report.to_csv(),
    };
    if !payload.ends_with('\n') {
        payload.push('\n');
    }
    match &cli.out {
        None => {
            print!("{}", payload);
            Ok(())
        }
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| srf_core::Error::Config(format!("cannot write {}: {}", path.display(), e))),
    }
}
