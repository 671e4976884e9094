//! `ratg`: generate Go unit tests with repository context, then measure
//! them.

mod commands;
mod config;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use config::{RunConfig, Settings, UsageError};
use run_dir::{LedgerKind, RunDir};

#[derive(Debug, Parser)]
#[command(name = "ratg", version, about = "Repository-aware Go unit test generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    settings: Settings,
    /// More log output (repeatable). `RATG_LOG` overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors in the log.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List focal units into `manifest.json`.
    Extract,
    /// Generate and assemble candidate tests.
    Generate,
    /// Compile and run the candidates; line coverage.
    Evaluate,
    /// Mutation testing with the passing candidates.
    Mutate,
    /// Extract, generate, evaluate, mutate and report.
    Run {
        /// Stop after evaluation.
        #[arg(long)]
        no_mutation: bool,
    },
    /// Print the report table for one or more run directories.
    Report {
        /// Run directories to aggregate [default: --run-dir].
        runs: Vec<PathBuf>,
        /// Write `report.json` and `report.txt` here.
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
    },
}

fn init_logging(verbose: u8, quiet: bool) {
    let default = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_env("RATG_LOG").unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).with_target(false).init();
}

fn stage_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Extract => "extract",
        Command::Generate => "generate",
        Command::Evaluate => "evaluate",
        Command::Mutate => "mutate",
        Command::Run { .. } => "run",
        Command::Report { .. } => "report",
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    if let Command::Report { runs, output } = &cli.command {
        let cfg = RunConfig::resolve(&cli.settings, false)?;
        let (runs, output) = if runs.is_empty() {
            let rd = RunDir::lock(&cfg.run_dir)?;
            (vec![RunDir::open(rd.root())?], Some(rd))
        } else {
            let runs = runs.iter().map(|r| RunDir::open(r)).collect::<anyhow::Result<Vec<_>>>()?;
            (runs, output.as_deref().map(RunDir::lock).transpose()?)
        };
        commands::report(&runs, output.as_ref())?;
        return Ok(());
    }

    let cfg = RunConfig::resolve(&cli.settings, true)?;
    let rd = RunDir::lock(&cfg.run_dir)?;
    cfg.write_snapshot(&rd.path("config.json"))?;
    let result = (|| {
        match &cli.command {
            Command::Extract => drop(commands::extract(&cfg, &rd)?),
            Command::Generate => drop(commands::generate(&cfg, &rd)?),
            Command::Evaluate => drop(commands::evaluate(&cfg, &rd)?),
            Command::Mutate => drop(commands::mutate(&cfg, &rd)?),
            Command::Run { no_mutation } => {
                rd.remove(commands::MANIFEST)?;
                rd.truncate(run_dir::LEDGER_FILE)?;
                commands::extract(&cfg, &rd)?;
                commands::generate(&cfg, &rd)?;
                commands::evaluate(&cfg, &rd)?;
                if !no_mutation {
                    commands::mutate(&cfg, &rd)?;
                }
                commands::report(&[RunDir::open(rd.root())?], Some(&rd))?;
            }
            Command::Report { .. } => unreachable!(),
        }
        Ok::<_, anyhow::Error>(())
    })();
    if let Ok(entries) = rd.ledger() {
        let count = |k| entries.iter().filter(|e| e.kind == k).count();
        let (skipped, errors) = (count(LedgerKind::Skipped), count(LedgerKind::Error));
        if skipped + errors > 0 {
            eprintln!("ratg: {skipped} skipped, {errors} errors; see {}", rd.path(run_dir::LEDGER_FILE).display());
        }
    }
    if let Err(e) = &result {
        if e.downcast_ref::<UsageError>().is_none() {
            let _ = rd.record(stage_name(&cli.command), "-", LedgerKind::Fatal, format!("{e:#}"));
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.quiet);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("ratg: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ratg: {e:#}");
            ExitCode::FAILURE
        }
    }
}
