mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::report::{Envelope, SCHEMA_VERSION};

const EXPRESSION_HELP: &str = "\
Expression models (heuristic.model.kind = \"expression\") accept:
  numbers (1, 2.5, 1e-3), parameter names, + - * / ^ (right associative),
  unary minus, parentheses, exp(x), log(x).

Exit codes: 0 ok, 2 config/input error, 3 numerical failure, 4 undefined measure.";

#[derive(Parser)]
#[command(name = "fragility", version, about = "Tail-fragility measures, heuristics and robustness checks", after_help = EXPRESSION_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Write the JSON report here (CSV grids go next to it); stdout otherwise.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Override `monte_carlo.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// No summary on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tail shortfall and its sensitivity V at each stress level.
    Measure(Common),
    /// Transfer function profile, its landmarks, and the payoff comparison.
    Transfer(Common),
    /// Left-tail robustness over a ray, an interval, or asymptotically.
    Robustness(Common),
    /// Right-tail antifragility check and payoff classification.
    Antifragility(Common),
    /// Second-order detection heuristic on a model.
    Heuristic(Common),
    /// Stress asymmetry under widening scenarios.
    Stress(Common),
    /// Quadrature against Monte Carlo for the tail shortfall.
    Oracle(Common),
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::Measure(c) => ("measure", c),
            Command::Transfer(c) => ("transfer", c),
            Command::Robustness(c) => ("robustness", c),
            Command::Antifragility(c) => ("antifragility", c),
            Command::Heuristic(c) => ("heuristic", c),
            Command::Stress(c) => ("stress", c),
            Command::Oracle(c) => ("oracle", c),
        }
    }
}

fn run(cmd: &Command) -> Result<(), CliError> {
    let (name, common) = cmd.split();
    let loaded = config::load(&common.config)?;
    let outcome = match cmd {
        Command::Measure(_) => commands::measure(&loaded),
        Command::Transfer(_) => commands::transfer(&loaded),
        Command::Robustness(_) => commands::robustness_cmd(&loaded),
        Command::Antifragility(_) => commands::antifragility(&loaded),
        Command::Heuristic(_) => commands::heuristic(&loaded, common.seed),
        Command::Stress(_) => commands::stress(&loaded),
        Command::Oracle(_) => commands::oracle(&loaded, common.seed),
    }?;
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        tool: "fragility",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        config_sha256: loaded.sha256.clone(),
        seed_override: common.seed,
        quadrature: loaded.quadrature()?,
        monte_carlo: loaded.monte_carlo(common.seed)?,
        inputs: loaded.raw.clone(),
        result: outcome.result,
        files: Vec::new(),
    };
    let json = report::emit(envelope, &outcome.tables, common.out.as_deref())?;
    if common.out.is_none() {
        std::io::stdout().write_all(json.as_bytes()).map_err(|e| CliError::Output(e.to_string()))?;
    }
    if !common.quiet {
        eprintln!("{name}: {}", outcome.summary);
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
