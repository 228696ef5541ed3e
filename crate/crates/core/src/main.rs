//! Command-line interface: scenario-driven simulation, drift construction,
//! no-arbitrage audits, Monte Carlo martingale tests and the brute-force
//! oracle.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use termstruct::sim_lab::{run_scenario, Overrides, Stage};

#[derive(Parser)]
#[command(
    name = "termstruct",
    about = "Defaultable term structures driven by semimartingales: simulation and no-arbitrage audits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Path-count override.
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory (default: $TERMSTRUCT_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail (exit 4) when an audit or test does not pass.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and write price/decomposition tables.
    Simulate(Common),
    /// Solve the drift conditions and install a consistent drift.
    ConstructDrift(Common),
    /// Evaluate the no-arbitrage condition residuals on simulated paths.
    Audit(Common),
    /// Monte Carlo martingale test of discounted bond prices.
    McTest(Common),
    /// Full enumeration oracle for two-period specs.
    Oracle(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = match &cli.command {
        Command::Simulate(c) => (Stage::Simulate, c),
        Command::ConstructDrift(c) => (Stage::ConstructDrift, c),
        Command::Audit(c) => (Stage::Audit, c),
        Command::McTest(c) => (Stage::McTest, c),
        Command::Oracle(c) => (Stage::Oracle, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        paths: common.paths,
        out_dir: common.out.clone(),
        strict: common.strict,
    };
    let outcome = run_scenario(&common.scenario, stage, &overrides);
    ExitCode::from(outcome.status as u8)
}
