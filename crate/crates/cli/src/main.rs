use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mixmc_cli::bench::{bench, BenchArgs};
use mixmc_cli::plot::{plot, PlotArgs};
use mixmc_cli::run::{run_mcmc, RunArgs};

/// MCMC for Bayesian mixture models.
#[derive(Debug, Parser)]
#[command(name = "mixmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a chain and write the requested summaries.
    RunMcmc(RunArgs),
    /// Render the density, cluster-count histogram and traceplot as SVG.
    Plot(PlotArgs),
    /// Generate a synthetic benchmark dataset.
    Bench(BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::RunMcmc(args) => run_mcmc(args),
        Command::Plot(args) => plot(args).map(|_| ()),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
