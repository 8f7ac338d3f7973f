//! `hyperop`: evaluate, tabulate and verify the hyper-operation tower.

mod cache;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvalArgs, PhiArgs, TableArgs, VerifyArgs};
use config::CliConfig;

#[derive(Debug, Parser)]
#[command(name = "hyperop", version, about = "Tetration and higher hyper-operations on the reals", allow_negative_numbers = true)]
struct Cli {
    #[command(flatten)]
    config: CliConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one level (or its inverse) at a point.
    #[command(allow_negative_numbers = true)]
    Eval(EvalArgs),
    /// Tabulate value, derivative and functional-equation residual.
    #[command(allow_negative_numbers = true)]
    Table(TableArgs),
    /// Run the verification suite; exit 0 iff every check passes.
    Verify(VerifyArgs),
    /// Evaluate the auxiliary entire function, pointwise or on a grid.
    #[command(allow_negative_numbers = true)]
    Phi(PhiArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = cli.config.validate() {
        eprintln!("{e}");
        return e.exit();
    }
    let run = match &cli.command {
        Command::Eval(a) => commands::eval(&cli.config, a).map(|_| true),
        Command::Table(a) => commands::table(&cli.config, a).map(|_| true),
        Command::Verify(a) => commands::verify(&cli.config, a),
        Command::Phi(a) => commands::phi(&cli.config, a).map(|_| true),
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            e.exit()
        }
    }
}
