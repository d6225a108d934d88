mod args;
mod export;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use run::{Mode, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { input, emit_dsl, out } => run::analyze(input, *emit_dsl, out.as_deref()),
        Command::Derive {
            input,
            u,
            emit_dsl,
            out,
        } => run::derive(input, u, *emit_dsl, out.as_deref()),
        Command::Properize { input, u, out } => run::properize(input, u.as_deref(), out),
        Command::Build(r) => run::run(r, Mode::Build),
        Command::Verify(r) => run::run(r, Mode::Verify),
        Command::Pipeline(r) => run::run(r, Mode::Pipeline),
        Command::Render(r) => run::run(r, Mode::Render),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Ok(Outcome::Inconclusive) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
