mod cli;
mod commands;
mod error;
mod manifest;

use std::time::Instant;

use clap::Parser;

use cli::{Cli, Command};
use error::CliError;
use manifest::RunManifest;

fn main() {
    // argument errors print usage and exit 1; --help/--version exit 0
    let parsed = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            e.print().ok();
            std::process::exit(code);
        }
    };
    let start = Instant::now();
    let name = match &parsed.command {
        Command::Ingest(_) => "ingest",
        Command::Score(_) => "score",
        Command::Normalize(_) => "normalize",
        Command::Whiten(_) => "whiten",
        Command::Correlate(_) => "correlate",
        Command::Measure(_) => "measure",
        Command::Plan(_) => "plan",
        Command::Simulate(_) => "simulate",
        Command::Report(_) => "report",
        Command::Validate(_) => "validate",
    };
    let mut manifest = RunManifest::new(name);
    if let Some(seed) = parsed.seed {
        manifest.arg("seed_override", seed);
    }

    let result = run(&parsed, &mut manifest);
    let exit_code = match &result {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    };
    manifest.exit_code = exit_code;
    manifest.duration_ms = start.elapsed().as_millis();
    if let Err(e) = manifest.append_to(&parsed.out_dir) {
        eprintln!("warning: could not write run manifest: {e}");
    }
    if let Err(e) = result {
        eprintln!("error: {e}");
    }
    std::process::exit(exit_code);
}

fn run(parsed: &Cli, manifest: &mut RunManifest) -> Result<(), CliError> {
    let mut ctx = commands::Ctx {
        manifest,
        quiet: parsed.quiet,
        seed: parsed.seed,
        config_dir: &parsed.config_dir,
    };
    match &parsed.command {
        Command::Ingest(args) => commands::ingest(args, &mut ctx),
        Command::Score(args) => commands::score(args, &mut ctx),
        Command::Normalize(args) => commands::normalize(args, &mut ctx),
        Command::Whiten(args) => commands::whiten_cmd(args, &mut ctx),
        Command::Correlate(args) => commands::correlate(args, &mut ctx),
        Command::Measure(args) => commands::measure(args, &mut ctx),
        Command::Plan(args) => commands::plan(args, &mut ctx),
        Command::Simulate(args) => commands::simulate(args, &mut ctx),
        Command::Report(args) => commands::report(args, &mut ctx),
        Command::Validate(args) => commands::validate_cmd(args, &mut ctx),
    }
}
