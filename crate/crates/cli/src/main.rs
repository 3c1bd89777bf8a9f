mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "pulseforge", version, about = "Pulse-sequence search and simulation for spin ensembles")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "PULSEFORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let cfg = match cli.command {
        Command::Run { config } => match io::load_config(&config) {
            Ok(mut cfg) => {
                cfg.threads = cli.threads.or(cfg.threads);
                cfg
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        command => RunConfig { threads: cli.threads, command },
    };
    match commands::execute(cfg) {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::NoSolution) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
