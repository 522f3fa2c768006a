use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpmab::cli::{execute, preset_list, Command, Invocation};

/// Simulations of decentralized multi-player bandits.
#[derive(Parser)]
#[command(name = "mpmab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Static population: checkpointed pseudo-regret.
    Run(RunArgs),
    /// Static population, one run per value of the config's [sweep] table.
    Sweep(RunArgs),
    /// Arrivals and departures: reward ratio against the oracle.
    Dynamic(RunArgs),
    /// List the shipped presets.
    PresetList {
        #[arg(long, default_value = "presets")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file; `.toml` may be omitted.
    #[arg(long)]
    config: PathBuf,
    /// Replace the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "MPMAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: one per logical core).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

fn invocation(command: Command, args: RunArgs) -> Invocation {
    Invocation {
        command,
        config: args.config,
        seed: args.seed,
        out: args.out,
        workers: args.workers.map(|w| w as usize),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let inv = match cli.command {
        Sub::Run(a) => invocation(Command::Run, a),
        Sub::Sweep(a) => invocation(Command::Sweep, a),
        Sub::Dynamic(a) => invocation(Command::Dynamic, a),
        Sub::PresetList { dir } => {
            return match preset_list(&dir) {
                Ok(lines) => {
                    for line in lines {
                        println!("{line}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match execute(&inv) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
