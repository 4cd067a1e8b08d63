use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kho::harness::{self, RunConfig};

/// Kicked harmonic oscillator experiments.
#[derive(Parser)]
#[command(name = "kho", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write outputs here instead of the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse and check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match RunConfig::from_file(&config) {
            Ok(cfg) => {
                println!("ok: {} experiment, output to {}", cfg.experiment, cfg.output_dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, output_dir } => {
            let cfg = match RunConfig::from_file(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let cfg = match output_dir {
                Some(dir) => cfg.with_output_dir(dir),
                None => cfg,
            };
            match harness::run(&cfg) {
                Ok(report) => {
                    println!(
                        "{} run finished in {:.2} s, outputs in {}",
                        cfg.experiment,
                        report.manifest.wall_time_seconds,
                        report.output_dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(harness::exit_code(&e) as u8)
                }
            }
        }
    }
}
