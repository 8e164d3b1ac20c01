use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use rydgate_cli::{config, output_dir, presets, runner};

#[derive(Parser)]
#[command(
    name = "rydgate",
    about = "Pulse-level simulator for microwave-dressed Rydberg-ion entangling gates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config file.
    Run {
        /// Path to a JSON experiment definition.
        config: PathBuf,
        /// Output directory (default: rydgate-out/<name>, or $RYDGATE_OUT/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named figure-reproduction preset.
    Preset {
        /// Preset name (see `rydgate list`).
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available presets.
    List,
    /// Validate a config file and print diagnostics without running.
    Validate {
        config: PathBuf,
    },
}

fn fail(error: &runner::RunError) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "kind": error.kind(), "error": error.to_string() })
    );
    ExitCode::from(error.exit_code() as u8)
}

fn run_config(config: config::ExperimentConfig, out: Option<PathBuf>) -> ExitCode {
    let outdir = output_dir(out, &config.name);
    match runner::execute(&config, &outdir) {
        Ok(outcome) => {
            println!(
                "{} finished in {:.2} s",
                outcome.summary.name, outcome.summary.wall_clock_seconds
            );
            for file in &outcome.files {
                println!("  wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn load_config_file(path: &PathBuf) -> Result<config::ExperimentConfig, runner::RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| runner::RunError::Config(format!("{}: {e}", path.display())))?;
    config::ExperimentConfig::from_json(&text)
        .map_err(|e| runner::RunError::Config(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => match load_config_file(&config) {
            Ok(c) => run_config(c, out),
            Err(e) => fail(&e),
        },
        Command::Preset { name, out } => match presets::load_preset(&name) {
            Ok(c) => run_config(c, out),
            Err(msg) => fail(&runner::RunError::Config(msg)),
        },
        Command::List => {
            for (name, desc) in presets::preset_descriptions() {
                println!("{name:<18} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let text = match fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    return fail(&runner::RunError::Io(format!("{}: {e}", config.display())))
                }
            };
            let diagnostics = match config::ExperimentConfig::from_json(&text) {
                Ok(c) => config::validate(&c),
                Err(e) => config::Diagnostics {
                    errors: vec![format!("parse error: {e}")],
                    warnings: vec![],
                },
            };
            println!("{}", serde_json::to_string_pretty(&diagnostics).unwrap());
            ExitCode::SUCCESS
        }
    }
}
