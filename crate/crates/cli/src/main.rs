use clap::{Parser, Subcommand};
use leoqkd_cli::config::{load_config, Scenario, ScenarioConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "leoqkd", about = "LEO optical QKD downlink simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation scenario and write its artifacts.
    Simulate {
        /// Configuration file (TOML); defaults apply for missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario to run (overrides the config file).
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
        /// RNG seed (overrides the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, scenario, seed, out } => {
            let mut cfg = match config {
                Some(path) => match load_config(&path) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        std::process::exit(1);
                    }
                },
                None => ScenarioConfig::default(),
            };
            if let Some(s) = scenario {
                cfg.scenario = s;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o.display().to_string();
            }
            if let Err(e) = leoqkd_cli::run(&cfg) {
                eprintln!("error: {e:#}");
                std::process::exit(1);
            }
        }
    }
}
