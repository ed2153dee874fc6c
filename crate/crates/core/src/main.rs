use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pmids::classifier::classify;
use pmids::harness::config::GameSpec;
use pmids::harness::{run_experiment, run_sweep, ExperimentConfig};
use pmids::{build_game, Error, Result};

#[derive(Parser)]
#[command(
    name = "pmids",
    version,
    about = "Information directed sampling for linear partial monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write rounds.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_path` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the regime report of the configured game.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the experiment at several horizons and fit the regret exponent.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(dir) = out {
        cfg.out_path = Some(dir.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

/// Accepts a full experiment config or a document holding only `game`.
fn load_game(path: &Path) -> Result<GameSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    match value.as_object() {
        Some(map) if map.len() == 1 && map.contains_key("game") => {
            serde_json::from_value(map["game"].clone()).map_err(|e| Error::Config(e.to_string()))
        }
        _ => Ok(ExperimentConfig::from_json(&text)?.game),
    }
}

fn report(spec: &GameSpec) -> Result<Value> {
    match spec {
        GameSpec::Linear(preset) => {
            let game = build_game(preset)?;
            Ok(json!({ "game": game.name(), "report": classify(&game)? }))
        }
        GameSpec::Contextual(c) => {
            let reports = c
                .contexts
                .iter()
                .map(|p| {
                    let game = build_game(p)?;
                    Ok(json!({ "game": game.name(), "report": classify(&game)? }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({ "contexts": reports }))
        }
        GameSpec::Kernel(_) => Err(Error::Config(
            "classification needs a finite linear game".into(),
        )),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config, out)?;
            let result = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&result.summary)?);
        }
        Command::Classify { config } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report(&load_game(&config)?)?)?
            );
        }
        Command::Sweep {
            config,
            horizons,
            out,
        } => {
            if horizons.contains(&0) {
                return Err(Error::Config("horizons must be positive".into()));
            }
            let cfg = load(&config, out)?;
            let sweep = run_sweep(&cfg, &horizons)?;
            println!("{}", serde_json::to_string_pretty(&sweep)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
