use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::{info, warn};

use sma_bimorph::config::{parse_config, ScenarioConfig};
use sma_bimorph::scenario::{run_scenario, Command};
use sma_bimorph::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Simulate one drive setting and write the tip displacement trace.
    Simulate,
    /// Run the frequency x duty-cycle sweep.
    Sweep,
    /// Write the drive power trace.
    Power,
    /// Fit model parameters to AMADO targets.
    Calibrate,
    /// Run the swimmer speed scan and trajectory.
    Swim,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Sweep => Command::Sweep,
            Cmd::Power => Command::Power,
            Cmd::Calibrate => Command::Calibrate,
            Cmd::Swim => Command::Swim,
        }
    }
}

/// Antagonistic SMA bimorph actuator and microswimmer simulator.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Cmd,
    /// TOML scenario file. Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores). Does not change outputs.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig, Error> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config(&text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = load(cli.config.as_ref()).and_then(|cfg| {
        for w in cfg.warnings() {
            warn!("{w}");
        }
        let out = cli.out.clone().unwrap_or_else(|| cfg.run.output_dir.clone());
        run_scenario(&cfg, cli.command.into(), &out, cli.threads)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for p in &outcome.artifacts {
                info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
