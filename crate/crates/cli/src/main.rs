use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use sfwm_cli::commands::{self, AnalyticOpts, FitOpts, McCarOpts, McFringeOpts};
use sfwm_cli::io::write_json;

#[derive(Parser)]
#[command(name = "sfwm", version, about = "Time-bin entangled photon pairs from SFWM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form sweep of pair rates, CAR and visibility.
    Analytic(AnalyticOpts),
    /// Monte Carlo coincidence histogram and CAR.
    McCar(McCarOpts),
    /// Monte Carlo two-photon interference fringe and its fit.
    McFringe(McFringeOpts),
    /// Fit scaling or fringe data from a CSV file.
    Fit(FitOpts),
    /// Print the built-in configuration as JSON.
    DefaultConfig {
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Analytic(o) => commands::analytic(&o),
        Command::McCar(o) => commands::mc_car(&o),
        Command::McFringe(o) => commands::mc_fringe(&o),
        Command::Fit(o) => commands::fit(&o),
        Command::DefaultConfig { out } => {
            let cfg = sfwm_core::config::default_config();
            match out {
                Some(path) => {
                    write_json(&path, &cfg)?;
                    Ok(vec![path])
                }
                None => {
                    println!("{}", serde_json::to_string_pretty(&cfg)?);
                    Ok(Vec::new())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
