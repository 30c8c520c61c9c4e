use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotators_harness::config::ExperimentConfig;
use rotators_harness::error::{HarnessError, Result};
use rotators_harness::oracle_run::run_oracle;
use rotators_harness::output::read_json;
use rotators_harness::presets::{preset, PRESETS};
use rotators_harness::run::{run_in, Analysis, Manifest};
use rotators_harness::sweep::{estimate_dcr, read_summary, sweep, SweepGrid};

#[derive(Parser)]
#[command(name = "rotators", version, about = "Driven clock and XY rotator simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter grid from a TOML sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact stationary distribution of a small clock system.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print or write a named preset. Without `--name`, list them.
    Preset {
        #[arg(long)]
        name: Option<String>,
        /// Write the preset TOML here instead of stdout.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Summarize a finished run or sweep directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Write to stdout, ignoring a closed pipe (e.g. output piped into `head`).
fn write_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(value: &serde_json::Value) {
    write_stdout(&format!("{}\n", serde_json::to_string_pretty(value).expect("values serialize")));
}

fn out_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory))
}

fn report(dir: &Path) -> Result<serde_json::Value> {
    let summary = dir.join("summary.csv");
    if summary.exists() {
        let rows = read_summary(&summary)?;
        let keys: BTreeSet<(u64, u32)> = rows.iter().map(|r| (r.beta.to_bits(), r.n)).collect();
        let mut dcr = Vec::new();
        for (bits, n) in keys {
            let beta = f64::from_bits(bits);
            let est = estimate_dcr(&rows, beta, n)?;
            dcr.push(serde_json::json!({"beta": beta, "n": n, "d_cr": est}));
        }
        return Ok(serde_json::json!({"cells": rows, "critical_drift": dcr}));
    }
    let analysis_path = dir.join("analysis.json");
    if analysis_path.exists() {
        let manifest = Manifest::load(dir)?;
        let analysis: Analysis = read_json(&analysis_path)?;
        return Ok(serde_json::json!({
            "software": manifest.software,
            "seed": manifest.seed,
            "wall_time_s": manifest.wall_time_s,
            "analysis": analysis,
        }));
    }
    let oracle_path = dir.join("oracle.json");
    if oracle_path.exists() {
        let v: serde_json::Value = read_json(&oracle_path)?;
        return Ok(serde_json::json!({ "oracle": v }));
    }
    Err(HarnessError::Invalid(format!(
        "{} holds no summary.csv, analysis.json or oracle.json",
        dir.display()
    )))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let outcome = run_in(&cfg, &dir)?;
            print_json(&serde_json::json!({
                "dir": outcome.dir,
                "analysis": outcome.analysis,
            }));
        }
        Command::Sweep { config, out } => {
            let grid = SweepGrid::load(&config)?;
            let dir = out_dir(&grid.base, out);
            let rows = sweep(&grid, &dir)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            print_json(&serde_json::json!({
                "dir": dir,
                "cells": rows.len(),
                "failed": failed,
            }));
        }
        Command::Oracle { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let rep = run_oracle(&cfg, &dir)?;
            print_json(&serde_json::json!({ "dir": dir, "oracle": rep }));
        }
        Command::Preset { name: None, .. } => {
            for (name, about) in PRESETS {
                write_stdout(&format!("{name:<26} {about}\n"));
            }
        }
        Command::Preset { name: Some(name), emit } => {
            let p = preset(&name)?;
            let text = p.to_toml_string();
            match emit {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
                    eprintln!("wrote {} (run with `rotators {} --config {}`)", path.display(), p.verb(), path.display());
                }
                None => write_stdout(&text),
            }
        }
        Command::Report { dir } => print_json(&report(&dir)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("ROTATORS_MAX_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring ROTATORS_MAX_THREADS={v}"),
        }
    }
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.to_json()).expect("errors serialize"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
