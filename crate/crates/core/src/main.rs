use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causal_twin::commands::{
    cmd_estimate, cmd_ingest, cmd_recover, cmd_simulate, cmd_tune, RECOVER_FAILED_EXIT,
};
use causal_twin::config::{KeyValues, RunConfig};
use causal_twin::series::fmt_f64;
use causal_twin::Result;

/// Causal digital twin: simulate, ingest and estimate time-varying causal
/// factors between connected assets.
///
/// Exit codes: 0 success, 1 I/O, 2 usage or config, 3 parse, 4 simulation
/// spec validation, 5 numerical failure, 6 recover check failed.
#[derive(Parser)]
#[command(name = "causal-twin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an SVAR series and its ground-truth factor trajectory.
    Simulate(Common),
    /// Reduce a directory of vibration snapshots to a feature series.
    Ingest(Common),
    /// Estimate factor trajectories from a series CSV or snapshot directory.
    Estimate(Common),
    /// Grid-search q and r by innovation log-likelihood.
    Tune(Common),
    /// Simulate, estimate and score against the truth.
    Recover(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    output: Option<PathBuf>,
    /// filter, smooth or fixed-lag.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    lag_depth: Option<usize>,
    /// Process noise variance per factor.
    #[arg(long)]
    q: Option<f64>,
    /// Measurement noise variance per channel.
    #[arg(long)]
    r: Option<f64>,
    /// Initial factor variance.
    #[arg(long)]
    p0: Option<f64>,
    /// rms, kurtosis, peak or crest.
    #[arg(long)]
    feature: Option<String>,
    /// Comma-separated zero-based snapshot columns.
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write one SVG per outcome node.
    #[arg(long)]
    plots: bool,
    /// Override any config key, e.g. `--set tolerance=0.02` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn into_config(self) -> Result<RunConfig> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        for item in &self.overrides {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                causal_twin::Error::Config(format!("--set expects KEY=VALUE, got `{item}`"))
            })?;
            kv.set(k.trim(), v.trim());
        }
        let path = |p: PathBuf| p.display().to_string();
        let flags = [
            ("input", self.input.map(path)),
            ("output", self.output.map(path)),
            ("mode", self.mode),
            ("lag_depth", self.lag_depth.map(|v| v.to_string())),
            ("q", self.q.map(fmt_f64)),
            ("r", self.r.map(fmt_f64)),
            ("p0", self.p0.map(fmt_f64)),
            ("feature", self.feature),
            ("channels", self.channels),
            ("seed", self.seed.map(|v| v.to_string())),
            ("plots", self.plots.then(|| "true".to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                kv.set(k, v);
            }
        }
        RunConfig::from_key_values(kv)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(c) => {
            let out = cmd_simulate(&c.into_config()?)?;
            println!("wrote {} and {}", out.series.display(), out.truth.display());
        }
        Command::Ingest(c) => {
            let path = cmd_ingest(&c.into_config()?)?;
            println!("wrote {}", path.display());
        }
        Command::Estimate(c) => {
            let table = cmd_estimate(&c.into_config()?)?;
            println!("estimated {} rows x {} factors", table.len(), table.columns.len());
        }
        Command::Tune(c) => {
            let outcome = cmd_tune(&c.into_config()?)?;
            let best = &outcome.table[outcome.best_index];
            println!(
                "selected q = {}, r = {} (log-likelihood {})",
                fmt_f64(best.q),
                fmt_f64(best.r),
                fmt_f64(best.loglik)
            );
        }
        Command::Recover(c) => {
            let report = cmd_recover(&c.into_config()?)?;
            for s in &report.scores {
                println!("{}: rmse {} max {}", s.name, fmt_f64(s.rmse), fmt_f64(s.max_abs_error));
            }
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!(
                "{verdict}: max rmse {}, max abs error {}, tolerance {}",
                fmt_f64(report.max_rmse()),
                fmt_f64(report.max_abs_error()),
                fmt_f64(report.tolerance)
            );
            if !report.passed() {
                return Ok(ExitCode::from(RECOVER_FAILED_EXIT as u8));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
