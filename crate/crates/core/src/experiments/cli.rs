//! `dtppo run` and `dtppo report`.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::{aggregate, read_run_records, run_experiment, write_summary, ExperimentConfig, Settings};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "dtppo", version, about = "Decision-theory guided PPO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train `runs` independent agents and write per-episode records as CSV.
    Run(RunArgs),
    /// Aggregate run CSVs into per-episode cross-run statistics.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// cartpole | maze
    #[arg(long)]
    env: Option<String>,
    /// dt | ppo | dtppo | tlppo
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    maze_size: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dt_temperature: Option<f64>,
    #[arg(long)]
    decay_steps: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    rollout_size: Option<usize>,
    #[arg(long)]
    minibatch_size: Option<usize>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::new();
        let pairs: [(&str, Option<String>); 14] = [
            ("env", self.env.clone()),
            ("agent", self.agent.clone()),
            ("maze_size", self.maze_size.map(|v| v.to_string())),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("dt_temperature", self.dt_temperature.map(|v| v.to_string())),
            ("decay_steps", self.decay_steps.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("clip", self.clip.map(|v| v.to_string())),
            ("rollout_size", self.rollout_size.map(|v| v.to_string())),
            ("minibatch_size", self.minibatch_size.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run CSV to include; repeatable. `label=path` sets the agent label,
    /// otherwise the file stem is used.
    #[arg(long = "in", required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Report(args) => report(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let file_settings = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::new(),
    };
    let settings = file_settings.merged(&args.settings()?);
    let config = ExperimentConfig::from_settings(&settings)?;
    let records = run_experiment(&config)?;
    eprintln!(
        "wrote {} records ({} runs x {} episodes) to {}",
        records.len(),
        config.runs,
        config.episodes,
        config.output_path.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let mut inputs = Vec::new();
    for spec in &args.inputs {
        let (label, path) = match spec.split_once('=') {
            Some((label, path)) => (label.to_string(), PathBuf::from(path)),
            None => (stem(Path::new(spec)), PathBuf::from(spec)),
        };
        if inputs.iter().any(|(l, _)| *l == label) {
            return Err(Error::InvalidConfig(format!("duplicate input label '{label}'")));
        }
        let records = read_run_records(&path)?;
        inputs.push((label, records));
    }
    let rows = aggregate(&inputs)?;
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_summary(BufWriter::new(file), &rows)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
