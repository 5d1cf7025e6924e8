use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wce_bridge::experiment::{self, ExperimentConfig, Overrides};
use wce_bridge::Error;

#[derive(Parser)]
#[command(name = "wce-bridge", version, about = "Diffusion bridges by truncated Wiener chaos expansion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample bridge paths and write paths.csv and summary.json.
    Simulate(Flags),
    /// KS and QQ comparison against the configured baselines.
    Validate(Flags),
    /// Smallest truncation level on the ladder that passes validation.
    MinL(Flags),
    /// Solve and per-bridge timing for each benchmark level.
    Benchmark(Flags),
    /// Write the reference multi-index table.
    TableA(Flags),
    /// Write every propagator coefficient on the grid.
    DumpPropagator(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    eval_time: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            model: self.model.clone(),
            eta: self.eta,
            theta: self.theta,
            horizon: self.horizon,
            p: self.p,
            l: self.l,
            grid: self.grid,
            n_paths: self.paths,
            seed: self.seed,
            baseline: self.baseline.clone(),
            eval_time: self.eval_time,
            out: self.out.clone(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), Error> {
    let flags = match &cli.command {
        Command::Simulate(f)
        | Command::Validate(f)
        | Command::MinL(f)
        | Command::Benchmark(f)
        | Command::TableA(f)
        | Command::DumpPropagator(f) => f,
    };
    let cfg = flags.config()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    experiment::with_threads(flags.threads, || -> Result<(), Error> {
        match &cli.command {
            Command::Simulate(_) => print_json(&experiment::cmd_simulate(&cfg, &out)?),
            Command::Validate(_) => print_json(&experiment::cmd_validate(&cfg, &out)?),
            Command::MinL(_) => {
                for r in experiment::cmd_min_l(&cfg, &out)? {
                    println!("{} {}: {}", r.baseline, r.endpoint_pair, r.status);
                }
            }
            Command::Benchmark(_) => print_json(&experiment::cmd_benchmark(&cfg, &out)?),
            Command::TableA(_) => println!("{} rows", experiment::cmd_table_a(&cfg, &out)?),
            Command::DumpPropagator(_) => {
                let sol = experiment::cmd_dump_propagator(&cfg, &out)?;
                println!("{} coefficients on {} nodes", sol.rows(), sol.grid.nodes());
            }
        }
        Ok(())
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
