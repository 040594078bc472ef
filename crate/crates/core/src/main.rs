use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use distcorr::harness::{
    estimate_with_workers, print_bounds, print_params, sweep_with_workers, write_csv, ExperimentSpec, SweepSpec,
};
use distcorr::params::TestSpec;
use distcorr::Result;

#[derive(Parser)]
#[command(name = "distcorr", version, about = "One-way distributed correlation tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Protocol parameters for a test spec, as JSON.
    Params {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Lower bounds and the implemented upper bound, as JSON.
    Bounds {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        d: usize,
    },
    /// Estimate error rates for an experiment config; prints one JSON report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Include wall time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Error versus budget sweep; prints CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Params { tau, delta, epsilon, d } => {
            let report = print_params(&TestSpec::new(tau, delta, epsilon, d)?)?;
            emit(&serde_json::to_string_pretty(&report)?)
        }
        Command::Bounds { tau, delta, epsilon, d } => {
            let report = print_bounds(&TestSpec::new(tau, delta, epsilon, d)?)?;
            emit(&serde_json::to_string_pretty(&report)?)
        }
        Command::Simulate { config, workers, timing } => {
            let spec = ExperimentSpec::from_json(&fs::read_to_string(config)?)?;
            let report = estimate_with_workers(&spec, workers.or(spec.overrides.workers))?;
            if timing {
                eprintln!("wall time: {:.3} s", report.wall_time);
            }
            emit(&report.to_json(timing)?)
        }
        Command::Sweep { config, workers, out } => {
            let spec = SweepSpec::from_json(&fs::read_to_string(config)?)?;
            let rows = sweep_with_workers(&spec, workers.or(spec.workers))?;
            match out {
                Some(path) => write_csv(&rows, fs::File::create(path)?),
                None => write_csv(&rows, io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
