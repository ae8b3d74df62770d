use clap::{Args, Parser, Subcommand};
use irsbf_harness::config::ExperimentConfig;
use irsbf_harness::{benchmark, sweep, train, verify};
use std::path::PathBuf;
use std::process::ExitCode;

/// Robust IRS beamforming experiment harness.
#[derive(Parser)]
#[command(name = "irsbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Offset added to every seed in the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Train both agent modes and emit run + aggregate CSVs.
    Train(Common),
    /// Run the configured parameter sweep of the model-based optimizer.
    Sweep(Common),
    /// Time the SDR pipeline vs actor inference across problem sizes.
    Benchmark(Common),
    /// Run the verification suite and write a pass/fail report.
    Verify(Common),
}

fn out_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output_dir))
}

fn run() -> Result<bool, irsbf_core::Error> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Train(c) | Command::Sweep(c) | Command::Benchmark(c) | Command::Verify(c) => c,
    };
    let config = ExperimentConfig::from_path(&common.config)?;
    let out = out_dir(common, &config);
    match &cli.command {
        Command::Train(_) => {
            let paths = train::run_training(&config, &out, common.seed_offset)?;
            for path in paths {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Sweep(_) => {
            let path = sweep::run_sweep(&config, &out, common.seed_offset)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Benchmark(_) => {
            let path = benchmark::run_benchmark(&config, &out, common.seed_offset)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Verify(_) => {
            let (path, report) = verify::run_verification(&config, &out)?;
            for line in verify::report_lines(&report) {
                println!("{line}");
            }
            println!("{}", path.display());
            Ok(report.all_passed)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
