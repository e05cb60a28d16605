use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use clap::{Parser, Subcommand};
use station::{
    cmd_batch, cmd_process, cmd_simulate, cmd_watch, exit_code, load_config, BatchOptions, ProcessOptions,
    SimulateOptions, WatchOptions, EXIT_PARTIAL,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  input error (missing or unreadable frames, bad manifest)
  3  validation error (inconsistent frames, out-of-range values)
  4  config error (unparsable or invalid configuration)
  5  batch finished with per-series failures";

#[derive(Parser)]
#[command(name = "thermoscan", version, about = "Buried landmine detection from thermal image series", after_help = EXIT_CODES)]
struct Cli {
    /// TOML pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process one directory of frames into report.json.
    #[command(after_help = EXIT_CODES)]
    Process {
        series_dir: PathBuf,
        /// Write PNG dumps of every stage.
        #[arg(long)]
        debug_images: bool,
        /// Seed recorded in the report.
        #[arg(long)]
        seed: Option<u64>,
        /// Capture altitude in metres; defaults to the schedule altitude.
        #[arg(long)]
        altitude: Option<f64>,
    },
    /// Process every series of a manifest and score it against ground truth.
    #[command(after_help = EXIT_CODES)]
    Batch {
        manifest: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        debug_images: bool,
    },
    /// Watch a directory and process each location once its frames arrive.
    #[command(after_help = EXIT_CODES)]
    Watch {
        in_dir: PathBuf,
        /// Seconds of quiescence after which a partial series is processed.
        #[arg(long)]
        flush_after: Option<f64>,
        #[arg(long)]
        debug_images: bool,
    },
    /// Render a synthetic benchmark dataset with manifest.json.
    #[command(after_help = EXIT_CODES)]
    Simulate {
        /// Comma-separated capture altitudes in metres.
        #[arg(long, value_delimiter = ',')]
        altitudes: Option<Vec<f64>>,
        /// Mine-present series per altitude (negatives default to 0 when set).
        #[arg(long)]
        trials: Option<usize>,
        /// Mine-free series per altitude.
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> thermoscan::Result<i32> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Process {
            series_dir,
            debug_images,
            seed,
            altitude,
        } => {
            let opts = ProcessOptions {
                debug_images,
                seed,
                altitude_m: altitude,
            };
            let report = cmd_process(&series_dir, &config, &cli.out, &opts)?;
            println!("{}: {:?} (score {:.3})", report.location_id, report.verdict, report.score);
        }
        Command::Batch {
            manifest,
            workers,
            debug_images,
        } => {
            let outcome = cmd_batch(&manifest, &config, &cli.out, &BatchOptions { workers, debug_images })?;
            let cm = outcome.overall;
            println!(
                "run {}: tp {} fp {} tn {} fn {} (tp rate {:.3}, fp rate {:.3})",
                outcome.run_id,
                cm.tp,
                cm.fp,
                cm.tn,
                cm.fn_,
                cm.tp_rate(),
                cm.fp_rate()
            );
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("failed {}: {}", f.series_id, f.error);
                }
                eprintln!("{} series failed", outcome.failures.len());
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Watch {
            in_dir,
            flush_after,
            debug_images,
        } => {
            let mut opts = WatchOptions::from_config(&config);
            opts.debug_images = debug_images;
            if let Some(s) = flush_after {
                opts.flush_after = Duration::try_from_secs_f64(s)
                    .map_err(|e| thermoscan::Error::Config(format!("--flush-after: {e}")))?;
            }
            let stop = AtomicBool::new(false);
            let n = cmd_watch(&in_dir, &config, &cli.out, opts, &stop)?;
            println!("{n} series processed");
        }
        Command::Simulate {
            altitudes,
            trials,
            negatives,
            seed,
        } => {
            let opts = SimulateOptions {
                altitudes,
                trials,
                negatives,
                seed,
            };
            let manifest = cmd_simulate(&config, &cli.out, &opts)?;
            println!("{} series written to {}", manifest.series.len(), cli.out.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
