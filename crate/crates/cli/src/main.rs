//! `lqg`: sample, compare and self-test the quantum sphere constructions.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use lqg_core::Error;

#[derive(Parser, Debug)]
#[command(name = "lqg", version, about = "Unit-volume quantum sphere samplers and equivalence tests")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides LQG_OUT and the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides LQG_THREADS and the config file).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Covariance, circle-average and chaos-expectation calibration against closed forms.
    Calibrate {
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Weighted unit-volume ensemble with insertions.
    SampleDkrv {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// spherical or unit_circle
        #[arg(long)]
        background: Option<String>,
        /// Also write this many measure snapshots.
        #[arg(long, default_value_t = 0)]
        snapshots: usize,
    },
    /// Three-point limiting-procedure ensembles over the C ladder.
    SampleDms {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Single C instead of the configured ladder.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Also write this many sphere snapshots (field, measure, marked points).
        #[arg(long, default_value_t = 0)]
        snapshots: usize,
    },
    /// Approximation-scheme ensemble on the large disk.
    SampleScheme {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Drop the circle-average event.
        #[arg(long)]
        no_h: bool,
    },
    /// Weighted two-sample comparison of two ensemble CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Compare ensembles sampled on different lattices.
        #[arg(long)]
        allow_grid_mismatch: bool,
    },
    /// Fubini, hitting-time, bound-checker and null-calibration checks.
    Selftest {
        #[arg(long)]
        skip_null: bool,
    },
    /// Plot-ready CSV from an ensemble CSV or a sphere snapshot sidecar.
    Plot {
        /// mass-histogram, radial-profile or probe-scatter
        #[arg(long)]
        kind: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Usage(_) | Error::Format(_) | Error::Geometry(_) => 2,
        Error::Budget(_) => 3,
        Error::InsufficientEss { .. } => 4,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Parameter(_) => "parameter",
        Error::Usage(_) => "usage",
        Error::Format(_) => "format",
        Error::Geometry(_) => "geometry",
        Error::Budget(_) => "budget",
        Error::InsufficientEss { .. } => "insufficient-ess",
        Error::Io(_) => "io",
        _ => "numeric",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = commands::Overrides { config: cli.config, seed: cli.seed, out: cli.out, threads: cli.threads };
    match commands::run(&overrides, &cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            let mut body = serde_json::json!({ "error": error_kind(&e), "message": e.to_string() });
            if let Error::Budget(report) = &e {
                body["budget"] = serde_json::to_value(report).unwrap_or_default();
            }
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
