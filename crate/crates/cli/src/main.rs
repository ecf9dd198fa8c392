//! `kms`: generate thermal models, reduce them with a KMS basis and verify the result.

mod commands;
mod config;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kms_core::KmsError;

use crate::commands::{Outcome, VerifyArgs};
use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "kms",
    version,
    about = "Parametric model order reduction for thermal and thermo-mechanical FE models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a rod, plate or box model from a TOML description.
    Generate {
        config: PathBuf,
        #[arg(long, default_value = "model")]
        out: PathBuf,
    },
    /// Build the parametric reduced model of a saved system.
    Reduce {
        manifest: PathBuf,
        #[command(flatten)]
        opts: ReduceOpts,
        #[arg(long, default_value = "reduced")]
        out: PathBuf,
    },
    /// Compare a reduced bundle with its full model over frequency and HTC samples.
    Verify {
        manifest: PathBuf,
        bundle: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `patch=value` assignments; assigning a patch again starts the next sample.
        #[arg(long)]
        htc: Vec<String>,
        /// `lo:hi:points`, rad/s, logarithmic.
        #[arg(long)]
        grid: Option<String>,
        /// `output:input`, 1-based; default all collocated pairs.
        #[arg(long)]
        pairs: Vec<String>,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long, default_value = "verify")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReduceOpts {
    /// Run config with `[reduction]` and `[verify]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    expansion_point: Option<f64>,
    /// Bilinear stages per convective patch.
    #[arg(long)]
    bilinear_iters: Option<usize>,
    #[arg(long)]
    moments: Option<usize>,
    /// Drops this fraction of the modal columns (for negative controls).
    #[arg(long)]
    drop_modal_fraction: Option<f64>,
}

fn exit_code(e: &KmsError) -> u8 {
    match e {
        KmsError::Singular { .. } | KmsError::NoConvergence(_) | KmsError::TooManyModes { .. } => 3,
        _ => 2,
    }
}

fn init_threads() -> Result<(), KmsError> {
    let Ok(v) = std::env::var("KMS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| KmsError::Config(format!("KMS_THREADS='{v}' is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| KmsError::Config(format!("KMS_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<Outcome, KmsError> {
    init_threads()?;
    match cli.command {
        Command::Generate { config, out } => commands::generate(&config, &out),
        Command::Reduce { manifest, opts, out } => {
            let mut cfg = RunConfig::load(opts.config.as_deref())?.reduction;
            if let Some(v) = opts.epsilon {
                cfg.epsilon = v;
            }
            if let Some(v) = opts.omega_max {
                cfg.omega_max = v;
            }
            if let Some(v) = opts.expansion_point {
                cfg.s_e = v;
            }
            if let Some(v) = opts.bilinear_iters {
                cfg.n_me = v;
            }
            if let Some(v) = opts.moments {
                cfg.moments = v;
            }
            if let Some(v) = opts.drop_modal_fraction {
                cfg.drop_modal_fraction = v;
            }
            commands::reduce_cmd(&manifest, &cfg, &out)
        }
        Command::Verify {
            manifest,
            bundle,
            config,
            htc,
            grid,
            pairs,
            omega_max,
            out,
        } => {
            let mut run = RunConfig::load(config.as_deref())?;
            if !htc.is_empty() {
                run.verify.htc = htc;
            }
            if let Some(g) = grid {
                run.verify.grid = g;
            }
            if !pairs.is_empty() {
                run.verify.pairs = pairs;
            }
            if let Some(w) = omega_max {
                run.verify.omega_max = w;
            }
            let args = VerifyArgs {
                manifest: &manifest,
                bundle: &bundle,
                out: &out,
            };
            commands::verify(&args, &run)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
