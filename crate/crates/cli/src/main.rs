mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use crate::format::{parse_count, parse_real};

/// q-numbers, q-primes and q-generalized zeta functions.
#[derive(Debug, Parser)]
#[command(name = "qzeta", version, args_override_self = true)]
pub struct Cli {
    /// `key=value` file of flag defaults; `#` starts a comment.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: QZETA_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = qzeta::acceptance::DEFAULT_SEED)]
    seed: u64,

    /// Write outputs into this directory instead of standard output.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The first N primes, one per line.
    Primes {
        #[arg(long, value_parser = parse_count)]
        count: usize,
    },
    /// Table of <n>_q for n = 1..n_max.
    Qnum {
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        q: f64,
        #[arg(long, value_parser = parse_count)]
        n_max: usize,
        /// Keep only rows with prime n.
        #[arg(long)]
        primes_only: bool,
    },
    /// A zeta variant swept over s.
    Zeta(ZetaArgs),
    /// Extrapolate the divergence point s_div(q).
    Extrapolate(ExtrapolateArgs),
    /// <18> and <5> through both algebras over a q range, with crossing points.
    Demo {
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true, default_value_t = -3.0)]
        q_min: f64,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true, default_value_t = 3.0)]
        q_max: f64,
        #[arg(long, value_parser = parse_real, default_value_t = 0.01)]
        q_step: f64,
    },
    /// Run the acceptance suite; exit status 4 on any failure.
    Acceptance {
        /// Run only these criteria (1-10).
        #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
        criterion: Vec<u8>,
    },
}

#[derive(Debug, Args)]
pub struct ZetaArgs {
    /// classical-sum, classical-product, qz, sum-iel, prod-iel, sum-oel, prod-oel, sum-iel-term, prod-iel-term.
    #[arg(long)]
    pub variant: qzeta::ZetaVariant,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub s_min: f64,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub s_max: f64,
    #[arg(long, value_parser = parse_real, default_value_t = 0.1)]
    pub s_step: f64,
    /// Terms of the sum variants.
    #[arg(long, value_parser = parse_count, default_value = "1e5")]
    pub n_terms: usize,
    /// Primes of the product variants.
    #[arg(long, value_parser = parse_count, default_value = "1e5")]
    pub n_primes: usize,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub q: f64,
    /// primes-first or zdiv-first.
    #[arg(long, default_value = "primes-first")]
    pub order: qzeta::PipelineOrder,
    /// Comma-separated divergence proxies.
    #[arg(long, value_parser = parse_real, value_delimiter = ',', action = ArgAction::Set,
          default_value = "1e3,1e4,1e5,1e6,1e7,1e8")]
    pub zdiv: Vec<f64>,
    /// Comma-separated prime counts.
    #[arg(long, value_parser = parse_count, value_delimiter = ',', action = ArgAction::Set,
          default_value = "1e3,1e4,1e5,1e6")]
    pub primes: Vec<usize>,
}

/// Invalid flag combination or value detected before any work starts.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct FlagError(pub String);

/// At least one acceptance criterion failed.
#[derive(Debug, thiserror::Error)]
#[error("{0} acceptance criteria failed")]
pub struct AcceptanceFailed(pub usize);

fn threads(cli: &Cli) -> Result<Option<usize>, FlagError> {
    let n = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("QZETA_THREADS") {
            Ok(v) => Some(parse_count(&v).map_err(|e| FlagError(format!("QZETA_THREADS: {e}")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(FlagError("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<FlagError>() || err.is::<config::ConfigError>() {
        2
    } else if err.is::<qzeta::QError>() {
        3
    } else if err.is::<AcceptanceFailed>() {
        4
    } else {
        1
    }
}

fn run() -> anyhow::Result<()> {
    let args = config::merge(&Cli::command(), std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(n) = threads(&cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    commands::dispatch(&cli)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
