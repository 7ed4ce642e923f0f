use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod commands;
mod output;

use output::Format;

#[derive(Parser, Debug, Serialize)]
#[command(name = "lgpolymer", version, about = "Log-gamma polymer simulations and acceptance checks")]
struct Cli {
    /// Master seed; every replica stream is derived from it.
    #[arg(long, global = true, env = "LGPOLYMER_SEED", default_value_t = lgpolymer::acceptance::DEFAULT_SEED)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,

    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    #[serde(skip)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Model {
    #[arg(long, default_value_t = 2.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Centered endpoint windows, I_n, l_n and tail masses per replica.
    Endpoint {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        /// Window half-width.
        #[arg(long, default_value_t = 15)]
        k: usize,
        /// Endpoint-law pipeline: dp or walk.
        #[arg(long, default_value = "dp")]
        pipeline: String,
    },
    /// Favourite endpoint l_n / n against the arcsine law.
    Arcsine {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value = "walk")]
        pipeline: String,
    },
    /// Deviation profile -(1/n) log Q_n(floor(ns)) or its sqrt(n) version.
    Ldp {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 8192)]
        n: usize,
        /// Grid points in [0, 1]; defaults to 0, 0.05, ..., 1.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
        #[arg(long, value_enum, default_value_t = ScaleArg::Linear)]
        scale: ScaleArg,
        #[arg(long, default_value = "walk")]
        pipeline: String,
    },
    /// Samples of the limiting endpoint law around its mode.
    Limit {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 15)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Point-to-point crossing statistics.
    P2p {
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Scale N of the rectangle [0, pN] x [0, qN].
        #[arg(long = "big-n", default_value_t = 128)]
        big_n: usize,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long = "theta-n", default_value_t = 1.0)]
        theta_n: f64,
        #[arg(long = "theta-s", default_value_t = 1.0)]
        theta_s: f64,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
        /// Window half-width in blocks.
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Law of the ratio variables along an antidiagonal.
    Stationarity {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
    },
    /// Run the acceptance suite; exit 0 iff every selected criterion passes.
    VerifyAll {
        /// Criterion ids to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScaleArg {
    Sqrt,
    Linear,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<lgpolymer::Error>().is_some_and(|e| {
                matches!(e, lgpolymer::Error::Domain(_) | lgpolymer::Error::Usage(_))
            });
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
