mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quenchspec::{Error, Result};

use commands::Global;

/// Quench phase shift and dephasing spectroscopy toolkit.
#[derive(Parser)]
#[command(name = "quenchspec", version)]
struct Cli {
    /// Scenario config, reconstruction manifest or sequence source (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Evaluate the scenario with the exact finite-bath oracle.
    #[arg(long, global = true)]
    oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence trace CSV (+ asymptotic overlay JSON next to --out).
    Trace,
    /// kT, T2 and Φ∞ from a Hahn trace (JSON).
    Thermometry {
        /// Existing trace CSV instead of computing one from --config.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Comb-filter reconstruction of 𝒥 from a manifest (CSV).
    Reconstruct,
    /// Exact vs second-order cumulant comparison (CSV).
    Oracle,
    /// Asymptotic coefficients C_ζ(p) and C_Φ(s) (CSV).
    Coeffs {
        #[arg(long = "p", value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<f64>,
        #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        /// Sequence preset (`ramsey`, `hahn`, `cpmg:<n>`) when no --config is given.
        #[arg(long, default_value = "hahn")]
        sequence: String,
    },
    /// Measurements needed per unit phase resolution along a trace (CSV).
    Nmeas,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("--tol must lie in (0,1), got {t}")));
        }
    }
    let g = Global {
        config: cli.config,
        out: cli.out,
        tol: cli.tol,
        oracle: cli.oracle,
    };
    match cli.command {
        Command::Trace => commands::trace(&g),
        Command::Thermometry { trace } => commands::thermometry(&g, trace.as_deref()),
        Command::Reconstruct => commands::reconstruct(&g),
        Command::Oracle => commands::oracle(&g),
        Command::Coeffs { p, s, sequence } => commands::coeffs(&g, &p, &s, &sequence),
        Command::Nmeas => commands::nmeas(&g),
    }
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
