mod commands;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "admg", version, about = "Projections, dense connectivity and exact couplings for mixed graphs")]
pub struct Cli {
    /// Emit a JSON object instead of plain text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project out the vertices listed as latent.
    Project { file: PathBuf },
    /// Canonical DAG with one hidden parent per bidirected edge.
    Canonical { file: PathBuf },
    /// Maximal arid projection.
    Marg { file: PathBuf },
    /// Closure of a vertex set and whether it is intrinsic.
    Closure {
        file: PathBuf,
        /// Comma-separated vertex labels.
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<String>,
    },
    /// Dense-connectivity verdict; exits 1 when not dense.
    Dense { file: PathBuf, v: String, w: String },
    /// Minimal reduced graph for a dense pair.
    Minimal { file: PathBuf, v: String, w: String },
    /// Sample the coupling that makes the pair equal.
    Couple {
        file: PathBuf,
        v: String,
        w: String,
        /// Modulus of the discrete coupling.
        #[arg(short, default_value_t = 2, conflicts_with = "continuous")]
        k: usize,
        /// Continuous coupling with Gaussian-copula correlation, as `rho=R`.
        #[arg(long, value_parser = parse_rho)]
        continuous: Option<f64>,
        #[arg(short, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Hold the input value fixed (discrete couplings only).
        #[arg(long, conflicts_with = "continuous")]
        set_w: Option<usize>,
        /// Write the CSV here instead of stdout; requires `--seed`.
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Enumerate the coupling exactly and check equality and independence.
    Verify {
        file: PathBuf,
        v: String,
        w: String,
        #[arg(short, default_value_t = 2)]
        k: usize,
    },
    /// Check a distribution table against the nested Markov property.
    NestedCheck {
        file: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        /// Demand exact agreement (the default).
        #[arg(long, conflicts_with = "tol")]
        exact: bool,
        /// Largest allowed deviation, as a decimal or `num/den`.
        #[arg(long)]
        tol: Option<String>,
    },
    /// Generate benchmark graphs.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// Hard instance for naive pruning, with k blocks.
    CompGraph { k: usize },
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let value = s.strip_prefix("rho=").ok_or("expected rho=R")?;
    value.parse().map_err(|_| format!("invalid correlation `{value}`"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let outcome = commands::run(&cli);
    let mut stdout = io::stdout().lock();
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stdout.flush();
    if let Some(reason) = &outcome.reason {
        eprintln!("admg: {reason}");
    }
    ExitCode::from(outcome.code)
}
