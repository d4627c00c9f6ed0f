//! `divbound`: divergence lower bounds from the command line.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a check fails.

mod commands;
mod parse;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "divbound",
    version,
    about = "Optimal lower bounds on φ-divergences via convex duality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the cumulant generating function K(t).
    Cgf(CgfArgs),
    /// Lower bound L(ε) = K*(ε) on the divergence given the mean deviation ε.
    Bound(BoundArgs),
    /// Tight lower bound in terms of total variation, or the height curve.
    Vajda(VajdaArgs),
    /// Check a Pinsker-type sufficient condition.
    Pinsker(PinskerArgs),
    /// Compare the conjugate bound with a brute-force oracle on random instances.
    OracleCheck(CheckArgs),
    /// Check the variational representation with its optimal witness.
    VarrepCheck(CheckArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Catalog name, inline JSON descriptor, or path to a .json descriptor.
    #[arg(long)]
    pub spec: String,
    /// Parameter for `alpha` and `chi_alpha`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct DistArgs {
    /// `uniform:x1,x2,..`, `weighted:x@w,..`, `point:x`, `gaussian:mu,sigma`,
    /// `gamma:shape,scale`, `uniform-interval:a,b`, or a CSV path
    /// (point_id,weight).
    #[arg(long, allow_hyphen_values = true)]
    pub dist: String,
    /// CSV (point_id,value) with the function g; repeat for a class. Without
    /// it, numeric point ids of --dist are the values of g.
    #[arg(long)]
    pub g: Vec<String>,
    /// Quadrature order for continuous families.
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    /// Essential range of g as lo,hi (may be wider than the support).
    #[arg(long, allow_hyphen_values = true)]
    pub range_override: Option<String>,
    /// Write the distribution of g as point_id,weight CSV.
    #[arg(long)]
    pub dump_dist: Option<String>,
}

#[derive(Args, Debug)]
pub struct CgfArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub dist: DistArgs,
    /// Grid lo:hi:step or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
    /// Skip closed-form shortcuts.
    #[arg(long)]
    pub generic: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: String,
    /// Grid for K; by default 161 points on ±40/width of the range of g.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Bound in terms of |μ(g) − ν(g)| (also for each member's negation
    /// when several --g are given).
    #[arg(long)]
    pub abs: bool,
    /// Write {spec, dist_digest, subgaussian_sigma2_min} to this file.
    #[arg(long)]
    pub summary: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct VajdaArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Total variation values (in [0, 2]).
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "w",
        required_unless_present = "w"
    )]
    pub eps: Option<String>,
    /// Widths for the height-for-width curve.
    #[arg(long)]
    pub w: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Crude,
    Optimal,
    Concave,
}

#[derive(Args, Debug)]
pub struct PinskerArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Grid of z (x = 1 + z); z ≤ −1 is skipped.
    #[arg(long, allow_hyphen_values = true, default_value = "-0.99:20:0.01")]
    pub z: String,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, default_value = "kl")]
    pub spec: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Write the report as JSON to this file.
    #[arg(long)]
    pub out: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Ok(v) = std::env::var("DIVBOUND_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                divbound::par::configure_threads(n);
            }
            _ => {
                eprintln!("error: DIVBOUND_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    let result = match cli.command {
        Command::Cgf(a) => commands::cgf(a),
        Command::Bound(a) => commands::bound(a),
        Command::Vajda(a) => commands::vajda(a),
        Command::Pinsker(a) => commands::pinsker(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
        Command::VarrepCheck(a) => commands::varrep_check(a),
    };
    match result {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
