//! `raodp`: calibrate mechanisms, release sanitized query answers against a
//! budget ledger, measure distances, and audit mechanisms from the shell.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid arguments,
//! 3 input data breaking its declared contract, 4 ledger persistence failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::OutputFormat;

#[derive(Parser, Debug)]
#[command(
    name = "raodp",
    version,
    about = "Rao-distance differential privacy toolkit"
)]
struct Cli {
    /// Output rendering.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table, global = true)]
    output_format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Laplace,
    Gaussian,
    Gengauss,
    /// Gaussian with free location and scale (distance only).
    GaussianFull,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum QueryArg {
    Count,
    Sum,
    Mean,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct FamilyOpts {
    /// Noise family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Shape N >= 1 of the generalized Gaussian.
    #[arg(long)]
    shape: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimal noise scale for a Rao budget.
    Calibrate {
        #[command(flatten)]
        family: FamilyOpts,
        /// Query sensitivity.
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Rao budget.
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        /// Use the uncorrected linear-scale generalized Gaussian formula.
        #[arg(long)]
        literal_formula: bool,
    },
    /// Release one noisy query answer from a CSV column and charge the ledger.
    Sanitize {
        /// CSV file with a header row.
        #[arg(long)]
        csv: PathBuf,
        /// Column holding the records.
        #[arg(long)]
        column: String,
        #[arg(long, value_enum)]
        query: QueryArg,
        /// Declared lower bound of every record.
        #[arg(long, allow_negative_numbers = true)]
        lower: f64,
        /// Declared upper bound of every record.
        #[arg(long, allow_negative_numbers = true)]
        upper: f64,
        /// Rao budget charged by this release.
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[command(flatten)]
        family: FamilyOpts,
        /// Ledger file (Rao budgets).
        #[arg(long)]
        ledger: PathBuf,
        /// Creates the ledger with this total Rao allowance if it does not exist.
        #[arg(long)]
        allowance: Option<f64>,
        #[arg(long)]
        seed: u64,
        /// Defaults to `release-<n>` for the n-th entry.
        #[arg(long)]
        release_id: Option<String>,
        /// RFC 3339 timestamp for the entry; defaults to SOURCE_DATE_EPOCH, then to the Unix epoch.
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Rao distance between two members of a family.
    Distance {
        #[command(flatten)]
        family: FamilyOpts,
        /// Fixed scale of a location family.
        #[arg(long)]
        sigma: Option<f64>,
        /// First point: `mu` for location families, `mu,sigma` for gaussian-full.
        #[arg(long, allow_negative_numbers = true)]
        p1: String,
        #[arg(long, allow_negative_numbers = true)]
        p2: String,
        /// Also solve for the geodesic numerically.
        #[arg(long)]
        with_oracle: bool,
        #[arg(long)]
        literal_formula: bool,
    },
    /// Sequential composition of budgets of one kind.
    Compose {
        /// Budget kind: pure, approx, kl, mcdp, zcdp, renyi, gdp, rao.
        #[arg(long = "def")]
        definition: String,
        /// One budget per argument, components separated by commas.
        #[arg(required = true, allow_negative_numbers = true)]
        budgets: Vec<String>,
    },
    /// Convert a budget where a specific mechanism licenses it.
    Convert {
        /// Source budget kind.
        #[arg(long)]
        from: String,
        /// Source budget components, comma separated.
        #[arg(allow_negative_numbers = true)]
        params: String,
        /// Target budget kind.
        #[arg(long)]
        to: String,
        /// Mechanism the budgets describe.
        #[arg(long, value_enum)]
        context: FamilyArg,
        #[arg(long)]
        shape: Option<f64>,
        /// δ of the target when converting to approx.
        #[arg(long)]
        target_delta: Option<f64>,
    },
    /// Empirical privacy report for a mechanism at worst-case adjacency.
    Audit {
        #[command(flatten)]
        family: FamilyOpts,
        /// Noise scale.
        #[arg(long)]
        scale: f64,
        /// Sensitivity (distance between adjacent outputs).
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        /// Monte Carlo sample size.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Points of the privacy-loss grid.
        #[arg(long, default_value_t = 4001)]
        grid_points: usize,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Ledger maintenance.
    #[command(subcommand)]
    Ledger(LedgerCommand),
}

#[derive(Subcommand, Debug)]
enum LedgerCommand {
    /// Create an empty ledger.
    Init {
        #[arg(long)]
        ledger: PathBuf,
        /// Budget kind of the ledger.
        #[arg(long = "def")]
        definition: String,
        /// Total allowance components, comma separated.
        #[arg(allow_negative_numbers = true)]
        allowance: String,
    },
    /// Summarize a ledger. With JSON output, prints the ledger document.
    Show {
        #[arg(long)]
        ledger: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.output_format;
    let result = match cli.command {
        Command::Calibrate {
            family,
            delta,
            theta,
            literal_formula,
        } => commands::calibrate(family, delta, theta, literal_formula),
        Command::Sanitize {
            csv,
            column,
            query,
            lower,
            upper,
            theta,
            family,
            ledger,
            allowance,
            seed,
            release_id,
            timestamp,
        } => commands::sanitize(commands::SanitizeArgs {
            csv,
            column,
            query,
            lower,
            upper,
            theta,
            family,
            ledger,
            allowance,
            seed,
            release_id,
            timestamp,
        }),
        Command::Distance {
            family,
            sigma,
            p1,
            p2,
            with_oracle,
            literal_formula,
        } => commands::distance(family, sigma, &p1, &p2, with_oracle, literal_formula),
        Command::Compose {
            definition,
            budgets,
        } => commands::compose(&definition, &budgets),
        Command::Convert {
            from,
            params,
            to,
            context,
            shape,
            target_delta,
        } => commands::convert(
            &from,
            &params,
            &to,
            FamilyOpts {
                family: context,
                shape,
            },
            target_delta,
        ),
        Command::Audit {
            family,
            scale,
            delta,
            seed,
            samples,
            grid_points,
            report,
        } => commands::audit(
            family,
            scale,
            delta,
            seed,
            samples,
            grid_points,
            report.as_deref(),
        ),
        Command::Ledger(LedgerCommand::Init {
            ledger,
            definition,
            allowance,
        }) => commands::ledger_init(&ledger, &definition, &allowance),
        Command::Ledger(LedgerCommand::Show { ledger }) => commands::ledger_show(&ledger, format),
    };
    match result.and_then(|out| out.print(format)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
