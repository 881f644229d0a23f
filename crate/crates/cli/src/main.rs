//! `amerdual`: superhedging prices, dual values, Snell envelopes, dynamic
//! extensions and marginal-constrained variants for American options on
//! finite event-tree markets.
//!
//! Exit codes: 0 success, 1 malformed input, 2 arbitrage or no calibrated
//! measure, 3 stopping-rule enumeration cap exceeded, 4 internal check failed.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use amerdual::market::MarketError;
use amerdual::{Error, DEFAULT_ENUMERATION_CAP};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "amerdual", version, about = "Pricing-hedging duality for American options on finite markets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Model file (JSON, schema amerdual/1).
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Built-in model instead of a file (see `fixtures list`).
    #[arg(long, global = true, value_name = "NAME")]
    pub fixture: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Rational)]
    pub mode: ModeArg,
    /// Maximum number of enumerated stopping rules.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
    /// Machine-readable report.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Strong,
    Weak,
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Markets,
    Peacocks,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Superhedging price of the payoff at one date, as a European claim.
    PriceEu {
        /// Exercise date whose payoff is priced (default: the horizon).
        #[arg(long)]
        date: Option<usize>,
        /// Ignore the static options.
        #[arg(long)]
        no_statics: bool,
    },
    /// American superhedging price.
    PriceAm {
        #[arg(long)]
        no_statics: bool,
    },
    /// Dual values over calibrated martingale measures.
    Dual {
        #[arg(long, value_enum, default_value_t = Formulation::Gap)]
        formulation: Formulation,
    },
    /// Snell envelope on the enlarged space and the optimal exercise rule.
    Dpp,
    /// Builds the dynamic extension from a weak-dual optimizer and checks it.
    Extend {
        /// Alternative optimal measures tried when the first does not realize the price.
        #[arg(long, default_value_t = 8)]
        retries: usize,
    },
    /// Marginal-constrained problems.
    Mot {
        #[command(subcommand)]
        action: MotAction,
        /// Marginals file: {"times":[..],"marginals":[[{"x":..,"p":..}]],"s0":..}.
        #[arg(long, global = true, value_name = "FILE")]
        #[serde(skip)]
        marginals: Option<PathBuf>,
        /// American payoff on the support grid: {"1":{pathId:value},..}.
        #[arg(long, global = true, value_name = "FILE")]
        #[serde(skip)]
        payoff: Option<PathBuf>,
    },
    /// Pathwise no-arbitrage check on Ω and on the enlarged space.
    CheckNa,
    /// Built-in reference models.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
    /// Runs the core identities on seeded random instances.
    Ensemble {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, value_enum, default_value_t = EnsembleKind::Markets)]
        kind: EnsembleKind,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotAction {
    /// Primal, weak and strong values.
    Values,
    /// Weak values with a growing ladder of calibrated options.
    Approx,
    /// Measure-valued martingales of random calibrated measures.
    Mvm {
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureAction {
    List,
    Run { name: String },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Market(_) | Error::DimensionUnsupported(_) | Error::SupportMismatch(_) | Error::Degenerate(_) => 1,
            Error::UnboundedBelow | Error::NoCalibratedMeasure => 2,
            Error::EnumerationCapExceeded { .. } => 3,
            Error::Lp(_) | Error::NotCalibrated(_) | Error::NoStopFound { .. } | Error::Invariant(_) => 4,
        };
        CliError { code, message: e.to_string() }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("AMERDUAL_THREADS") else { return Ok(()) };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("AMERDUAL_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let invocation: Vec<String> = argv.into_iter().skip(1).filter(|a| a != "--json").collect();
    match configure_threads().and_then(|()| commands::run(&cli, invocation.clone())) {
        Ok((report, code)) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            if cli.json {
                let mut report =
                    Report::new(&commands::name(&cli.command), mode_name(cli.mode), invocation, &serde_json::Value::Null);
                report.error = Some(e.message);
                println!("{}", report.to_json());
            }
            ExitCode::from(e.code)
        }
    }
}

pub fn mode_name(m: ModeArg) -> &'static str {
    match m {
        ModeArg::Rational => "rational",
        ModeArg::Float => "float",
    }
}
