mod commands;
mod config;
mod emit;
mod expr;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::Overrides;
use crate::expr::ParseError;

/// Affine quantization of the half-plane: representation matrices, quantized
/// observables and phase-space portraits.
#[derive(Debug, Parser)]
#[command(name = "affquant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
    /// Report errors as JSON on stderr
    #[arg(long = "json-errors", global = true)]
    json_errors: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Matrix of U(q,p) in the Laguerre basis
    Repr,
    /// Summed trace of U(q,p) next to its closed forms
    TraceU,
    /// Weight constants and the trace condition
    Constants,
    /// Quantize an observable (--f)
    Quantize,
    /// Affine Wigner function of a state on a grid
    Wigner,
    /// ACS density of a state on a grid
    AcsDensity,
    /// Lower symbol of an observable on a grid
    LowerSymbol,
    /// Half-oscillator datasets
    Halfosc,
    /// Run the invariant suite and print a pass/fail table
    Verify {
        /// Run only these checks (1-based, repeatable)
        #[arg(long = "check")]
        only: Vec<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Repr => "repr",
            Command::TraceU => "trace-u",
            Command::Constants => "constants",
            Command::Quantize => "quantize",
            Command::Wigner => "wigner",
            Command::AcsDensity => "acs-density",
            Command::LowerSymbol => "lower-symbol",
            Command::Halfosc => "halfosc",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Parse(ParseError),
    Compute(affquant::Error),
    Io(String),
    /// Some verification checks failed.
    Checks(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Parse(_) => 2,
            Failure::Compute(_) | Failure::Io(_) | Failure::Checks(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Parse(_) => "parse",
            Failure::Compute(_) => "computation",
            Failure::Io(_) => "io",
            Failure::Checks(_) => "verification",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Checks(m) => f.write_str(m),
            Failure::Parse(e) => write!(f, "observable: {e}"),
            Failure::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<affquant::Error> for Failure {
    fn from(e: affquant::Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e)
    }
}

fn report(f: &Failure, json_errors: bool) {
    if json_errors {
        let mut v = json!({ "error": { "kind": f.kind(), "message": f.to_string() }, "exit_code": f.exit_code() });
        if let Failure::Parse(e) = f {
            v["error"]["column"] = json!(e.column);
        }
        eprintln!("{v}");
    } else {
        eprintln!("affquant: {f}");
    }
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json_errors {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                report(&Failure::Usage(first.to_string()), true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command, &cli.opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f, cli.json_errors);
            ExitCode::from(f.exit_code())
        }
    }
}
