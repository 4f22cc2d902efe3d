//! The `lcstrs` command line: `check`, `run` and `prove`.
//!
//! Exit codes: 0 success (valid file, normal form reached, termination proved), 1 for any
//! user error, 2 for an inconclusive result (fuel exhausted, no witness found).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::prover::{check_witness, find_witness, ProverConfig};
use crate::rewrite::{ListInputs, RewriteError, Rewriter, Strategy, TraceDocument, DEFAULT_FUEL};
use crate::rule::System;
use crate::solver::{Solver, SolverConfig};
use crate::syntax::{parse_system, parse_term, ParseError};
use crate::theory::SemValue;
use crate::typing::VarContext;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lcstrs",
    version,
    about = "Run and prove termination of logically constrained rewrite systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, typecheck and validate a system; print its signature and rules.
    Check(CheckArgs),
    /// Normalize a term and print the reduction trace.
    Run(RunArgs),
    /// Search for a HORPO termination witness.
    Prove(ProveArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    /// The start term.
    #[arg(long)]
    pub term: String,
    #[arg(long, default_value_t = Strategy::Innermost)]
    pub strategy: Strategy,
    /// Maximum number of steps.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    pub fuel: usize,
    /// Values for variables that only occur in constraints or right-hand sides, used in order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub input: Vec<String>,
    /// Print at most this many steps of the trace.
    #[arg(long)]
    pub trace_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    pub file: PathBuf,
    /// External SMT-LIB solver command, e.g. `z3 -in`. Defaults to $LCSTRS_SMT.
    #[arg(long)]
    pub smt_cmd: Option<String>,
    /// Per-query solver timeout in milliseconds.
    #[arg(long, default_value_t = 2000)]
    pub smt_timeout: u64,
    /// Overall proof timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Candidate bounds for the integer ordering (repeatable); overrides `option bound`.
    #[arg(long = "bound", allow_negative_numbers = true)]
    pub bounds: Vec<BigInt>,
    /// Threads used to check rules.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_queries: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

/// JSON output of `check`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDocument {
    pub signature: Vec<SymbolEntry>,
    pub rules: Vec<String>,
    pub bounds: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolEntry {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

/// JSON output of `run`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDocument {
    /// `normal-form` or `fuel-exhausted`.
    pub status: String,
    pub strategy: String,
    pub fuel: usize,
    pub trace: TraceDocument,
}

struct Failure(String);

impl Failure {
    fn parse(path: &Path, e: &ParseError) -> Self {
        Failure(format!("{}:{e}", path.display()))
    }
}

type Outcome = Result<(i32, String), Failure>;

/// Runs the command line `args` (including the program name), writing to the given streams.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let res = match &cli.command {
        Command::Check(a) => check(a),
        Command::Run(a) => run(a),
        Command::Prove(a) => prove(a),
    };
    match res {
        Ok((code, text)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn load(path: &Path) -> Result<System, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_system(&text)
        .map(|(_, s)| s)
        .map_err(|e| Failure::parse(path, &e))
}

fn json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable");
    s.push('\n');
    s
}

fn check(a: &CheckArgs) -> Outcome {
    let sys = load(&a.file)?;
    let doc = CheckDocument {
        signature: sys
            .signature
            .declared()
            .map(|f| SymbolEntry {
                name: f.name().to_string(),
                ty: f.ty().to_string(),
            })
            .collect(),
        rules: sys.rules.iter().map(|r| r.to_string()).collect(),
        bounds: sys.bounds.iter().map(|b| b.to_string()).collect(),
    };
    let text = match a.format {
        Format::Json => json(&doc),
        Format::Text => {
            let mut s = String::new();
            for e in &doc.signature {
                s.push_str(&format!("fun {} : {}\n", e.name, e.ty));
            }
            for b in &doc.bounds {
                s.push_str(&format!("option bound {b}\n"));
            }
            for (i, r) in doc.rules.iter().enumerate() {
                s.push_str(&format!("rule {}: {r}\n", i + 1));
            }
            s.push_str(&format!(
                "ok: {} symbols, {} rules\n",
                doc.signature.len(),
                doc.rules.len()
            ));
            s
        }
    };
    Ok((EXIT_OK, text))
}

fn parse_value(s: &str) -> Result<SemValue, Failure> {
    match s.trim() {
        "true" => Ok(SemValue::Bool(true)),
        "false" => Ok(SemValue::Bool(false)),
        v => BigInt::from_str(v)
            .map(SemValue::Int)
            .map_err(|_| Failure(format!("--input: `{v}` is neither an integer nor a boolean"))),
    }
}

fn run(a: &RunArgs) -> Outcome {
    let sys = load(&a.file)?;
    let values = a.input.iter().map(|s| parse_value(s)).collect::<Result<Vec<_>, _>>()?;
    let term = parse_term(&a.term, &sys.signature, &VarContext::open()).map_err(|e| Failure(format!("--term:{e}")))?;
    let mut inputs = ListInputs::new(values);
    let cap = a.trace_cap.unwrap_or(usize::MAX);
    let (code, status, trace) = match Rewriter::new(&sys).normalize_capped(&term, a.strategy, a.fuel, cap, &mut inputs)
    {
        Ok(t) => (EXIT_OK, "normal-form", t),
        Err(RewriteError::FuelExhausted { partial }) => (EXIT_INCONCLUSIVE, "fuel-exhausted", *partial),
        Err(e) => return Err(Failure(e.to_string())),
    };
    let text = match a.format {
        Format::Json => json(&RunDocument {
            status: status.into(),
            strategy: a.strategy.to_string(),
            fuel: a.fuel,
            trace: trace.to_document(),
        }),
        Format::Text => {
            let tail = if code == EXIT_OK {
                format!("normal form after {} steps: {}\n", trace.step_count, trace.result)
            } else {
                format!("fuel exhausted after {} steps at: {}\n", trace.step_count, trace.result)
            };
            format!("{trace}{tail}")
        }
    };
    Ok((code, text))
}

fn prove(a: &ProveArgs) -> Outcome {
    let sys = load(&a.file)?;
    let mut solver_config = SolverConfig::from_env();
    if let Some(cmd) = &a.smt_cmd {
        let words: Vec<String> = cmd.split_whitespace().map(String::from).collect();
        if words.is_empty() {
            return Err(Failure("--smt-cmd is empty".into()));
        }
        solver_config.smt_command = Some(words);
    }
    solver_config.timeout = Duration::from_millis(a.smt_timeout);
    let mut config = ProverConfig::for_system(&sys);
    if !a.bounds.is_empty() {
        config.bounds = a.bounds.clone();
    }
    config.timeout = Duration::from_secs(a.timeout);
    config.jobs = a.jobs.max(1);
    config.max_queries = a.max_queries;
    let solver = Solver::new(solver_config.clone());
    match find_witness(&sys, &config, &solver) {
        Ok(w) => {
            let verified = check_witness(&w, &sys, &solver_config);
            if !verified.ok {
                return Err(Failure(format!(
                    "internal error: witness failed its own check: {}",
                    verified.diagnostics.join("; ")
                )));
            }
            let text = match a.format {
                Format::Json => json(&w.to_document(&sys)),
                Format::Text => w.render(&sys),
            };
            Ok((EXIT_OK, text))
        }
        Err(report) => {
            let text = match a.format {
                Format::Json => json(&report.to_document(&sys)),
                Format::Text => report.to_string(),
            };
            Ok((EXIT_INCONCLUSIVE, text))
        }
    }
}
