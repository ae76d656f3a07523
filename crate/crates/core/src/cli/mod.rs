//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage or domain errors, 3 when the
//! requested precision cannot resolve the error target. Every failure is
//! reported as a single line on stderr.

mod batch;
mod output;

use std::ffi::OsString;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::json;

use crate::coverage::{coverage_run, CoverageReport, CoverageSpec};
use crate::error::BoundError;
use crate::model::{ExactOracle, QueryInstance};
use crate::precision::{format_real, PrecisionContext};
use crate::solver::{
    adjust_delta, left_tail, lower_bound, precision_for, resolve_engine, right_tail, upper_bound,
    MultiplicityPolicy, TailEngine,
};

pub use batch::{parse_batch, BatchCondition, BatchQueryFile};
use output::{count_json, BoundRow};

/// Largest count accepted on the command line or in batch files.
pub const MAX_COUNT: u64 = 1_000_000_000_000_000_000;

/// Environment variable supplying `--digits` when the flag is absent.
pub const DIGITS_ENV: &str = "SKETCHBOUND_DIGITS";

/// Digits used by `tail` when neither the flag nor the environment sets them.
pub const DEFAULT_TAIL_DIGITS: u32 = 30;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sketchbound",
    version,
    about = "Exact-tail confidence bounds for counts estimated from uniform samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper and lower bounds on the population count for one query.
    Bound(BoundArgs),
    /// Simultaneous bounds for several conditions read from a file ("-" for stdin).
    Batch(BatchArgs),
    /// A single left or right tail probability.
    Tail(TailArgs),
    /// Monte Carlo check of bound failure rates.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sides {
    Upper,
    Lower,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct EngineArgs {
    /// direct, stirling, exact or auto (exact up to n = 10000).
    #[arg(long, default_value = "auto")]
    engine: String,
    /// Significant decimal digits; overrides SKETCHBOUND_DIGITS.
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Population size.
    #[arg(long, value_parser = parse_count)]
    n: u64,
    /// Sample size.
    #[arg(long, value_parser = parse_count)]
    s: u64,
    /// Successes observed in the sample.
    #[arg(long, value_parser = parse_count)]
    k: u64,
    /// Failure probability shared by the reported bounds.
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum, default_value = "both")]
    sides: Sides,
    /// Use the full delta on each side instead of delta / 2.
    #[arg(long)]
    no_bonferroni: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Batch file path, or "-" for stdin.
    file: String,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct TailArgs {
    #[arg(long, value_parser = parse_count)]
    n: u64,
    /// Successes in the population.
    #[arg(long, value_parser = parse_count)]
    m: u64,
    #[arg(long, value_parser = parse_count)]
    s: u64,
    #[arg(long, value_parser = parse_count)]
    k: u64,
    #[arg(long, value_enum, default_value = "left")]
    which: Which,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long, value_parser = parse_count)]
    m: u64,
    #[arg(long, value_parser = parse_count)]
    s: u64,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_parser = parse_count)]
    trials: u64,
    #[arg(long, value_parser = parse_count)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Bound(BoundError),
    Io(std::io::Error),
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        CliError::Bound(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Bound(BoundError::PrecisionInfeasible { .. }) => EXIT_INFEASIBLE,
            CliError::Usage(_) | CliError::Bound(_) => EXIT_USAGE,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Bound(e) => e.to_string(),
            CliError::Io(e) => format!("i/o error: {e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses a non-negative integer no larger than [`MAX_COUNT`].
pub fn parse_count(text: &str) -> Result<u64, String> {
    let value: BigUint = text
        .trim()
        .parse()
        .map_err(|_| format!("'{text}' is not a non-negative integer"))?;
    if value > BigUint::from(MAX_COUNT) {
        return Err(format!(
            "'{text}' exceeds the largest supported count 10^18"
        ));
    }
    Ok(value.to_u64().expect("bounded by MAX_COUNT"))
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("error: invalid arguments");
            let _ = writeln!(stderr, "{first}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Bound(a) => cmd_bound(&a, stdout),
        Command::Batch(a) => cmd_batch(&a, stdin, stdout),
        Command::Tail(a) => cmd_tail(&a, stdout),
        Command::Coverage(a) => cmd_coverage(&a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn digits_setting(flag: Option<u32>) -> CliResult<Option<u32>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(DIGITS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::Usage(format!(
                "{DIGITS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_bound(a: &BoundArgs, out: &mut dyn Write) -> CliResult {
    let q = QueryInstance::new(a.n, a.s, a.k, a.delta)?;
    let engine = resolve_engine(&a.engine.engine, q.n())?;
    let policy = if a.sides == Sides::Both && !a.no_bonferroni {
        MultiplicityPolicy::two_sided()
    } else {
        MultiplicityPolicy::one_sided()
    };
    let per_side = q.with_delta(adjust_delta(q.delta(), &policy))?;
    let ctx = precision_for(&per_side, digits_setting(a.engine.digits)?)?;

    let mut rows = Vec::new();
    if a.sides != Sides::Lower {
        rows.push(BoundRow::new(None, &upper_bound(&per_side, engine, &ctx)?));
    }
    if a.sides != Sides::Upper {
        rows.push(BoundRow::new(None, &lower_bound(&per_side, engine, &ctx)?));
    }

    match a.engine.format {
        Format::Json => write_json(
            out,
            &serde_json::Value::Array(rows.iter().map(BoundRow::to_json).collect()),
        ),
        Format::Text => {
            writeln!(
                out,
                "query n={} s={} k={} delta={}",
                q.n(),
                q.s(),
                q.k(),
                q.delta()
            )?;
            if policy.two_sided {
                writeln!(
                    out,
                    "adjustment two-sided per_side_delta={}",
                    per_side.delta()
                )?;
            } else {
                writeln!(out, "adjustment none per_side_delta={}", per_side.delta())?;
            }
            for row in &rows {
                writeln!(out, "{}", row.text())?;
            }
            Ok(())
        }
    }
}

fn cmd_batch(a: &BatchArgs, stdin: &mut dyn Read, out: &mut dyn Write) -> CliResult {
    let text = if a.file == "-" {
        let mut buf = String::new();
        stdin
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Usage(format!("cannot read stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(&a.file)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.file)))?
    };
    let file = parse_batch(&text).map_err(CliError::Usage)?;

    let count = u32::try_from(file.conditions.len())
        .map_err(|_| CliError::Usage("too many conditions".into()))?;
    let policy = MultiplicityPolicy::new(true, count)?;
    let per_side_delta = adjust_delta(file.delta, &policy);
    let engine = resolve_engine(&a.engine.engine, file.n)?;
    let digits = digits_setting(a.engine.digits)?;

    let mut rows = Vec::new();
    for c in &file.conditions {
        let q = QueryInstance::new(file.n, file.s, c.k, per_side_delta)?;
        let ctx = precision_for(&q, digits)?;
        rows.push(BoundRow::new(
            Some(&c.label),
            &upper_bound(&q, engine, &ctx)?,
        ));
        rows.push(BoundRow::new(
            Some(&c.label),
            &lower_bound(&q, engine, &ctx)?,
        ));
    }
    let statements = policy.statements();
    let confidence = 1.0 - file.delta;

    match a.engine.format {
        Format::Json => write_json(
            out,
            &json!({
                "n": count_json(file.n),
                "s": count_json(file.s),
                "delta": file.delta,
                "conditions": count,
                "per_side_delta": per_side_delta,
                "joint_confidence": confidence,
                "results": rows.iter().map(BoundRow::to_json).collect::<Vec<_>>(),
            }),
        ),
        Format::Text => {
            writeln!(
                out,
                "batch n={} s={} delta={} conditions={count} per_side_delta={per_side_delta}",
                file.n, file.s, file.delta
            )?;
            for row in &rows {
                writeln!(out, "{}", row.text())?;
            }
            writeln!(
                out,
                "joint: all {statements} bounds hold simultaneously with probability at least {confidence}"
            )?;
            Ok(())
        }
    }
}

fn cmd_tail(a: &TailArgs, out: &mut dyn Write) -> CliResult {
    let engine = resolve_engine(&a.engine.engine, a.n)?;
    let digits = digits_setting(a.engine.digits)?.unwrap_or(DEFAULT_TAIL_DIGITS);
    let k_eff = a.k.max(a.s.saturating_sub(a.k));
    let ctx = PrecisionContext::for_digits(digits, k_eff)?;
    let (value, fraction) = match (engine, a.which) {
        (TailEngine::Exact, Which::Left) => {
            let r = ExactOracle::default().left_tail(a.n, a.m, a.s, a.k)?;
            (
                left_tail(engine, a.n, a.m, a.s, a.k, &ctx)?,
                Some(r.to_string()),
            )
        }
        (TailEngine::Exact, Which::Right) => {
            let r = ExactOracle::default().right_tail(a.n, a.m, a.s, a.k)?;
            (
                right_tail(engine, a.n, a.m, a.s, a.k, &ctx)?,
                Some(r.to_string()),
            )
        }
        (_, Which::Left) => (left_tail(engine, a.n, a.m, a.s, a.k, &ctx)?, None),
        (_, Which::Right) => (right_tail(engine, a.n, a.m, a.s, a.k, &ctx)?, None),
    };
    let value = format_real(&value, digits);
    let which = match a.which {
        Which::Left => "left",
        Which::Right => "right",
    };

    match a.engine.format {
        Format::Json => {
            let mut v = json!({
                "which": which,
                "n": count_json(a.n),
                "m": count_json(a.m),
                "s": count_json(a.s),
                "k": count_json(a.k),
                "engine": engine.name(),
                "digits": digits,
                "value": value,
            });
            if let Some(f) = &fraction {
                v["fraction"] = json!(f);
            }
            write_json(out, &v)
        }
        Format::Text => {
            writeln!(
                out,
                "tail which={which} n={} m={} s={} k={} engine={} digits={digits}",
                a.n,
                a.m,
                a.s,
                a.k,
                engine.name()
            )?;
            if let Some(f) = &fraction {
                writeln!(out, "fraction={f}")?;
            }
            writeln!(out, "value={value}")?;
            Ok(())
        }
    }
}

fn cmd_coverage(a: &CoverageArgs, out: &mut dyn Write) -> CliResult {
    let engine = resolve_engine(&a.engine.engine, a.n)?;
    let spec = CoverageSpec {
        n: a.n,
        m: a.m,
        s: a.s,
        delta: a.delta,
        trials: a.trials,
        seed: a.seed,
    };
    let report = coverage_run(&spec, engine, digits_setting(a.engine.digits)?)?;
    let limit = a.delta + CoverageReport::slack(a.delta, a.trials);

    match a.engine.format {
        Format::Json => write_json(
            out,
            &json!({
                "n": count_json(a.n),
                "m": count_json(a.m),
                "s": count_json(a.s),
                "delta": a.delta,
                "engine": engine.name(),
                "trials": count_json(report.trials),
                "seed": count_json(report.seed),
                "upper_failures": count_json(report.upper_failures),
                "lower_failures": count_json(report.lower_failures),
                "empirical_upper_rate": report.empirical_upper_rate,
                "empirical_lower_rate": report.empirical_lower_rate,
                "rate_limit": limit,
            }),
        ),
        Format::Text => {
            writeln!(
                out,
                "coverage n={} m={} s={} delta={} engine={} trials={} seed={}",
                a.n,
                a.m,
                a.s,
                a.delta,
                engine.name(),
                report.trials,
                report.seed
            )?;
            writeln!(
                out,
                "upper failures={} rate={}",
                report.upper_failures, report.empirical_upper_rate
            )?;
            writeln!(
                out,
                "lower failures={} rate={}",
                report.lower_failures, report.empirical_lower_rate
            )?;
            writeln!(out, "rate_limit={limit}")?;
            Ok(())
        }
    }
}
