//! `cover`: one binary, one subcommand per operation, JSON in and out.
//!
//! Exit status is 0 on success, 1 when the library reports a domain error
//! (printed as `{"error": {"kind", "message"}}`), and 2 on malformed input.

mod commands;
mod request;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cover_core::{Budgets, Error};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Domain(Error),
    Malformed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Malformed(m) => CliError::Malformed(m),
            other => CliError::Domain(other),
        }
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.kind(),
            CliError::Malformed(_) => "MalformedInput",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Domain(e) => e.to_string(),
            CliError::Malformed(m) => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Malformed(_) => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Exact computations on multiplicative groups of number fields and their covers.
///
/// Every subcommand reads a request document with `--json FILE` (`-` for
/// stdin); the simpler ones also take their arguments as flags. Global flags
/// can be set through environment variables prefixed with `COVER_`.
#[derive(Debug, Parser)]
#[command(name = "cover", version)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json, env = "COVER_FORMAT")]
    format: Format,
    /// Pollard-Brent iterations per composite cofactor.
    #[arg(long, global = true, env = "COVER_BUDGET_FACTOR")]
    budget_factor: Option<u64>,
    /// Largest cyclotomic conductor that may be materialized.
    #[arg(long, global = true, env = "COVER_BUDGET_CONDUCTOR")]
    budget_conductor: Option<u64>,
    /// Largest root denominator a cover presentation may materialize.
    #[arg(long, global = true, env = "COVER_BUDGET_DENOMINATOR")]
    budget_denominator: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn budgets(&self) -> Budgets {
        let d = Budgets::default();
        Budgets {
            factor: self.budget_factor.unwrap_or(d.factor),
            conductor: self.budget_conductor.unwrap_or(d.conductor),
            denominator: self.budget_denominator.unwrap_or(d.denominator),
        }
    }
}

#[derive(Debug, Args)]
pub struct JsonArg {
    /// Request document; `-` reads stdin.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TupleArgs {
    #[command(flatten)]
    input: JsonArg,
    /// Comma-separated rationals, e.g. `2,3,-5/7`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "json")]
    tuple: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct KSimpleArgs {
    #[command(flatten)]
    input: JsonArg,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "json")]
    a: Option<String>,
    #[arg(long, conflicts_with = "json")]
    k: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ElementArgs {
    #[command(flatten)]
    input: JsonArg,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "json")]
    a: Option<String>,
}

#[derive(Debug, Args)]
pub struct KummerDegreeArgs {
    #[command(flatten)]
    input: JsonArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "json")]
    tuple: Option<Vec<String>>,
    #[arg(long, conflicts_with = "json")]
    n: Option<u64>,
    /// `M` of the base field `Q(zeta_M)`.
    #[arg(long, conflicts_with = "json")]
    conductor: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StabilizerMArgs {
    #[command(flatten)]
    input: JsonArg,
    /// Comma-separated rationals; an empty value gives the empty tuple.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 0..=1, conflicts_with = "json")]
    b: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ZhatSolveArgs {
    #[command(flatten)]
    input: JsonArg,
    /// A congruence `MOD:RESIDUE`; repeat for a system.
    #[arg(
        long = "congruence",
        value_name = "MOD:RESIDUE",
        allow_hyphen_values = true,
        conflicts_with = "json"
    )]
    congruences: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether a tuple of rationals is simple.
    SimpleCheck(TupleArgs),
    /// Decide whether `a` is k-simple.
    KSimple(KSimpleArgs),
    /// The quadratic stabilizer of a simple rational and its conductor.
    Stabilizer(ElementArgs),
    /// Saturation basis of an independent tuple and its square roots.
    PureHull(TupleArgs),
    /// Degree of `Q(zeta_M)(t^(1/n))` over `Q(zeta_M)`.
    KummerDegree(KummerDegreeArgs),
    /// Decide whether two root tuples are Galois conjugate.
    Conjugate(JsonArg),
    /// The stabilizing integer of a tuple.
    StabilizerM(StabilizerMArgs),
    /// Component count of the Zariski closure of a torus subgroup.
    Closure(JsonArg),
    /// Component count of the closure pulled back under `x -> x^d`.
    Pullback(JsonArg),
    /// Build an isomorphism between two cover presentations.
    Backforth(JsonArg),
    /// Solve a system of congruences.
    ZhatSolve(ZhatSolveArgs),
    /// The profinite correction between two compact-kernel covers.
    ZhatSigma(JsonArg),
}

fn read_document(input: &JsonArg) -> Result<Option<String>, CliError> {
    let Some(path) = &input.json else {
        return Ok(None);
    };
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Malformed(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Malformed(format!("reading {}: {e}", path.display())))?;
    }
    Ok(Some(text))
}

fn render_text(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = v {
        for (k, x) in map {
            let shown = match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {shown}\n"));
        }
    } else {
        out.push_str(&format!("{v}\n"));
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let budgets = cli.budgets();
    match commands::run(&cli.command, &budgets) {
        Ok(mut v) => {
            if let Value::Object(map) = &mut v {
                map.insert("budgets".into(), serde_json::to_value(budgets).expect("plain struct"));
            }
            match cli.format {
                Format::Json => println!("{v}"),
                Format::Text => print!("{}", render_text(&v)),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let obj = json!({ "error": { "kind": e.kind(), "message": e.message() } });
            match cli.format {
                Format::Json => println!("{obj}"),
                Format::Text => eprintln!("error [{}]: {}", e.kind(), e.message()),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
