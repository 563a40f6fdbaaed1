//! Dispatch from a parsed command line to the library.

use cover_core::cover::build_isomorphism;
use cover_core::kummer::{kummer_degree, roots_conjugate, stabilizing_m, BaseRoots, RootContext};
use cover_core::lattice::serde_json_like::Int;
use cover_core::profinite::{build_sigma, crt_solve, CongruenceSystem};
use cover_core::simplicity::{is_k_simple, is_simple_tuple, pure_hull, stabilizer_n};
use cover_core::torus::{closure_components, pullback_components, relation_lattice};
use cover_core::{Budgets, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::request::*;
use crate::{read_document, CliError, Command, JsonArg};

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Domain(Error::Malformed(e.to_string())))
}

fn missing(what: &str) -> CliError {
    CliError::Malformed(format!("either --json or {what} is required"))
}

/// Reads a `--json` document, or builds the request from flags.
fn request<T, F>(input: &JsonArg, from_flags: F) -> Result<T, CliError>
where
    T: for<'de> serde::Deserialize<'de> + Versioned,
    F: FnOnce() -> Result<T, CliError>,
{
    match read_document(input)? {
        Some(text) => parse(&text),
        None => from_flags(),
    }
}

fn document<T: for<'de> serde::Deserialize<'de> + Versioned>(input: &JsonArg) -> Result<T, CliError> {
    request(input, || Err(missing("a request document")))
}

fn texts(xs: &[String]) -> Vec<RationalInput> {
    xs.iter()
        .filter(|s| !s.is_empty())
        .map(|s| RationalInput::Text(s.trim().to_string()))
        .collect()
}

fn check_conductor(m: u64, budgets: &Budgets) -> Result<(), CliError> {
    if m > budgets.conductor {
        return Err(CliError::Domain(Error::BoundExceeded {
            what: "conductor",
            value: m,
            bound: budgets.conductor,
        }));
    }
    Ok(())
}

fn parse_congruence(s: &str) -> Result<(u64, i64), CliError> {
    let bad = || CliError::Malformed(format!("congruence {s:?} is not MOD:RESIDUE"));
    let (m, r) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        m.trim().parse().map_err(|_| bad())?,
        r.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn run(command: &Command, budgets: &Budgets) -> Result<Value, CliError> {
    const V: &str = SCHEMA_VERSION;
    match command {
        Command::SimpleCheck(args) => {
            let req: TupleRequest = request(&args.input, || {
                let tuple = args.tuple.as_ref().ok_or_else(|| missing("--tuple"))?;
                Ok(TupleRequest {
                    version: V.into(),
                    tuple: texts(tuple),
                })
            })?;
            to_value(&is_simple_tuple(&resolve_all(&req.tuple, budgets)?))
        }
        Command::KSimple(args) => {
            let req: KSimpleRequest = request(&args.input, || match (&args.a, args.k) {
                (Some(a), Some(k)) => Ok(KSimpleRequest {
                    version: V.into(),
                    a: RationalInput::Text(a.clone()),
                    k,
                }),
                _ => Err(missing("--a and --k")),
            })?;
            if req.k == 0 {
                return Err(CliError::Malformed("k must be positive".into()));
            }
            let a = req.a.resolve(budgets)?;
            Ok(json!({ "verdict": is_k_simple(&a, req.k) }))
        }
        Command::Stabilizer(args) => {
            let req: ElementRequest = request(&args.input, || {
                let a = args.a.as_ref().ok_or_else(|| missing("--a"))?;
                Ok(ElementRequest {
                    version: V.into(),
                    a: RationalInput::Text(a.clone()),
                })
            })?;
            let (n, conductor) = stabilizer_n(&req.a.resolve(budgets)?)?;
            Ok(json!({ "n": n, "conductor": conductor }))
        }
        Command::PureHull(args) => {
            let req: TupleRequest = request(&args.input, || {
                let tuple = args.tuple.as_ref().ok_or_else(|| missing("--tuple"))?;
                Ok(TupleRequest {
                    version: V.into(),
                    tuple: texts(tuple),
                })
            })?;
            to_value(&pure_hull(&resolve_all(&req.tuple, budgets)?)?)
        }
        Command::KummerDegree(args) => {
            let req: KummerDegreeRequest = request(&args.input, || match (&args.tuple, args.n, args.conductor) {
                (Some(t), Some(n), Some(m)) => Ok(KummerDegreeRequest {
                    version: V.into(),
                    tuple: texts(t),
                    n,
                    conductor: m,
                }),
                _ => Err(missing("--tuple, --n and --conductor")),
            })?;
            check_conductor(req.conductor, budgets)?;
            let degree = kummer_degree(&resolve_all(&req.tuple, budgets)?, req.n, req.conductor)?;
            Ok(json!({ "degree": degree }))
        }
        Command::Conjugate(input) => {
            let req: ConjugateRequest = document(input)?;
            let base = match req.conductor {
                Some(m) => {
                    check_conductor(m, budgets)?;
                    BaseRoots::Conductor(m)
                }
                None => BaseRoots::All,
            };
            let ctx = RootContext { base, fixed: req.fixed };
            let r1 = req.first.resolve(budgets)?;
            let r2 = req.second.resolve(budgets)?;
            to_value(&roots_conjugate(&r1, &r2, &ctx)?)
        }
        Command::StabilizerM(args) => {
            let req: StabilizerMRequest = request(&args.input, || {
                let b = args.b.as_ref().ok_or_else(|| missing("--b"))?;
                Ok(StabilizerMRequest {
                    version: V.into(),
                    b: texts(b),
                })
            })?;
            let (m, hull) = stabilizing_m(&resolve_all(&req.b, budgets)?)?;
            Ok(json!({ "m": m, "pure_hull": to_value(&hull)? }))
        }
        Command::Closure(input) => {
            let req: ClosureRequest = document(input)?;
            let gens = resolve_points(&req.generators, budgets)?;
            Ok(json!({
                "components": to_value(&Int(closure_components(&gens)?))?,
                "relation_lattice": to_value(&relation_lattice(&gens)?)?,
            }))
        }
        Command::Pullback(input) => {
            let req: PullbackRequest = document(input)?;
            let gens = resolve_points(&req.generators, budgets)?;
            Ok(json!({ "components": to_value(&Int(pullback_components(&gens, req.d)?))?, "d": req.d }))
        }
        Command::Backforth(input) => {
            let req: BackforthRequest = document(input)?;
            to_value(&build_isomorphism(&req.domain, &req.codomain, budgets)?)
        }
        Command::ZhatSolve(args) => {
            let req: ZhatSolveRequest = request(&args.input, || {
                if args.congruences.is_empty() {
                    return Err(missing("--congruence"));
                }
                let constraints = args
                    .congruences
                    .iter()
                    .map(|s| parse_congruence(s))
                    .collect::<Result<_, _>>()?;
                Ok(ZhatSolveRequest {
                    version: V.into(),
                    system: CongruenceSystem::new(constraints),
                })
            })?;
            to_value(&crt_solve(&req.system)?)
        }
        Command::ZhatSigma(input) => {
            let req: ZhatSigmaRequest = document(input)?;
            if req.bound > budgets.denominator {
                return Err(CliError::Domain(Error::BoundExceeded {
                    what: "denominator bound",
                    value: req.bound,
                    bound: budgets.denominator,
                }));
            }
            to_value(&build_sigma(&req.h, &req.g, req.bound)?)
        }
    }
}
