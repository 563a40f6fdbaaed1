//! Versioned request documents accepted by `--json`.
//!
//! Every document carries `"version": "1"` and rejects unknown fields.
//! Rationals may be written as decimal strings (`"-3/4"`), plain integers,
//! or already-factored objects `{"sign": -1, "factors": {"3": 1}}`.

use cover_core::cover::CoverPresentation;
use cover_core::factored::parse_rational;
use cover_core::profinite::CongruenceSystem;
use cover_core::value::{ratio, MulValue, RadicalTuple};
use cover_core::{factor, Budgets, FactoredRational};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RationalInput {
    Int(i64),
    Text(String),
    Factored(FactoredRational),
}

impl RationalInput {
    pub fn resolve(&self, budgets: &Budgets) -> Result<FactoredRational, CliError> {
        match self {
            RationalInput::Int(n) => Ok(factor(&BigRational::from_integer(BigInt::from(*n)), budgets)?),
            RationalInput::Text(s) => Ok(factor(&parse_rational(s)?, budgets)?),
            RationalInput::Factored(f) => Ok(f.clone()),
        }
    }
}

pub fn resolve_all(xs: &[RationalInput], budgets: &Budgets) -> Result<Vec<FactoredRational>, CliError> {
    xs.iter().map(|x| x.resolve(budgets)).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Twist {
    pub order: u64,
    pub exp: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistCoordinate {
    pub twist: Twist,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolCoordinate {
    pub symbol: String,
}

/// One coordinate of a torus point.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum CoordinateInput {
    Rational(RationalInput),
    Twist(TwistCoordinate),
    Symbol(SymbolCoordinate),
}

impl CoordinateInput {
    pub fn resolve(&self, budgets: &Budgets) -> Result<MulValue, CliError> {
        match self {
            CoordinateInput::Rational(r) => Ok(MulValue::from_factored(&r.resolve(budgets)?)),
            CoordinateInput::Twist(TwistCoordinate { twist }) => {
                if twist.order == 0 {
                    return Err(CliError::Malformed("twist order must be positive".into()));
                }
                let order = i64::try_from(twist.order)
                    .map_err(|_| CliError::Malformed(format!("twist order {} is too large", twist.order)))?;
                Ok(MulValue::root_of_unity(ratio(twist.exp, order)))
            }
            CoordinateInput::Symbol(SymbolCoordinate { symbol }) => {
                if symbol.is_empty() || symbol.parse::<BigInt>().is_ok() {
                    return Err(CliError::Malformed(format!("{symbol:?} is not a symbol name")));
                }
                Ok(MulValue::symbol(symbol))
            }
        }
    }
}

pub fn resolve_points(points: &[Vec<CoordinateInput>], budgets: &Budgets) -> Result<Vec<Vec<MulValue>>, CliError> {
    points
        .iter()
        .map(|p| p.iter().map(|c| c.resolve(budgets)).collect())
        .collect()
}

/// `b_i^{1/m}·ζ_m^{t_i}`, with bases in any rational form.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsInput {
    pub bases: Vec<RationalInput>,
    pub m: u64,
    #[serde(default)]
    pub twists: Option<Vec<u64>>,
}

impl RootsInput {
    pub fn resolve(&self, budgets: &Budgets) -> Result<RadicalTuple, CliError> {
        let bases = resolve_all(&self.bases, budgets)?;
        let twists = self.twists.clone().unwrap_or_else(|| vec![0; bases.len()]);
        Ok(RadicalTuple::new(bases, self.m, twists)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleRequest {
    pub version: String,
    pub tuple: Vec<RationalInput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSimpleRequest {
    pub version: String,
    pub a: RationalInput,
    pub k: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementRequest {
    pub version: String,
    pub a: RationalInput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KummerDegreeRequest {
    pub version: String,
    pub tuple: Vec<RationalInput>,
    pub n: u64,
    /// `M` of the base field `Q(ζ_M)`.
    pub conductor: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateRequest {
    pub version: String,
    pub first: RootsInput,
    pub second: RootsInput,
    /// Base field `Q(ζ_M)`; absent means every root of unity is fixed.
    #[serde(default)]
    pub conductor: Option<u64>,
    #[serde(default)]
    pub fixed: Vec<MulValue>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizerMRequest {
    pub version: String,
    pub b: Vec<RationalInput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureRequest {
    pub version: String,
    pub generators: Vec<Vec<CoordinateInput>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullbackRequest {
    pub version: String,
    pub generators: Vec<Vec<CoordinateInput>>,
    pub d: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackforthRequest {
    pub version: String,
    pub domain: CoverPresentation,
    pub codomain: CoverPresentation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZhatSolveRequest {
    pub version: String,
    pub system: CongruenceSystem,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZhatSigmaRequest {
    pub version: String,
    pub h: CoverPresentation,
    pub g: CoverPresentation,
    pub bound: u64,
}

pub trait Versioned {
    fn version(&self) -> &str;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn version(&self) -> &str {
                &self.version
            }
        })*
    };
}

versioned!(
    TupleRequest,
    KSimpleRequest,
    ElementRequest,
    KummerDegreeRequest,
    ConjugateRequest,
    StabilizerMRequest,
    ClosureRequest,
    PullbackRequest,
    BackforthRequest,
    ZhatSolveRequest,
    ZhatSigmaRequest
);

/// Parses a request document and checks its schema version.
pub fn parse<T: for<'de> Deserialize<'de> + Versioned>(text: &str) -> Result<T, CliError> {
    let req: T = serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))?;
    if req.version() != SCHEMA_VERSION {
        return Err(CliError::Malformed(format!(
            "unsupported schema version {:?}; expected {SCHEMA_VERSION:?}",
            req.version()
        )));
    }
    Ok(req)
}
