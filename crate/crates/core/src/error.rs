use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every domain error raised by the library.
///
/// `kind()` gives a stable machine-readable tag used by the CLI error object.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero has no multiplicative factorization")]
    ZeroInput,
    #[error("composite {0} survived the configured factorization budget")]
    FactorizationBudgetExceeded(BigInt),
    #[error("support mismatch: expected {expected} coordinates, got {got}")]
    SupportMismatch { expected: usize, got: usize },
    #[error("first lattice is not contained in the second")]
    NotASubgroup,
    #[error("{what} = {value} exceeds the configured bound {bound}")]
    BoundExceeded { what: &'static str, value: u64, bound: u64 },
    #[error("conductor mismatch: {0} vs {1}")]
    ConductorMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{n} is not a multiple of {m}")]
    NotAMultiple { m: u64, n: u64 },
    #[error("{0} is not squarefree")]
    NotSquarefree(BigInt),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("not simple: {0}")]
    NotSimple(String),
    #[error("tuple is not multiplicatively independent")]
    NotIndependent,
    #[error("tuple is not simple in the requested cyclotomic context")]
    NotSimpleInContext,
    #[error("primitive {n}-th roots of unity are not in Q(zeta_{m})")]
    ConductorIncompatible { n: u64, m: u64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not a compatible root: {0}")]
    NotACompatibleRoot(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("additive relation requested on a formal transcendental value")]
    TranscendentalAddition,
    #[error("unsupported value shape: {0}")]
    UnsupportedValueShape(String),
    #[error("no conjugate choice: {0}")]
    NoConjugateChoice(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("inconsistent congruences: z = {r1} mod {n1} and z = {r2} mod {n2}")]
    Inconsistent { n1: u64, r1: u64, n2: u64, r2: u64 },
    #[error("presentations do not cover the same element: {0}")]
    NotSameElement(String),
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroInput => "ZeroInput",
            Error::FactorizationBudgetExceeded(_) => "FactorizationBudgetExceeded",
            Error::SupportMismatch { .. } => "SupportMismatch",
            Error::NotASubgroup => "NotASubgroup",
            Error::BoundExceeded { .. } => "BoundExceeded",
            Error::ConductorMismatch(..) => "ConductorMismatch",
            Error::DivisionByZero => "DivisionByZero",
            Error::NotAMultiple { .. } => "NotAMultiple",
            Error::NotSquarefree(_) => "NotSquarefree",
            Error::NotPrime(_) => "NotPrime",
            Error::NotSimple(_) => "NotSimple",
            Error::NotIndependent => "NotIndependent",
            Error::NotSimpleInContext => "NotSimpleInContext",
            Error::ConductorIncompatible { .. } => "ConductorIncompatible",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NotACompatibleRoot(_) => "NotACompatibleRoot",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::TranscendentalAddition => "TranscendentalAddition",
            Error::UnsupportedValueShape(_) => "UnsupportedValueShape",
            Error::NoConjugateChoice(_) => "NoConjugateChoice",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::Inconsistent { .. } => "Inconsistent",
            Error::NotSameElement(_) => "Inconsistent",
            Error::InvalidPresentation(_) => "InvalidPresentation",
            Error::Malformed(_) => "MalformedInput",
        }
    }
}
