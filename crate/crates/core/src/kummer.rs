//! Kummer degrees over cyclotomic fields, conjugacy of root choices, and the
//! stabilizing integer `m` beyond which all compatible root choices are
//! conjugate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::cyclotomic::{is_nth_power_in_cyclotomic, unit_torsion_order};
use crate::factored::FactoredRational;
use crate::galois::{find_automorphism, FragmentAutomorphism, RootPin};
use crate::lattice::is_mult_independent;
use crate::simplicity::{pure_hull, quotient_exponent, tuple_power, PureHullBasis};
use crate::value::{MulValue, RadicalTuple};
use crate::{Error, Result};

/// Largest number of exponent vectors or root tuples enumerated in one call.
pub const ENUMERATION_BUDGET: u64 = 1 << 20;

/// Which roots of unity the base field contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseRoots {
    /// `Q(ζ_M)`.
    Conductor(u64),
    /// The maximal cyclotomic extension: every root of unity is fixed.
    All,
}

impl BaseRoots {
    pub fn pin(self) -> RootPin {
        match self {
            BaseRoots::Conductor(m) => RootPin::fixing(m),
            BaseRoots::All => RootPin::Identity,
        }
    }
}

/// Base field `Q(μ)(fixed)` over which conjugacy is decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootContext {
    pub base: BaseRoots,
    pub fixed: Vec<MulValue>,
}

impl RootContext {
    pub fn cyclotomic(m: u64) -> Self {
        RootContext {
            base: BaseRoots::Conductor(m),
            fixed: Vec::new(),
        }
    }
}

/// Product of coordinate powers that no admissible automorphism can carry
/// from the first tuple to the second.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Obstruction {
    pub exponents: Vec<i64>,
    pub from: MulValue,
    pub to: MulValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjugacyDecision {
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<FragmentAutomorphism>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<Obstruction>,
}

fn enumeration_size(n: u64, r: usize) -> Result<u64> {
    let mut total = 1u64;
    for _ in 0..r {
        total = total.saturating_mul(n);
    }
    if total > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded(format!("{n}^{r} exponent vectors")));
    }
    Ok(total)
}

/// Mixed-radix digits of `idx` in base `n`, length `r`.
fn digits(mut idx: u64, n: u64, r: usize) -> Vec<u64> {
    (0..r)
        .map(|_| {
            let d = idx % n;
            idx /= n;
            d
        })
        .collect()
}

/// `[Q(ζ_M)(t^{1/n}) : Q(ζ_M)]`, as the index `(⟨t⟩·K^{×n} : K^{×n})`.
pub fn kummer_degree(t: &[FactoredRational], n: u64, m: u64) -> Result<u64> {
    if n == 0 || m == 0 {
        return Err(Error::Malformed("n and M must be positive".into()));
    }
    if unit_torsion_order(m) % n != 0 {
        return Err(Error::ConductorIncompatible { n, m });
    }
    if !is_mult_independent(t) {
        return Err(Error::NotSimpleInContext);
    }
    let total = enumeration_size(n, t.len())?;
    let mut powers = 0u64;
    for idx in 0..total {
        let e: Vec<BigInt> = digits(idx, n, t.len()).into_iter().map(BigInt::from).collect();
        if is_nth_power_in_cyclotomic(&tuple_power(t, &e), n, m) {
            powers += 1;
        }
    }
    Ok(total / powers)
}

/// Number of root tuples `(b_i^{1/n} ζ_n^{j_i})` conjugate to the canonical
/// one over the context field.
pub fn orbit_size(t: &[FactoredRational], n: u64, ctx: &RootContext) -> Result<u64> {
    let total = enumeration_size(n, t.len())?;
    let canon = RadicalTuple::canonical(t.to_vec(), n);
    let mut count = 0;
    for idx in 0..total {
        let other = RadicalTuple::new(t.to_vec(), n, digits(idx, n, t.len()))?;
        if roots_conjugate_verdict(&canon, &other, ctx)?.is_some() {
            count += 1;
        }
    }
    Ok(count)
}

fn check_shape(r1: &RadicalTuple, r2: &RadicalTuple) -> Result<()> {
    if r1.bases != r2.bases || r1.m != r2.m {
        return Err(Error::ShapeMismatch(
            "tuples must name roots of the same bases with the same denominator".into(),
        ));
    }
    Ok(())
}

fn context_pairs(ctx: &RootContext) -> Vec<(MulValue, MulValue)> {
    ctx.fixed.iter().map(|f| (f.clone(), f.clone())).collect()
}

fn solve_values(from: &[MulValue], to: &[MulValue], ctx: &RootContext) -> Result<Option<FragmentAutomorphism>> {
    let mut pairs: Vec<(MulValue, MulValue)> = from.iter().cloned().zip(to.iter().cloned()).collect();
    pairs.extend(context_pairs(ctx));
    find_automorphism(&pairs, ctx.base.pin(), &BTreeMap::new())
}

fn roots_conjugate_verdict(
    r1: &RadicalTuple,
    r2: &RadicalTuple,
    ctx: &RootContext,
) -> Result<Option<FragmentAutomorphism>> {
    check_shape(r1, r2)?;
    solve_values(&r1.values(), &r2.values(), ctx)
}

/// Decides whether some automorphism over the context field maps `r1` to
/// `r2` coordinate-wise.
pub fn roots_conjugate(r1: &RadicalTuple, r2: &RadicalTuple, ctx: &RootContext) -> Result<ConjugacyDecision> {
    if let Some(w) = roots_conjugate_verdict(r1, r2, ctx)? {
        for (x, y) in r1.values().iter().zip(r2.values()) {
            debug_assert_eq!(w.apply(x)?, y);
        }
        return Ok(ConjugacyDecision {
            verdict: true,
            witness: Some(w),
            obstruction: None,
        });
    }
    Ok(ConjugacyDecision {
        verdict: false,
        witness: None,
        obstruction: find_obstruction(r1, r2, ctx)?,
    })
}

/// Smallest single product `Π r1_i^{e_i} ↦ Π r2_i^{e_i}` that is already infeasible.
fn find_obstruction(r1: &RadicalTuple, r2: &RadicalTuple, ctx: &RootContext) -> Result<Option<Obstruction>> {
    let r = r1.len();
    let n = r1.m.max(1);
    let Ok(total) = enumeration_size(n, r) else {
        return Ok(None);
    };
    let v1 = r1.values();
    let v2 = r2.values();
    let mut candidates: Vec<Vec<i64>> = (1..total)
        .map(|idx| digits(idx, n, r).into_iter().map(|d| d as i64).collect())
        .collect();
    candidates.sort_by_key(|e: &Vec<i64>| (e.iter().filter(|&&x| x != 0).count(), e.iter().sum::<i64>()));
    for e in candidates {
        let prod = |v: &[MulValue]| {
            v.iter()
                .zip(&e)
                .fold(MulValue::one(), |acc, (x, &k)| acc.mul(&x.pow(k)))
        };
        let (from, to) = (prod(&v1), prod(&v2));
        if solve_values(std::slice::from_ref(&from), std::slice::from_ref(&to), ctx)?.is_none() {
            return Ok(Some(Obstruction { exponents: e, from, to }));
        }
    }
    Ok(None)
}

/// `m = 2·e` where `e` is the exponent of `saturate(⟨b⟩)/⟨b⟩`, together with
/// the pure hull of `b`.
pub fn stabilizing_m(b: &[FactoredRational]) -> Result<(u64, PureHullBasis)> {
    let hull = pure_hull(b)?;
    if b.is_empty() {
        return Ok((1, hull));
    }
    let e = quotient_exponent(b)
        .to_u64()
        .ok_or_else(|| Error::BudgetExceeded("quotient exponent exceeds 64 bits".into()))?;
    Ok((2 * e, hull))
}

/// Decides whether `choice_dm` is conjugate, over the base field with
/// `choice_m` adjoined, to the reference extension of `choice_m` whose twists
/// are the least residues.
pub fn extension_consistent(
    b: &[FactoredRational],
    m: u64,
    d: u64,
    choice_m: &RadicalTuple,
    choice_dm: &RadicalTuple,
    base: BaseRoots,
) -> Result<bool> {
    if choice_m.bases != b || choice_dm.bases != b || choice_m.m != m || choice_dm.m != d * m {
        return Err(Error::ShapeMismatch(
            "root choices must match the tuple and the denominators m and d·m".into(),
        ));
    }
    let fixed = choice_m.values();
    for (i, x) in choice_dm.values().iter().enumerate() {
        if x.pow(d as i64) != fixed[i] {
            return Err(Error::NotACompatibleRoot(format!(
                "coordinate {i}: ({x})^{d} differs from the fixed {}",
                fixed[i]
            )));
        }
    }
    if d == 1 {
        return Ok(true);
    }
    let reference = RadicalTuple::new(b.to_vec(), d * m, choice_m.twists.clone())?;
    let ctx = RootContext { base, fixed };
    Ok(roots_conjugate_verdict(&reference, choice_dm, &ctx)?.is_some())
}

/// Every `d·m`-th root tuple whose `d`-th power is `choice_m`.
pub fn compatible_extensions(choice_m: &RadicalTuple, d: u64) -> Result<Vec<RadicalTuple>> {
    let dm = d * choice_m.m;
    let r = choice_m.len();
    let total = enumeration_size(d, r)?;
    let mut out = Vec::new();
    for idx in 0..total {
        // twist u_i = t_i + m·j_i covers every lift of t_i modulo d·m
        let tw: Vec<u64> = digits(idx, d, r)
            .into_iter()
            .zip(&choice_m.twists)
            .map(|(j, &t)| t + choice_m.m * j)
            .collect();
        out.push(RadicalTuple::new(choice_m.bases.clone(), dm, tw)?);
    }
    Ok(out)
}
