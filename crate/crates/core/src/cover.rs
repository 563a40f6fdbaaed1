//! Presentations of covers `ex: H → F^×` of a multiplicative fragment by a
//! Q-vector space, the two relations read off through `ex`, and the
//! back-and-forth construction of isomorphisms between two covers.
//!
//! A presentation lists generators `h_j`, each lying over a rational or a
//! transcendental symbol, together with a profinite twist `z_j` fixing the
//! roots: `ex(h_j/n) = canon(b_j, n)·e(z_j/n)`. The kernel is spanned by a
//! distinguished `κ` with `ex(q·κ) = e(q)`; a presentation also declares
//! which multiple `s·κ` it regards as its kernel generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::lcm;
use crate::cyclotomic::{solve_rational, CyclotomicElement};
use crate::factored::{factor, format_rational, parse_rational, FactoredRational};
use crate::galois::{find_automorphism_shifted, FragmentAutomorphism, RootPin};
use crate::kummer::stabilizing_m;
use crate::lattice::{is_mult_independent, Atom};
use crate::profinite::{crt_solve, CongruenceSystem, ZhatApprox};
use crate::value::MulValue;
use crate::{Budgets, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorValue {
    Rational(FactoredRational),
    Symbol(String),
}

impl GeneratorValue {
    pub fn to_value(&self) -> MulValue {
        match self {
            GeneratorValue::Rational(b) => MulValue::from_factored(b),
            GeneratorValue::Symbol(t) => MulValue::symbol(t),
        }
    }

    pub fn is_symbol(&self) -> bool {
        matches!(self, GeneratorValue::Symbol(_))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum ValueRepr {
    Rational(String),
    Symbol(String),
}

impl Serialize for GeneratorValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GeneratorValue::Rational(b) => ValueRepr::Rational(format_rational(&b.to_rational())),
            GeneratorValue::Symbol(t) => ValueRepr::Symbol(t.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GeneratorValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ValueRepr::deserialize(d)? {
            ValueRepr::Rational(q) => {
                let q = parse_rational(&q).map_err(D::Error::custom)?;
                let f = factor(&q, &Budgets::default()).map_err(D::Error::custom)?;
                Ok(GeneratorValue::Rational(f))
            }
            ValueRepr::Symbol(t) => Ok(GeneratorValue::Symbol(t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub name: String,
    pub value: GeneratorValue,
    #[serde(default = "ZhatApprox::zero")]
    pub twist: ZhatApprox,
}

/// `Σ q_j·h_j + q_κ·κ`, indexed by generator position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HElement {
    pub gens: BTreeMap<usize, BigRational>,
    pub kernel: BigRational,
}

impl HElement {
    pub fn zero() -> Self {
        HElement::default()
    }

    pub fn generator(j: usize) -> Self {
        HElement {
            gens: [(j, BigRational::one())].into_iter().collect(),
            kernel: BigRational::zero(),
        }
    }

    pub fn kernel(q: BigRational) -> Self {
        HElement {
            gens: BTreeMap::new(),
            kernel: q,
        }
    }

    fn normalized(mut self) -> Self {
        self.gens.retain(|_, q| !q.is_zero());
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (j, q) in &other.gens {
            *out.gens.entry(*j).or_insert_with(BigRational::zero) += q;
        }
        out.kernel += &other.kernel;
        out.normalized()
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        HElement {
            gens: self.gens.iter().map(|(j, c)| (*j, c * q)).collect(),
            kernel: &self.kernel * q,
        }
        .normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.gens.is_empty() && self.kernel.is_zero()
    }

    /// Largest denominator among the coefficients.
    pub fn denominator(&self) -> BigInt {
        self.gens
            .values()
            .chain(std::iter::once(&self.kernel))
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
    }
}

impl fmt::Display for HElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = self
            .gens
            .iter()
            .map(|(j, q)| format!("{}·h{j}", format_rational(q)))
            .collect();
        if !self.kernel.is_zero() {
            terms.push(format!("{}·κ", format_rational(&self.kernel)));
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// Name of the kernel coordinate in named element maps.
pub const KERNEL_KEY: &str = "kernel";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverPresentation {
    generators: Vec<Generator>,
    kernel_multiple: i64,
    denominator_bound: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    generator: String,
    den: u64,
    twist: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentationRepr {
    generators: Vec<Generator>,
    #[serde(default = "one_i64")]
    kernel_generator: i64,
    #[serde(default = "one_u64")]
    denominator_bound: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    ex_table: Vec<TableEntry>,
}

fn one_i64() -> i64 {
    1
}

fn one_u64() -> u64 {
    1
}

impl Serialize for CoverPresentation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PresentationRepr {
            generators: self.generators.clone(),
            kernel_generator: self.kernel_multiple,
            denominator_bound: self.denominator_bound,
            ex_table: Vec::new(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoverPresentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut r = PresentationRepr::deserialize(d)?;
        // fold explicit table rows into the twists
        for entry in &r.ex_table {
            let g = r
                .generators
                .iter_mut()
                .find(|g| g.name == entry.generator)
                .ok_or_else(|| D::Error::custom(format!("ex_table names unknown generator {}", entry.generator)))?;
            let sys = CongruenceSystem::new(vec![
                (g.twist.modulus(), g.twist.residue() as i64),
                (entry.den, entry.twist),
            ]);
            g.twist =
                crt_solve(&sys).map_err(|e| D::Error::custom(format!("incoherent root table for {}: {e}", g.name)))?;
        }
        CoverPresentation::new(r.generators, r.kernel_generator, r.denominator_bound).map_err(D::Error::custom)
    }
}

impl CoverPresentation {
    pub fn new(generators: Vec<Generator>, kernel_multiple: i64, denominator_bound: u64) -> Result<Self> {
        if kernel_multiple == 0 {
            return Err(Error::InvalidPresentation("kernel generator must be nonzero".into()));
        }
        if denominator_bound == 0 {
            return Err(Error::InvalidPresentation("denominator bound must be positive".into()));
        }
        let mut names = BTreeSet::new();
        let mut symbols = BTreeSet::new();
        let mut rationals = Vec::new();
        for g in &generators {
            if g.name == KERNEL_KEY || !names.insert(g.name.clone()) {
                return Err(Error::InvalidPresentation(format!(
                    "generator name {:?} is reserved or repeated",
                    g.name
                )));
            }
            match &g.value {
                GeneratorValue::Symbol(t) => {
                    if t.parse::<BigInt>().is_ok() || !symbols.insert(t.clone()) {
                        return Err(Error::InvalidPresentation(format!(
                            "symbol {t:?} is numeric or repeated"
                        )));
                    }
                }
                GeneratorValue::Rational(b) => rationals.push(b.clone()),
            }
        }
        if !is_mult_independent(&rationals) {
            return Err(Error::InvalidPresentation(
                "rational generators must be multiplicatively independent".into(),
            ));
        }
        Ok(CoverPresentation {
            generators,
            kernel_multiple,
            denominator_bound,
        })
    }

    /// Generators with trivial twists and kernel generator `κ`.
    pub fn canonical(values: Vec<GeneratorValue>, denominator_bound: u64) -> Result<Self> {
        let gens = values
            .into_iter()
            .enumerate()
            .map(|(i, value)| Generator {
                name: format!("h{}", i + 1),
                value,
                twist: ZhatApprox::zero(),
            })
            .collect();
        CoverPresentation::new(gens, 1, denominator_bound)
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> Result<&Generator> {
        self.generators
            .get(j)
            .ok_or_else(|| Error::Malformed(format!("no generator at position {j}")))
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::Malformed(format!("unknown generator {name:?}")))
    }

    pub fn kernel_multiple(&self) -> i64 {
        self.kernel_multiple
    }

    pub fn denominator_bound(&self) -> u64 {
        self.denominator_bound
    }

    /// Copy with twist `z` on generator `j`.
    pub fn with_twist(&self, j: usize, z: ZhatApprox) -> Result<Self> {
        let mut out = self.clone();
        out.generators
            .get_mut(j)
            .ok_or_else(|| Error::Malformed(format!("no generator at position {j}")))?
            .twist = z;
        Ok(out)
    }

    pub fn with_kernel_multiple(&self, s: i64) -> Result<Self> {
        CoverPresentation::new(self.generators.clone(), s, self.denominator_bound)
    }

    /// `ex(h_j/n)`, lifting the twist canonically when `n` is not recorded.
    pub fn root(&self, j: usize, n: u64) -> Result<MulValue> {
        if n == 0 {
            return Err(Error::DivisionByZero);
        }
        let g = self.generator(j)?;
        let base = g.value.to_value().scale_raw(&BigRational::new(BigInt::one(), n.into()));
        let t = g.twist.lift_residue(n);
        Ok(base.mul(&MulValue::root_of_unity(BigRational::new(t.into(), n.into()))))
    }

    /// `ex(q·h_j)`.
    pub fn fraction_root(&self, j: usize, q: &BigRational) -> Result<MulValue> {
        let d = q
            .denom()
            .to_u64()
            .ok_or_else(|| Error::BudgetExceeded(format!("denominator of {q}")))?;
        let a = q
            .numer()
            .to_i64()
            .ok_or_else(|| Error::BudgetExceeded(format!("numerator of {q}")))?;
        Ok(self.root(j, d)?.pow(a))
    }

    /// `ex(v/n)`.
    pub fn element_root(&self, v: &HElement, n: u64) -> Result<MulValue> {
        if n == 0 {
            return Err(Error::DivisionByZero);
        }
        let inv_n = BigRational::new(BigInt::one(), n.into());
        let mut out = MulValue::root_of_unity(&v.kernel * &inv_n);
        for (j, q) in &v.gens {
            out = out.mul(&self.fraction_root(*j, &(q * &inv_n))?);
        }
        Ok(out)
    }

    /// `ex(v)`, together with the presentation whose root table now records
    /// every root the evaluation touched.
    pub fn eval_ex(&self, v: &HElement, budgets: &Budgets) -> Result<(MulValue, CoverPresentation)> {
        let mut out = self.clone();
        for (j, q) in &v.gens {
            let d = q.denom();
            if d > &BigInt::from(budgets.denominator) {
                return Err(Error::BudgetExceeded(format!(
                    "root denominator {d} exceeds the budget of {}",
                    budgets.denominator
                )));
            }
            let d = d.to_u64().expect("bounded by the budget");
            let g = out
                .generators
                .get_mut(*j)
                .ok_or_else(|| Error::Malformed(format!("no generator at position {j}")))?;
            g.twist = g.twist.extend_to(d)?;
            out.denominator_bound = out.denominator_bound.max(d);
        }
        let value = self.element_root(v, 1)?;
        Ok((value, out))
    }

    /// Records every root `h_j/n` with `n ≤ bound`.
    pub fn materialize(&self, bound: u64) -> Result<Self> {
        let level = lcm_upto(bound)?;
        let mut out = self.clone();
        for g in &mut out.generators {
            g.twist = g.twist.extend_to(level)?;
        }
        out.denominator_bound = out.denominator_bound.max(bound);
        Ok(out)
    }

    /// Named coordinates, with `"kernel"` for the kernel direction.
    pub fn parse_element(&self, named: &BTreeMap<String, String>) -> Result<HElement> {
        let mut v = HElement::zero();
        for (k, q) in named {
            let q = parse_rational(q)?;
            if k == KERNEL_KEY {
                v.kernel += q;
            } else {
                *v.gens.entry(self.index_of(k)?).or_insert_with(BigRational::zero) += q;
            }
        }
        Ok(v.normalized())
    }

    pub fn format_element(&self, v: &HElement) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = v
            .gens
            .iter()
            .map(|(j, q)| (self.generators[*j].name.clone(), format_rational(q)))
            .collect();
        if !v.kernel.is_zero() {
            out.insert(KERNEL_KEY.into(), format_rational(&v.kernel));
        }
        out
    }

    /// `h1 − h2` is an integer multiple of the declared kernel generator.
    pub fn relation_e(&self, h1: &HElement, h2: &HElement) -> bool {
        let d = h1.sub(h2);
        d.gens.is_empty() && (&d.kernel / BigRational::from_integer(self.kernel_multiple.into())).is_integer()
    }

    /// `ex(h1) + ex(h2) = ex(h3)` in the field.
    pub fn relation_s(&self, h1: &HElement, h2: &HElement, h3: &HElement, budgets: &Budgets) -> Result<bool> {
        let vals = [
            self.element_root(h1, 1)?,
            self.element_root(h2, 1)?,
            self.element_root(h3, 1)?,
        ];
        if vals.iter().any(|v| v.has_symbols()) {
            return Err(Error::TranscendentalAddition);
        }
        additive_relation(&vals[0], &vals[1], &vals[2], budgets.conductor)
    }
}

/// `lcm(1, …, n)`.
pub fn lcm_upto(n: u64) -> Result<u64> {
    let mut l = 1u64;
    for k in 2..=n {
        let g = num_integer::gcd(l, k);
        l = (l / g)
            .checked_mul(k)
            .ok_or_else(|| Error::BudgetExceeded(format!("lcm(1..={n}) exceeds 64 bits")))?;
    }
    Ok(l)
}

/// Splits `v = c·ρ` with `ρ = Π p^{r_p}`, `r_p ∈ [0, 1/2)`, and `c` in the
/// cyclotomic closure. Distinct classes `ρ` are linearly independent over
/// the cyclotomic closure, so sums are compared class by class.
fn kummer_class(v: &MulValue) -> (BTreeMap<Atom, BigRational>, MulValue) {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let class: BTreeMap<Atom, BigRational> = v
        .exps()
        .iter()
        .map(|(a, e)| (a.clone(), e - (e / &half).floor() * &half))
        .filter(|(_, r)| !r.is_zero())
        .collect();
    let rho = MulValue::from_parts(BigRational::zero(), class.clone());
    (class, v.div(&rho))
}

/// Decides `x + y = z` for values of the algebraic fragment.
pub fn additive_relation(x: &MulValue, y: &MulValue, z: &MulValue, bound: u64) -> Result<bool> {
    let mut classes: BTreeMap<BTreeMap<Atom, BigRational>, Vec<(CyclotomicElement, bool)>> = BTreeMap::new();
    for (v, positive) in [(x, true), (y, true), (z, false)] {
        if v.has_symbols() {
            return Err(Error::TranscendentalAddition);
        }
        let (class, coeff) = kummer_class(v);
        let c = coeff.to_cyclotomic(bound).map_err(|e| match e {
            Error::BoundExceeded { .. } => Error::UnsupportedValueShape(format!("{v} needs a conductor above {bound}")),
            other => other,
        })?;
        classes.entry(class).or_default().push((c, positive));
    }
    for terms in classes.values() {
        let n = terms.iter().fold(1u64, |acc, (c, _)| lcm(acc, c.conductor()));
        if n > bound {
            return Err(Error::UnsupportedValueShape(format!(
                "common conductor {n} exceeds {bound}"
            )));
        }
        let mut sum = CyclotomicElement::zero(n);
        for (c, positive) in terms {
            let c = c.embed(n)?;
            sum = if *positive { sum.add(&c)? } else { sum.sub(&c)? };
        }
        if !sum.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One step of a back-and-forth run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub direction: &'static str,
    pub generator: String,
    pub image: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilizing_m: Option<u64>,
}

/// An isomorphism between sub-covers: a linear map defined on the span of
/// the committed pairs and `Q·κ`, and a field automorphism `σ` certified to
/// intertwine the two `ex` maps on every root of denominator up to `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialIso {
    pub domain: CoverPresentation,
    pub codomain: CoverPresentation,
    /// Committed pairs `(u, L(u))`.
    pub pairs: Vec<(HElement, HElement)>,
    /// `L(κ) = kernel_sign·κ'`.
    pub kernel_sign: i64,
    pub rename: BTreeMap<String, String>,
    pub sigma: FragmentAutomorphism,
    pub bound: u64,
    level: u64,
    pub steps: Vec<StepRecord>,
}

#[derive(Serialize)]
struct IsoRepr<'a> {
    linear_map: Vec<PairRepr>,
    kernel_sign: i64,
    field_map: &'a FragmentAutomorphism,
    verified_to: u64,
    steps: &'a [StepRecord],
}

#[derive(Serialize)]
struct PairRepr {
    from: BTreeMap<String, String>,
    to: BTreeMap<String, String>,
}

impl Serialize for PartialIso {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IsoRepr {
            linear_map: self
                .pairs
                .iter()
                .map(|(u, v)| PairRepr {
                    from: self.domain.format_element(u),
                    to: self.codomain.format_element(v),
                })
                .collect(),
            kernel_sign: self.kernel_sign,
            field_map: &self.sigma,
            verified_to: self.bound,
            steps: &self.steps,
        }
        .serialize(s)
    }
}

fn coordinates(v: &HElement, n: usize) -> Vec<BigRational> {
    (0..n)
        .map(|j| v.gens.get(&j).cloned().unwrap_or_else(BigRational::zero))
        .collect()
}

/// Coefficients expressing `target` through `basis`, ignoring the kernel.
fn span_solve(basis: &[&HElement], target: &HElement, n: usize) -> Option<Vec<BigRational>> {
    let cols: Vec<Vec<BigRational>> = basis.iter().map(|b| coordinates(b, n)).collect();
    if n == 0 {
        return Some(vec![BigRational::zero(); basis.len()]);
    }
    solve_rational(&cols, &coordinates(target, n))
}

impl PartialIso {
    /// The iso defined on `Q·κ` alone.
    pub fn empty(domain: &CoverPresentation, codomain: &CoverPresentation, budgets: &Budgets) -> Result<Self> {
        let (s1, s2) = (domain.kernel_multiple, codomain.kernel_multiple);
        if s2 % s1 != 0 || (s2 / s1).abs() != 1 {
            return Err(Error::SignatureMismatch(format!(
                "kernel generators {s1}·κ and {s2}·κ' cannot correspond"
            )));
        }
        let bound = domain.denominator_bound.max(codomain.denominator_bound);
        if bound > budgets.denominator {
            return Err(Error::BudgetExceeded(format!(
                "denominator bound {bound} exceeds the budget of {}",
                budgets.denominator
            )));
        }
        let level = lcm(lcm_upto(bound)?, 2);
        let mut iso = PartialIso {
            domain: domain.materialize(bound)?,
            codomain: codomain.materialize(bound)?,
            pairs: Vec::new(),
            kernel_sign: s2 / s1,
            rename: BTreeMap::new(),
            sigma: FragmentAutomorphism::identity(),
            bound,
            level,
            steps: Vec::new(),
        };
        iso.sigma = iso
            .solve(None)?
            .ok_or_else(|| Error::NoConjugateChoice("no automorphism realizes the kernel map".into()))?
            .0;
        Ok(iso)
    }

    fn pin(&self) -> RootPin {
        RootPin::Congruent {
            modulus: self.level,
            residue: self.kernel_sign.rem_euclid(self.level as i64) as u64,
        }
    }

    fn commitments(&self) -> Result<Vec<(MulValue, MulValue)>> {
        self.pairs
            .iter()
            .map(|(u, v)| {
                Ok((
                    self.domain.element_root(u, self.level)?,
                    self.codomain.element_root(v, self.level)?,
                ))
            })
            .collect()
    }

    /// Solves for `σ` on the commitments plus an optional extra pair whose
    /// target may carry a free shift.
    fn solve(
        &self,
        extra: Option<(MulValue, MulValue, Option<u64>)>,
    ) -> Result<Option<(FragmentAutomorphism, BigInt)>> {
        let mut pairs = self.commitments()?;
        let mut shifts = vec![None; pairs.len()];
        if let Some((x, y, d)) = extra {
            pairs.push((x, y));
            shifts.push(d);
        }
        Ok(find_automorphism_shifted(&pairs, &shifts, self.pin(), &self.rename)?
            .map(|(s, ns)| (s, ns.last().cloned().unwrap_or_else(BigInt::zero))))
    }

    fn domain_span_contains(&self, j: usize) -> bool {
        let basis: Vec<&HElement> = self.pairs.iter().map(|(u, _)| u).collect();
        span_solve(&basis, &HElement::generator(j), self.domain.len()).is_some()
    }

    pub fn codomain_span_contains(&self, j: usize) -> bool {
        let basis: Vec<&HElement> = self.pairs.iter().map(|(_, v)| v).collect();
        span_solve(&basis, &HElement::generator(j), self.codomain.len()).is_some()
    }

    /// `L(v)` for `v` in the domain of the partial map.
    pub fn linear_map(&self, v: &HElement) -> Result<HElement> {
        let basis: Vec<&HElement> = self.pairs.iter().map(|(u, _)| u).collect();
        let coeffs = span_solve(&basis, v, self.domain.len())
            .ok_or_else(|| Error::Malformed(format!("{v} is outside the domain of the partial map")))?;
        let mut out = HElement::kernel(&v.kernel * BigRational::from_integer(self.kernel_sign.into()));
        let mut from_pairs_kernel = BigRational::zero();
        for (c, (u, w)) in coeffs.iter().zip(&self.pairs) {
            out = out.add(&w.scale(c));
            from_pairs_kernel += c * &u.kernel;
        }
        // the pairs already carry their own kernel parts
        Ok(out.sub(&HElement::kernel(
            from_pairs_kernel * BigRational::from_integer(self.kernel_sign.into()),
        )))
    }

    /// Checks every committed pair and the kernel at every level up to the bound.
    pub fn verify(&self) -> Result<()> {
        if self.kernel_sign * self.domain.kernel_multiple != self.codomain.kernel_multiple {
            return Err(Error::SignatureMismatch("kernel generators do not correspond".into()));
        }
        for n in 1..=self.bound {
            let e = MulValue::root_of_unity(BigRational::new(BigInt::one(), n.into()));
            let img = self.sigma.apply(&e)?;
            if img != e.pow(self.kernel_sign) {
                return Err(Error::NoConjugateChoice(format!("σ(e(1/{n})) = {img}")));
            }
            for (u, v) in &self.pairs {
                let lhs = self.sigma.apply(&self.domain.element_root(u, n)?)?;
                let rhs = self.codomain.element_root(v, n)?;
                if lhs != rhs {
                    return Err(Error::NoConjugateChoice(format!(
                        "σ(ex({u}/{n})) = {lhs} but ex({v}/{n}) = {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn commit(
        &self,
        j: usize,
        image: HElement,
        sigma: FragmentAutomorphism,
        rename: BTreeMap<String, String>,
        stabilizing: Option<u64>,
    ) -> Result<Self> {
        let mut out = self.clone();
        out.steps.push(StepRecord {
            direction: "forth",
            generator: self.domain.generators[j].name.clone(),
            image: self.codomain.format_element(&image),
            stabilizing_m: stabilizing,
        });
        out.pairs.push((HElement::generator(j), image));
        out.rename = rename;
        out.sigma = sigma;
        out.verify()?;
        Ok(out)
    }

    /// Extends the map to domain generator `j`, choosing its image.
    pub fn backforth_extend(&self, j: usize) -> Result<Self> {
        if self.domain_span_contains(j) {
            return Ok(self.clone());
        }
        let x = self.domain.root(j, self.level)?;
        match &self.domain.generator(j)?.value {
            GeneratorValue::Symbol(t) => {
                let used: BTreeSet<&String> = self.rename.values().collect();
                let target = (0..self.codomain.len()).find(|&i| match &self.codomain.generators[i].value {
                    GeneratorValue::Symbol(s) => !used.contains(s) && !self.codomain_span_contains(i),
                    GeneratorValue::Rational(_) => false,
                });
                let Some(i) = target else {
                    return Err(Error::NoConjugateChoice(format!(
                        "no free transcendental generator for {t}"
                    )));
                };
                let GeneratorValue::Symbol(s) = &self.codomain.generators[i].value else {
                    unreachable!()
                };
                let mut rename = self.rename.clone();
                rename.insert(t.clone(), s.clone());
                let probe = PartialIso {
                    rename: rename.clone(),
                    ..self.clone()
                };
                let y = self.codomain.root(i, self.level)?;
                let (sigma, _) = probe
                    .solve(Some((x, y, None)))?
                    .ok_or_else(|| Error::NoConjugateChoice(format!("{t} cannot be sent to {s}")))?;
                self.commit(j, HElement::generator(i), sigma, rename, None)
            }
            GeneratorValue::Rational(b) => {
                let start = self.preimage_candidate(b)?;
                let y = self.codomain.element_root(&start, self.level)?;
                let (sigma, n) = self.solve(Some((x, y, Some(self.level))))?.ok_or_else(|| {
                    Error::NoConjugateChoice(format!("no root of {b} is conjugate to the chosen one"))
                })?;
                let image = start.add(&HElement::kernel(BigRational::from_integer(n)));
                let m = stabilizing_m(std::slice::from_ref(b)).ok().map(|(m, _)| m);
                self.commit(j, image, sigma, self.rename.clone(), m)
            }
        }
    }

    /// Extends the map to domain generator `j` with a prescribed image.
    pub fn backforth_extend_to(&self, j: usize, image: &HElement) -> Result<Self> {
        let x = self.domain.root(j, self.level)?;
        let y = self.codomain.element_root(image, self.level)?;
        let (sigma, _) = self.solve(Some((x, y, None)))?.ok_or_else(|| {
            Error::NoConjugateChoice(format!("no automorphism sends h{j} to {image} over the committed data"))
        })?;
        self.commit(j, image.clone(), sigma, self.rename.clone(), None)
    }

    /// A codomain element lying over the rational `b`.
    fn preimage_candidate(&self, b: &FactoredRational) -> Result<HElement> {
        let rational: Vec<(usize, &FactoredRational)> = self
            .codomain
            .generators
            .iter()
            .enumerate()
            .filter_map(|(i, g)| match &g.value {
                GeneratorValue::Rational(c) => Some((i, c)),
                GeneratorValue::Symbol(_) => None,
            })
            .collect();
        let support: BTreeSet<BigInt> = rational
            .iter()
            .flat_map(|(_, c)| c.primes().cloned())
            .chain(b.primes().cloned())
            .collect();
        let vec_of = |c: &FactoredRational| -> Vec<BigRational> {
            support
                .iter()
                .map(|p| BigRational::from_integer(c.exponent(p).into()))
                .collect()
        };
        let cols: Vec<Vec<BigRational>> = rational.iter().map(|(_, c)| vec_of(c)).collect();
        let coeffs = if support.is_empty() {
            Some(vec![BigRational::zero(); cols.len()])
        } else {
            solve_rational(&cols, &vec_of(b))
        }
        .ok_or_else(|| Error::NoConjugateChoice(format!("{b} does not lie in the codomain fragment")))?;
        let mut v = HElement::zero();
        for ((i, _), q) in rational.iter().zip(coeffs) {
            if !q.is_zero() {
                v.gens.insert(*i, q);
            }
        }
        let off = self.codomain.element_root(&v, 1)?.div(&MulValue::from_factored(b));
        debug_assert!(off.is_torsion());
        Ok(v.sub(&HElement::kernel(off.torsion().clone())))
    }

    /// The inverse partial map, with `σ^{-1}` re-solved on the swapped pairs.
    pub fn inverse(&self) -> Result<Self> {
        let mut inv = PartialIso {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            pairs: Vec::new(),
            kernel_sign: self.kernel_sign,
            rename: self.rename.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            sigma: self.sigma.clone(),
            bound: self.bound,
            level: self.level,
            steps: self.steps.clone(),
        };
        for (u, v) in &self.pairs {
            inv.pairs.push((v.clone(), u.clone()));
        }
        inv.sigma = inv
            .solve(None)?
            .ok_or_else(|| Error::NoConjugateChoice("the inverse automorphism does not exist".into()))?
            .0;
        Ok(inv)
    }

    /// A back step: brings codomain generator `j` into the image.
    pub fn back_extend(&self, j: usize) -> Result<Self> {
        if self.codomain_span_contains(j) {
            return Ok(self.clone());
        }
        let mut out = self.inverse()?.backforth_extend(j)?.inverse()?;
        if let Some(last) = out.steps.last_mut() {
            last.direction = "back";
        }
        Ok(out)
    }
}

/// Builds an isomorphism between two presentations by alternating forth
/// steps on domain generators with back steps on codomain generators.
pub fn build_isomorphism(p1: &CoverPresentation, p2: &CoverPresentation, budgets: &Budgets) -> Result<PartialIso> {
    let count = |p: &CoverPresentation| p.generators.iter().filter(|g| g.value.is_symbol()).count();
    if p1.len() != p2.len() || count(p1) != count(p2) {
        return Err(Error::SignatureMismatch(format!(
            "{} generators ({} transcendental) against {} ({})",
            p1.len(),
            count(p1),
            p2.len(),
            count(p2)
        )));
    }
    let mut iso = PartialIso::empty(p1, p2, budgets)?;
    for j in 0..p1.len() {
        iso = iso.backforth_extend(j)?;
        iso = iso.back_extend(j)?;
    }
    for j in 0..p2.len() {
        if !iso.codomain_span_contains(j) {
            return Err(Error::SignatureMismatch(format!(
                "codomain generator {} is not reached",
                p2.generators[j].name
            )));
        }
    }
    iso.verify()?;
    Ok(iso)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn rat(x: i64) -> GeneratorValue {
        GeneratorValue::Rational(FactoredRational::from_i64(x).unwrap())
    }

    fn pres(values: Vec<GeneratorValue>, bound: u64) -> CoverPresentation {
        CoverPresentation::canonical(values, bound).unwrap()
    }

    fn sqrt2() -> MulValue {
        MulValue::canonical_root(&FactoredRational::from_i64(2).unwrap(), 2)
    }

    #[test]
    fn roots_follow_the_twist() {
        let p = pres(vec![rat(2)], 2);
        let half = HElement::generator(0).scale(&q(1, 2));
        let (v, p2) = p.eval_ex(&half, &Budgets::default()).unwrap();
        assert_eq!(v, sqrt2());
        assert_eq!(p2.generator(0).unwrap().twist.modulus(), 2);
        let twisted = p.with_twist(0, ZhatApprox::new(2, 1).unwrap()).unwrap();
        assert_eq!(
            twisted.eval_ex(&half, &Budgets::default()).unwrap().0,
            sqrt2().mul(&MulValue::root_of_unity(q(1, 2)))
        );
        let tight = Budgets {
            denominator: 4,
            ..Budgets::default()
        };
        let eighth = HElement::generator(0).scale(&q(1, 8));
        assert!(matches!(p.eval_ex(&eighth, &tight), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn coherent_powers() {
        let p = pres(vec![rat(-3)], 6)
            .with_twist(0, ZhatApprox::new(12, 7).unwrap())
            .unwrap();
        for n in [1u64, 2, 3, 4, 6, 12] {
            for d in [1u64, 2, 3, 4, 6, 12] {
                if n % d == 0 {
                    assert_eq!(p.root(0, n).unwrap().pow((n / d) as i64), p.root(0, d).unwrap());
                }
            }
        }
    }

    #[test]
    fn relation_e_uses_the_declared_kernel_generator() {
        let p = pres(vec![rat(2)], 2);
        let h = HElement::generator(0);
        let k = |x: i64| HElement::kernel(q(x, 1));
        assert!(p.relation_e(&h, &h.add(&k(1))));
        assert!(!p.relation_e(&h, &h.add(&HElement::kernel(q(1, 2)))));
        let p2 = p.with_kernel_multiple(2).unwrap();
        assert!(!p2.relation_e(&h, &h.add(&k(1))));
        assert!(p2.relation_e(&h, &h.add(&k(2))));
    }

    #[test]
    fn relation_s_examples() {
        let b = Budgets::default();
        let p = pres(vec![rat(2)], 3);
        let zero = HElement::zero();
        let h = HElement::generator(0);
        assert!(p.relation_s(&zero, &zero, &h, &b).unwrap());
        assert!(!p.relation_s(&zero, &zero, &zero, &b).unwrap());
        let r = h.scale(&q(1, 2));
        assert!(p.relation_s(&r, &r, &h.scale(&q(3, 2)), &b).unwrap());
        let z3 = HElement::kernel(q(1, 3));
        assert!(p
            .relation_s(&z3, &z3.scale(&q(2, 1)), &HElement::kernel(q(1, 2)), &b)
            .unwrap());
        let t = pres(vec![GeneratorValue::Symbol("t1".into())], 1);
        assert_eq!(
            t.relation_s(&HElement::generator(0), &zero, &zero, &b),
            Err(Error::TranscendentalAddition)
        );
    }

    #[test]
    fn presentations_are_validated() {
        assert!(matches!(
            CoverPresentation::canonical(vec![rat(2), rat(8)], 2),
            Err(Error::InvalidPresentation(_))
        ));
        assert!(matches!(
            CoverPresentation::canonical(vec![rat(-1)], 2),
            Err(Error::InvalidPresentation(_))
        ));
        let json = r#"{"generators":[{"name":"a","value":{"rational":"2"}}],"denominator_bound":4,
            "ex_table":[{"generator":"a","den":2,"twist":1},{"generator":"a","den":4,"twist":3}]}"#;
        let p: CoverPresentation = serde_json::from_str(json).unwrap();
        assert_eq!(p.generator(0).unwrap().twist, ZhatApprox::new(4, 3).unwrap());
        let bad = r#"{"generators":[{"name":"a","value":{"rational":"2"}}],
            "ex_table":[{"generator":"a","den":2,"twist":1},{"generator":"a","den":4,"twist":2}]}"#;
        assert!(serde_json::from_str::<CoverPresentation>(bad).is_err());
        let back: CoverPresentation = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn both_square_roots_are_reachable_without_roots_of_unity() {
        let dom = pres(vec![rat(2)], 2);
        let cod = pres(vec![rat(2)], 2);
        let iso = PartialIso::empty(&dom, &cod, &Budgets::default()).unwrap();
        for shift in [0, 1] {
            let target = HElement::generator(0).add(&HElement::kernel(q(shift, 1)));
            assert!(iso.backforth_extend_to(0, &target).is_ok());
        }
    }

    #[test]
    fn zeta8_pins_the_square_root() {
        let dom = pres(vec![rat(2)], 8);
        let cod = pres(vec![rat(2)], 8);
        let iso = PartialIso::empty(&dom, &cod, &Budgets::default()).unwrap();
        let ok = iso.backforth_extend_to(0, &HElement::generator(0));
        let flipped = HElement::generator(0).add(&HElement::kernel(q(1, 1)));
        let bad = iso.backforth_extend_to(0, &flipped);
        assert!(ok.is_ok());
        assert!(matches!(bad, Err(Error::NoConjugateChoice(_))));
    }

    #[test]
    fn opposite_square_root_choices_are_isomorphic() {
        let p1 = pres(vec![rat(2)], 8);
        let p2 = p1.with_twist(0, ZhatApprox::new(2, 1).unwrap()).unwrap();
        let iso = build_isomorphism(&p1, &p2, &Budgets::default()).unwrap();
        iso.verify().unwrap();
        let image = iso.linear_map(&HElement::generator(0)).unwrap();
        // the image differs from the codomain generator by an odd kernel shift
        let d = image.sub(&HElement::generator(0));
        assert!(d.gens.is_empty() && d.kernel.is_integer() && d.kernel.to_integer().is_odd());
        assert_eq!(iso.codomain.element_root(&image.scale(&q(1, 2)), 1).unwrap(), sqrt2());
    }

    #[test]
    fn symbols_and_rationals_together() {
        let p1 = pres(vec![GeneratorValue::Symbol("t".into()), rat(3), rat(-5)], 6);
        let p2 = CoverPresentation::new(
            vec![
                Generator {
                    name: "a".into(),
                    value: rat(-5),
                    twist: ZhatApprox::new(60, 17).unwrap(),
                },
                Generator {
                    name: "b".into(),
                    value: GeneratorValue::Symbol("s".into()),
                    twist: ZhatApprox::new(6, 5).unwrap(),
                },
                Generator {
                    name: "c".into(),
                    value: rat(3),
                    twist: ZhatApprox::new(4, 3).unwrap(),
                },
            ],
            -1,
            6,
        );
        let iso = build_isomorphism(&p1, &p2.unwrap(), &Budgets::default()).unwrap();
        assert_eq!(iso.kernel_sign, -1);
        assert_eq!(iso.rename.get("t").map(String::as_str), Some("s"));
        iso.verify().unwrap();
        // the linear map respects ex on a random-looking combination
        let v = HElement::generator(0)
            .scale(&q(5, 6))
            .add(&HElement::generator(1).scale(&q(-1, 3)))
            .add(&HElement::generator(2).scale(&q(1, 2)))
            .add(&HElement::kernel(q(1, 6)));
        let lhs = iso.sigma.apply(&iso.domain.element_root(&v, 1).unwrap()).unwrap();
        let rhs = iso.codomain.element_root(&iso.linear_map(&v).unwrap(), 1).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn signature_mismatches() {
        let p1 = pres(vec![rat(2)], 4);
        let p2 = p1.with_kernel_multiple(2).unwrap();
        assert!(matches!(
            build_isomorphism(&p1, &p2, &Budgets::default()),
            Err(Error::SignatureMismatch(_))
        ));
        let p3 = pres(vec![GeneratorValue::Symbol("t".into())], 4);
        assert!(matches!(
            build_isomorphism(&p1, &p3, &Budgets::default()),
            Err(Error::SignatureMismatch(_))
        ));
        // 2 is not in the fragment generated by 3
        let p4 = pres(vec![rat(3)], 4);
        assert!(matches!(
            build_isomorphism(&p1, &p4, &Budgets::default()),
            Err(Error::NoConjugateChoice(_))
        ));
    }
}
