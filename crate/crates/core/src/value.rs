//! Elements of the multiplicative fragment generated by roots of unity,
//! radicals of positive rationals and formal transcendental symbols.
//!
//! A value is stored as `e(t) · Π atom^{a}` where `e(t) = exp(2πi t)` with
//! `t ∈ [0, 1)`, every prime power is the positive real root, and every symbol
//! power refers to a fixed coherent root system of that symbol. This
//! representation is unique, so equality of values is syntactic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cyclotomic::{sqrt_in_cyclotomic, CyclotomicElement};
use crate::factored::{format_rational, parse_rational, FactoredRational};
use crate::lattice::Atom;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MulValue {
    torsion: BigRational,
    exps: BTreeMap<Atom, BigRational>,
}

/// Fractional part in `[0, 1)`.
pub fn frac(q: &BigRational) -> BigRational {
    q - q.floor()
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl MulValue {
    pub fn one() -> Self {
        MulValue {
            torsion: BigRational::zero(),
            exps: BTreeMap::new(),
        }
    }

    /// The root of unity `e(t)`.
    pub fn root_of_unity(t: BigRational) -> Self {
        MulValue {
            torsion: frac(&t),
            exps: BTreeMap::new(),
        }
    }

    pub fn from_factored(a: &FactoredRational) -> Self {
        MulValue {
            torsion: if a.sign() == -1 {
                ratio(1, 2)
            } else {
                BigRational::zero()
            },
            exps: a
                .factors()
                .iter()
                .map(|(p, e)| (Atom::Prime(p.clone()), BigRational::from_integer(BigInt::from(*e))))
                .collect(),
        }
    }

    pub fn symbol(name: &str) -> Self {
        let mut exps = BTreeMap::new();
        exps.insert(Atom::Symbol(name.to_string()), BigRational::one());
        MulValue {
            torsion: BigRational::zero(),
            exps,
        }
    }

    pub fn from_parts(torsion: BigRational, exps: BTreeMap<Atom, BigRational>) -> Self {
        MulValue {
            torsion: frac(&torsion),
            exps: exps.into_iter().filter(|(_, e)| !e.is_zero()).collect(),
        }
    }

    /// The canonical `m`-th root of `b`: the positive real root for `b > 0`,
    /// the root of argument `π/m` for `b < 0`.
    pub fn canonical_root(b: &FactoredRational, m: u64) -> Self {
        Self::from_factored(b).scale_raw(&BigRational::new(BigInt::one(), BigInt::from(m)))
    }

    /// Multiplies the stored torsion angle and all exponents by `q`, without
    /// first reducing the angle. On `from_factored` values this realizes the
    /// canonical root convention.
    pub fn scale_raw(&self, q: &BigRational) -> Self {
        Self::from_parts(
            &self.torsion * q,
            self.exps.iter().map(|(a, e)| (a.clone(), e * q)).collect(),
        )
    }

    pub fn torsion(&self) -> &BigRational {
        &self.torsion
    }

    pub fn exps(&self) -> &BTreeMap<Atom, BigRational> {
        &self.exps
    }

    pub fn exponent(&self, a: &Atom) -> BigRational {
        self.exps.get(a).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_one(&self) -> bool {
        self.torsion.is_zero() && self.exps.is_empty()
    }

    pub fn is_torsion(&self) -> bool {
        self.exps.is_empty()
    }

    /// Order of the torsion factor `e(t)`.
    pub fn torsion_order(&self) -> u64 {
        self.torsion.denom().to_u64().expect("torsion order fits in 64 bits")
    }

    pub fn has_symbols(&self) -> bool {
        self.exps.keys().any(|a| matches!(a, Atom::Symbol(_)))
    }

    /// lcm of the denominators of all atom exponents.
    pub fn exponent_denominator(&self) -> u64 {
        self.exps
            .values()
            .fold(1u64, |acc, e| acc.lcm(&e.denom().to_u64().expect("denominator fits")))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (a, e) in &other.exps {
            *exps.entry(a.clone()).or_insert_with(BigRational::zero) += e;
        }
        Self::from_parts(&self.torsion + &other.torsion, exps)
    }

    pub fn pow(&self, k: i64) -> Self {
        let k = BigRational::from_integer(BigInt::from(k));
        Self::from_parts(
            &self.torsion * &k,
            self.exps.iter().map(|(a, e)| (a.clone(), e * &k)).collect(),
        )
    }

    pub fn inv(&self) -> Self {
        self.pow(-1)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    /// The value as a rational number, if it is one.
    pub fn as_rational(&self) -> Option<BigRational> {
        let sign = if self.torsion.is_zero() {
            1
        } else if self.torsion == ratio(1, 2) {
            -1
        } else {
            return None;
        };
        let mut q = BigRational::from_integer(BigInt::from(sign));
        for (a, e) in &self.exps {
            let Atom::Prime(p) = a else { return None };
            if !e.is_integer() {
                return None;
            }
            let k = e.to_integer().to_i32()?;
            q *= BigRational::from_integer(p.clone()).pow(k);
        }
        Some(q)
    }

    /// Renames symbol atoms.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Self {
        Self::from_parts(
            self.torsion.clone(),
            self.exps
                .iter()
                .map(|(a, e)| match a {
                    Atom::Symbol(s) => (
                        Atom::Symbol(map.get(s).cloned().unwrap_or_else(|| s.clone())),
                        e.clone(),
                    ),
                    other => (other.clone(), e.clone()),
                })
                .collect(),
        )
    }

    /// Exact image in a cyclotomic field, available when the value is a root
    /// of unity times a rational times square roots of primes.
    pub fn to_cyclotomic(&self, bound: u64) -> Result<CyclotomicElement> {
        let mut rational = BigRational::one();
        let mut kernel = BigInt::one();
        for (a, e) in &self.exps {
            let Atom::Prime(p) = a else {
                return Err(Error::TranscendentalAddition);
            };
            let twice = e * BigRational::from_integer(BigInt::from(2));
            if !twice.is_integer() {
                return Err(Error::UnsupportedValueShape(format!(
                    "{self} is not in a cyclotomic field"
                )));
            }
            let t = twice.to_integer();
            let (half, odd) = t.div_mod_floor(&BigInt::from(2));
            rational *= BigRational::from_integer(p.clone()).pow(
                half.to_i32()
                    .ok_or_else(|| Error::UnsupportedValueShape("exponent too large".into()))?,
            );
            if odd.is_one() {
                kernel *= p;
            }
        }
        let (cond, w) = sqrt_in_cyclotomic(&kernel, bound)?;
        let ord = self.torsion_order();
        let n = num_integer::lcm(cond, ord);
        if n > bound {
            return Err(Error::BoundExceeded {
                what: "conductor",
                value: n,
                bound,
            });
        }
        let zeta = CyclotomicElement::root_of_unity(n, self.torsion.numer().to_i64().unwrap(), ord)?;
        Ok(w.embed(n)?.mul(&zeta)?.scale(&rational))
    }
}

/// A tuple of named roots `b_i^{1/m} · ζ_m^{t_i}` relative to the canonical roots.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadicalTuple {
    pub bases: Vec<FactoredRational>,
    pub m: u64,
    pub twists: Vec<u64>,
}

impl RadicalTuple {
    pub fn new(bases: Vec<FactoredRational>, m: u64, twists: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Malformed("root denominator must be positive".into()));
        }
        if twists.len() != bases.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} bases but {} twists",
                bases.len(),
                twists.len()
            )));
        }
        let twists = twists.into_iter().map(|t| t % m).collect();
        Ok(RadicalTuple { bases, m, twists })
    }

    pub fn canonical(bases: Vec<FactoredRational>, m: u64) -> Self {
        let twists = vec![0; bases.len()];
        RadicalTuple { bases, m, twists }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn value(&self, i: usize) -> MulValue {
        MulValue::canonical_root(&self.bases[i], self.m).mul(&MulValue::root_of_unity(BigRational::new(
            BigInt::from(self.twists[i]),
            BigInt::from(self.m),
        )))
    }

    pub fn values(&self) -> Vec<MulValue> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// The twist naming `x` as an `m`-th root of `b`, if `x^m = b`.
    pub fn twist_of(b: &FactoredRational, m: u64, x: &MulValue) -> Option<u64> {
        let q = x.div(&MulValue::canonical_root(b, m));
        if !q.is_torsion() {
            return None;
        }
        let t = q.torsion() * BigRational::from_integer(BigInt::from(m));
        t.is_integer().then(|| t.to_integer().to_u64().unwrap())
    }
}

impl fmt::Display for MulValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.torsion.is_zero() {
            parts.push(format!("e({})", format_rational(&self.torsion)));
        }
        for (a, e) in &self.exps {
            if e.is_one() {
                parts.push(a.to_string());
            } else {
                parts.push(format!("{a}^({})", format_rational(e)));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

impl Serialize for MulValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            torsion: String,
            exps: BTreeMap<String, String>,
        }
        Repr {
            torsion: format_rational(&self.torsion),
            exps: self
                .exps
                .iter()
                .map(|(a, e)| (a.to_string(), format_rational(e)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MulValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            torsion: String,
            exps: BTreeMap<String, String>,
        }
        let r = Repr::deserialize(d)?;
        let torsion = parse_rational(&r.torsion).map_err(D::Error::custom)?;
        let mut exps = BTreeMap::new();
        for (k, v) in r.exps {
            let atom: Atom = serde_json_atom(&k).map_err(D::Error::custom)?;
            exps.insert(atom, parse_rational(&v).map_err(D::Error::custom)?);
        }
        Ok(MulValue::from_parts(torsion, exps))
    }
}

fn serde_json_atom(s: &str) -> std::result::Result<Atom, String> {
    match s.parse::<BigInt>() {
        Ok(p) if p.is_positive() && crate::arith::is_prime_big(&p) == Some(true) => Ok(Atom::Prime(p)),
        Ok(p) => Err(format!("{p} is not prime")),
        Err(_) => Ok(Atom::Symbol(s.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: i64) -> FactoredRational {
        FactoredRational::from_i64(x).unwrap()
    }

    #[test]
    fn canonical_roots_are_coherent() {
        for b in [-12i64, -2, 2, 5, 18] {
            for m in [1u64, 2, 3, 4, 6] {
                for d in [1u64, 2, 3] {
                    let fine = MulValue::canonical_root(&f(b), m * d);
                    assert_eq!(fine.pow(d as i64), MulValue::canonical_root(&f(b), m));
                }
            }
        }
        assert_eq!(
            MulValue::canonical_root(&f(-1), 2),
            MulValue::root_of_unity(ratio(1, 4))
        );
    }

    #[test]
    fn cyclotomic_images_square_correctly() {
        for b in [-7i64, -3, -2, -1, 2, 3, 5, 6, 12] {
            let r = MulValue::canonical_root(&f(b), 2);
            let c = r.to_cyclotomic(512).unwrap();
            let sq = c.mul(&c).unwrap();
            assert_eq!(sq.as_rational(), Some(BigRational::from_integer(BigInt::from(b))));
        }
        let z = MulValue::root_of_unity(ratio(3, 8)).to_cyclotomic(512).unwrap();
        assert_eq!(z, CyclotomicElement::zeta_pow(8, 3));
        assert!(MulValue::symbol("t").to_cyclotomic(512).is_err());
    }

    #[test]
    fn rational_round_trip() {
        let v = MulValue::from_factored(&FactoredRational::from_i64(-12).unwrap());
        assert_eq!(v.as_rational(), Some(BigRational::from_integer(BigInt::from(-12))));
        assert_eq!(MulValue::canonical_root(&f(4), 2).as_rational(), Some(ratio(2, 1)));
        assert_eq!(MulValue::canonical_root(&f(2), 2).as_rational(), None);
    }

    #[test]
    fn json_round_trip() {
        let v = MulValue::canonical_root(&f(-2), 3).mul(&MulValue::symbol("t1"));
        let s = serde_json::to_string(&v).unwrap();
        let back: MulValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
