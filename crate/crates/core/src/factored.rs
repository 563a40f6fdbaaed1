//! Nonzero rationals stored as a sign and a prime-exponent map.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{is_prime_big, is_prime_u64, pollard_brent};
use crate::budget::{Budgets, TRIAL_DIVISION_BOUND};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactoredRational {
    sign: i8,
    factors: BTreeMap<BigInt, i64>,
}

impl FactoredRational {
    pub fn one() -> Self {
        FactoredRational {
            sign: 1,
            factors: BTreeMap::new(),
        }
    }

    pub fn minus_one() -> Self {
        FactoredRational {
            sign: -1,
            factors: BTreeMap::new(),
        }
    }

    /// Builds a value from trusted parts, checking primality of every key.
    pub fn from_parts(sign: i8, factors: BTreeMap<BigInt, i64>) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::Malformed(format!("sign must be +1 or -1, got {sign}")));
        }
        let mut clean = BTreeMap::new();
        for (p, e) in factors {
            if is_prime_big(&p) != Some(true) {
                return Err(Error::Malformed(format!("factor key {p} is not a certified prime")));
            }
            if e != 0 {
                clean.insert(p, e);
            }
        }
        Ok(FactoredRational { sign, factors: clean })
    }

    pub fn prime(p: u64) -> Self {
        debug_assert!(is_prime_u64(p));
        let mut factors = BTreeMap::new();
        factors.insert(BigInt::from(p), 1);
        FactoredRational { sign: 1, factors }
    }

    pub fn from_i64(n: i64) -> Result<Self> {
        factor_integer(&BigInt::from(n), &Budgets::default())
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn factors(&self) -> &BTreeMap<BigInt, i64> {
        &self.factors
    }

    pub fn exponent(&self, p: &BigInt) -> i64 {
        self.factors.get(p).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.sign == 1 && self.factors.is_empty()
    }

    /// True for the roots of unity of Q, namely 1 and -1.
    pub fn is_torsion(&self) -> bool {
        self.factors.is_empty()
    }

    /// gcd of all prime exponents; 0 for torsion values.
    pub fn exponent_gcd(&self) -> u64 {
        self.factors.values().fold(0u64, |g, e| g.gcd(&e.unsigned_abs()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (p, e) in &other.factors {
            let slot = factors.entry(p.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                factors.remove(p);
            }
        }
        FactoredRational {
            sign: self.sign * other.sign,
            factors,
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        if k == 0 {
            return Self::one();
        }
        let sign = if self.sign == -1 && k % 2 != 0 { -1 } else { 1 };
        FactoredRational {
            sign,
            factors: self.factors.iter().map(|(p, e)| (p.clone(), e * k)).collect(),
        }
    }

    pub fn inv(&self) -> Self {
        self.pow(-1)
    }

    pub fn abs(&self) -> Self {
        FactoredRational {
            sign: 1,
            factors: self.factors.clone(),
        }
    }

    /// Signed squarefree kernel: the squarefree integer `d` with `self = d * c^2`.
    pub fn squarefree_kernel(&self) -> BigInt {
        let mut d = BigInt::from(self.sign);
        for (p, e) in &self.factors {
            if e.rem_euclid(2) == 1 {
                d *= p;
            }
        }
        d
    }

    pub fn to_rational(&self) -> BigRational {
        let mut num = BigInt::from(self.sign);
        let mut den = BigInt::one();
        for (p, e) in &self.factors {
            let pe = num_traits::pow(p.clone(), e.unsigned_abs() as usize);
            if *e > 0 {
                num *= pe;
            } else {
                den *= pe;
            }
        }
        BigRational::new(num, den)
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigInt> {
        self.factors.keys()
    }
}

impl fmt::Display for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.to_rational()))
    }
}

/// Factors a nonzero rational exactly.
pub fn factor(q: &BigRational, budget: &Budgets) -> Result<FactoredRational> {
    if q.is_zero() {
        return Err(Error::ZeroInput);
    }
    let num = factor_integer(q.numer(), budget)?;
    let den = factor_integer(q.denom(), budget)?;
    Ok(num.mul(&den.inv()))
}

pub fn factor_integer(n: &BigInt, budget: &Budgets) -> Result<FactoredRational> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let sign = if n.is_negative() { -1 } else { 1 };
    let mut rest = n.abs();
    let mut factors = BTreeMap::new();

    let mut p = 2u64;
    while p <= TRIAL_DIVISION_BOUND {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0i64;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            factors.insert(bp, e);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        let tiny = m.to_u64().map(|v| v <= TRIAL_DIVISION_BOUND * TRIAL_DIVISION_BOUND);
        let prime = if tiny == Some(true) {
            // everything below the square of the trial bound with no small factor is prime
            Some(true)
        } else {
            is_prime_big(&m)
        };
        match prime {
            Some(true) => *factors.entry(m).or_insert(0) += 1,
            _ => match pollard_brent(&m, budget.factor) {
                Some(d) => {
                    let other = &m / &d;
                    stack.push(d);
                    stack.push(other);
                }
                None => return Err(Error::FactorizationBudgetExceeded(m)),
            },
        }
    }
    Ok(FactoredRational { sign, factors })
}

/// Parses `"a"` or `"a/b"` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Malformed(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl Serialize for FactoredRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Factors<'a>(&'a BTreeMap<BigInt, i64>);
        impl Serialize for Factors<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_map(self.0.iter().map(|(p, e)| (p.to_string(), *e)))
            }
        }
        let mut st = s.serialize_struct("FactoredRational", 2)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("factors", &Factors(&self.factors))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for FactoredRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            sign: i8,
            factors: BTreeMap<String, i64>,
        }
        let r = Repr::deserialize(d)?;
        let mut factors = BTreeMap::new();
        for (k, e) in r.factors {
            let p: BigInt = k.parse().map_err(D::Error::custom)?;
            factors.insert(p, e);
        }
        FactoredRational::from_parts(r.sign, factors).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn trial_oracle(mut n: u64) -> BTreeMap<BigInt, i64> {
        let mut out = BTreeMap::new();
        let mut p = 2;
        while n > 1 {
            while n % p == 0 {
                *out.entry(BigInt::from(p)).or_insert(0) += 1;
                n /= p;
            }
            p += 1;
        }
        out
    }

    #[test]
    fn factor_examples() {
        let b = Budgets::default();
        assert_eq!(factor(&q("1"), &b).unwrap(), FactoredRational::one());
        let f = factor(&q("-8/9"), &b).unwrap();
        assert_eq!(f.sign(), -1);
        assert_eq!(f.exponent(&BigInt::from(2)), 3);
        assert_eq!(f.exponent(&BigInt::from(3)), -2);
        let f = factor(&q("360"), &b).unwrap();
        assert_eq!(f.factors(), &trial_oracle(360));
        assert_eq!(factor(&q("0"), &b), Err(Error::ZeroInput));
    }

    #[test]
    fn factor_matches_trial_division() {
        let b = Budgets::default();
        for n in 1..3000u64 {
            let f = factor_integer(&BigInt::from(n), &b).unwrap();
            assert_eq!(f.factors(), &trial_oracle(n), "{n}");
        }
    }

    #[test]
    fn large_semiprime_round_trips() {
        let b = Budgets::default();
        let p: BigInt = "1000000007".parse().unwrap();
        let r: BigInt = "998244353".parse().unwrap();
        let n = &p * &r * BigInt::from(12);
        let f = factor_integer(&n, &b).unwrap();
        assert_eq!(f.exponent(&p), 1);
        assert_eq!(f.exponent(&r), 1);
        assert_eq!(f.to_rational(), BigRational::from_integer(n));
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let b = Budgets {
            factor: 1,
            ..Budgets::default()
        };
        let p: BigInt = "1000000007".parse().unwrap();
        let r: BigInt = "998244353".parse().unwrap();
        assert!(matches!(
            factor_integer(&(&p * &r), &b),
            Err(Error::FactorizationBudgetExceeded(_))
        ));
    }

    #[test]
    fn json_shape() {
        let f = factor(&q("-8/9"), &Budgets::default()).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"sign":-1,"factors":{"2":3,"3":-2}}"#);
        let back: FactoredRational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<FactoredRational>(r#"{"sign":1,"factors":{"4":1}}"#).is_err());
    }

    #[test]
    fn kernel_and_gcd() {
        let f = FactoredRational::from_i64(-72).unwrap();
        assert_eq!(f.squarefree_kernel(), BigInt::from(-2));
        assert_eq!(FactoredRational::from_i64(25).unwrap().exponent_gcd(), 2);
        assert_eq!(FactoredRational::minus_one().exponent_gcd(), 0);
    }
}
