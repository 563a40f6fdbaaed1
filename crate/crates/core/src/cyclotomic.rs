//! Exact arithmetic in cyclotomic fields `Q(ζ_n)` in the power basis, the
//! Galois action `ζ ↦ ζ^k`, quadratic Gauss sums, and power tests for
//! rationals inside cyclotomic fields.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{euler_phi, factor_u64, gcd, is_prime_u64, kronecker, lcm, quadratic_conductor};
use crate::factored::{format_rational, parse_rational, FactoredRational};
use crate::{Error, Result};

pub const DEFAULT_CONDUCTOR_BOUND: u64 = 512;

fn poly_cache() -> &'static RwLock<HashMap<u64, Vec<BigInt>>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Vec<BigInt>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn check_bound(n: u64, bound: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Malformed("conductor must be positive".into()));
    }
    if n > bound {
        return Err(Error::BoundExceeded {
            what: "conductor",
            value: n,
            bound,
        });
    }
    Ok(())
}

/// Coefficients of `Φ_n`, lowest degree first.
pub fn cyclotomic_poly(n: u64, bound: u64) -> Result<Vec<BigInt>> {
    check_bound(n, bound)?;
    Ok(phi_poly(n))
}

fn phi_poly(n: u64) -> Vec<BigInt> {
    if let Some(p) = poly_cache().read().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in crate::arith::divisors(n) {
        if d == n {
            continue;
        }
        num = monic_div_exact(&num, &phi_poly(d));
    }
    poly_cache().write().unwrap().insert(n, num.clone());
    num
}

fn monic_div_exact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    let mut q = vec![BigInt::zero(); a.len() - db];
    for i in (0..q.len()).rev() {
        let c = rem[i + db].clone();
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(|x| x.is_zero()));
    q
}

/// Reduces a dense polynomial modulo the monic `Φ_n`.
fn reduce(mut a: Vec<BigRational>, phi: &[BigInt]) -> Vec<BigRational> {
    let d = phi.len() - 1;
    for i in (d..a.len()).rev() {
        let c = std::mem::replace(&mut a[i], BigRational::zero());
        if c.is_zero() {
            continue;
        }
        for (j, pj) in phi.iter().enumerate().take(d) {
            if !pj.is_zero() {
                a[i - d + j] -= &c * BigRational::from_integer(pj.clone());
            }
        }
    }
    a.truncate(d);
    a.resize(d, BigRational::zero());
    a
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclotomicElement {
    n: u64,
    coeffs: Vec<BigRational>,
}

/// The automorphism `ζ_n ↦ ζ_n^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaloisMap {
    pub n: u64,
    pub k: u64,
}

impl GaloisMap {
    pub fn new(n: u64, k: i64) -> Result<Self> {
        let k = k.rem_euclid(n as i64) as u64;
        if gcd(k, n) != 1 {
            return Err(Error::Malformed(format!("{k} is not a unit modulo {n}")));
        }
        Ok(GaloisMap { n, k })
    }

    pub fn compose(&self, other: &GaloisMap) -> Result<GaloisMap> {
        if self.n != other.n {
            return Err(Error::ConductorMismatch(self.n, other.n));
        }
        Ok(GaloisMap {
            n: self.n,
            k: self.k * other.k % self.n,
        })
    }
}

impl CyclotomicElement {
    pub fn zero(n: u64) -> Self {
        let d = euler_phi(n) as usize;
        CyclotomicElement {
            n,
            coeffs: vec![BigRational::zero(); d],
        }
    }

    pub fn from_rational(n: u64, q: BigRational) -> Self {
        let mut z = Self::zero(n);
        z.coeffs[0] = q;
        z
    }

    pub fn one(n: u64) -> Self {
        Self::from_rational(n, BigRational::one())
    }

    pub fn from_i64(n: u64, q: i64) -> Self {
        Self::from_rational(n, BigRational::from_integer(BigInt::from(q)))
    }

    /// Builds `Σ c_e ζ_n^e` from arbitrary integer exponents.
    pub fn from_exponents<I>(n: u64, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        let mut dense = vec![BigRational::zero(); n as usize];
        for (e, c) in terms {
            dense[e.rem_euclid(n as i64) as usize] += c;
        }
        CyclotomicElement {
            n,
            coeffs: reduce(dense, &phi_poly(n)),
        }
    }

    /// `ζ_n^k`.
    pub fn zeta_pow(n: u64, k: i64) -> Self {
        Self::from_exponents(n, [(k, BigRational::one())])
    }

    /// The root of unity `exp(2πi·j/d)` inside `Q(ζ_n)`; requires `d | n`.
    pub fn root_of_unity(n: u64, j: i64, d: u64) -> Result<Self> {
        if n % d != 0 {
            return Err(Error::NotAMultiple { m: d, n });
        }
        Ok(Self::zeta_pow(n, j * (n / d) as i64))
    }

    pub fn conductor(&self) -> u64 {
        self.n
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn from_coeffs(n: u64, coeffs: Vec<BigRational>) -> Result<Self> {
        let d = euler_phi(n) as usize;
        if coeffs.len() != d {
            return Err(Error::Malformed(format!(
                "expected {d} coefficients for conductor {n}, got {}",
                coeffs.len()
            )));
        }
        Ok(CyclotomicElement { n, coeffs })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ConductorMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same(other)?;
        Ok(CyclotomicElement {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn neg(&self) -> Self {
        CyclotomicElement {
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        CyclotomicElement {
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| a * q).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same(other)?;
        let d = self.coeffs.len();
        let mut prod = vec![BigRational::zero(); 2 * d];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(CyclotomicElement {
            n: self.n,
            coeffs: reduce(prod, &phi_poly(self.n)),
        })
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let phi: Vec<BigRational> = phi_poly(self.n).into_iter().map(BigRational::from_integer).collect();
        let u = poly_inverse_mod(&self.coeffs, &phi);
        let mut coeffs = u;
        coeffs.resize(self.coeffs.len(), BigRational::zero());
        Ok(CyclotomicElement { n: self.n, coeffs })
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        let mut base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Image under `ζ_m ↦ ζ_n^{n/m}`.
    pub fn embed(&self, n: u64) -> Result<Self> {
        if n % self.n != 0 {
            return Err(Error::NotAMultiple { m: self.n, n });
        }
        if n == self.n {
            return Ok(self.clone());
        }
        let step = (n / self.n) as i64;
        Ok(Self::from_exponents(
            n,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i as i64 * step, c.clone())),
        ))
    }

    pub fn galois_apply(&self, g: &GaloisMap) -> Result<Self> {
        if g.n != self.n {
            return Err(Error::ConductorMismatch(g.n, self.n));
        }
        Ok(Self::from_exponents(
            self.n,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i as i64 * g.k as i64, c.clone())),
        ))
    }

    /// Preimage under the embedding of `Q(ζ_d)`, if this element lies there.
    pub fn descend(&self, d: u64) -> Result<Option<Self>> {
        if self.n % d != 0 {
            return Err(Error::NotAMultiple { m: d, n: self.n });
        }
        let k = euler_phi(d) as usize;
        // columns: images of ζ_d^i; solve Σ x_i col_i = self over Q
        let cols: Vec<Vec<BigRational>> = (0..k)
            .map(|i| Self::zeta_pow(d, i as i64).embed(self.n).map(|e| e.coeffs))
            .collect::<Result<_>>()?;
        match solve_rational(&cols, &self.coeffs) {
            Some(x) => Ok(Some(CyclotomicElement { n: d, coeffs: x })),
            None => Ok(None),
        }
    }
}

/// Solves `Σ x_i cols[i] = target` by Gaussian elimination.
pub(crate) fn solve_rational(cols: &[Vec<BigRational>], target: &[BigRational]) -> Option<Vec<BigRational>> {
    let rows = target.len();
    let k = cols.len();
    // augmented matrix rows x (k+1)
    let mut m: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let mut row: Vec<BigRational> = cols.iter().map(|c| c[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let src = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(src.iter()) {
                    *x -= &f * y;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); k];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = m[i][k].clone();
    }
    Some(x)
}

fn trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() <= db {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &lead;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    r.truncate(db.max(1));
    trim(&mut r);
    (q, r)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(&mut out);
    out
}

/// Inverse of `a` modulo the irreducible `m`, by the extended Euclidean algorithm.
fn poly_inverse_mod(a: &[BigRational], m: &[BigRational]) -> Vec<BigRational> {
    let mut r0 = m.to_vec();
    let mut r1 = a.to_vec();
    trim(&mut r1);
    let mut s0 = vec![BigRational::zero()];
    let mut s1 = vec![BigRational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divrem(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    // r0 is a nonzero constant
    let c = r0[0].recip();
    let (_, rem) = poly_divrem(&s0, m);
    rem.into_iter().map(|x| x * &c).collect()
}

impl Serialize for CyclotomicElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CyclotomicElement", 2)?;
        st.serialize_field("n", &self.n)?;
        let c: Vec<String> = self.coeffs.iter().map(format_rational).collect();
        st.serialize_field("coeffs", &c)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CyclotomicElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            n: u64,
            coeffs: Vec<String>,
        }
        let r = Repr::deserialize(d)?;
        check_bound(r.n, DEFAULT_CONDUCTOR_BOUND).map_err(D::Error::custom)?;
        let coeffs = r
            .coeffs
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        CyclotomicElement::from_coeffs(r.n, coeffs).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Square roots and power tests
// ---------------------------------------------------------------------------

fn is_squarefree(a: &BigInt) -> bool {
    match a.abs().to_u64() {
        Some(v) => factor_u64(v).iter().all(|&(_, e)| e == 1),
        None => false,
    }
}

/// Square root of a squarefree integer inside its minimal cyclotomic field.
///
/// The witness is the positive real root for `a > 0` and `i·sqrt(|a|)` for
/// `a < 0`, built from the Gauss sum of the Kronecker character of the
/// fundamental discriminant.
pub fn sqrt_in_cyclotomic(a: &BigInt, bound: u64) -> Result<(u64, CyclotomicElement)> {
    if a.is_zero() || !is_squarefree(a) {
        return Err(Error::NotSquarefree(a.clone()));
    }
    if a.is_one() {
        return Ok((1, CyclotomicElement::one(1)));
    }
    let a_i = a
        .to_i64()
        .ok_or_else(|| Error::BudgetExceeded(format!("square root of {a}")))?;
    let disc = crate::arith::fundamental_discriminant(a_i);
    let n = disc.unsigned_abs();
    check_bound(n, bound)?;
    let g = CyclotomicElement::from_exponents(
        n,
        (1..n).filter_map(|t| {
            let k = kronecker(disc, t);
            (k != 0).then(|| (t as i64, BigRational::from_integer(BigInt::from(k))))
        }),
    );
    let w = if disc == a_i {
        g
    } else {
        g.scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
    };
    Ok((n, w))
}

/// Conductor of `Q(sqrt(c))` for a nonzero rational `c` (1 when `c` is a square).
pub fn sqrt_conductor(c: &FactoredRational) -> BigInt {
    quadratic_conductor(&c.squarefree_kernel())
}

/// Smallest `M'` with `Q(ζ_M') = Q(ζ_M)`.
pub fn normalize_conductor(m: u64) -> u64 {
    if m % 4 == 2 {
        m / 2
    } else {
        m
    }
}

/// Order of the group of roots of unity of `Q(ζ_M)`.
pub fn unit_torsion_order(m: u64) -> u64 {
    lcm(2, normalize_conductor(m))
}

fn divides(c: &BigInt, m: u64) -> bool {
    (BigInt::from(m) % c).is_zero()
}

/// Decides whether `c · ζ_W^j` is a square in `Q(ζ_M)`, where `W` is the
/// torsion order of that field and `c` is a positive rational.
pub fn is_square_times_root(c: &FactoredRational, j: i64, m: u64) -> bool {
    let m = normalize_conductor(m);
    let w = unit_torsion_order(m);
    let j = j.rem_euclid(w as i64) as u64;
    let cond = sqrt_conductor(c);
    let sqrt_c_in_k = divides(&cond, m);
    if j % 2 == 0 {
        return sqrt_c_in_k;
    }
    // η = ζ_W^j is a non-square; its square root lives one quadratic step up
    let ord = w / gcd(j, w);
    let l = lcm(m, 2 * ord);
    !sqrt_c_in_k && divides(&cond, l)
}

/// Decides `a ∈ Q(ζ_M)^{×n}` for a nonzero rational `a`.
pub fn is_nth_power_in_cyclotomic(a: &FactoredRational, n: u64, m: u64) -> bool {
    if n == 0 {
        return a.is_one();
    }
    for (p, k) in factor_u64(n) {
        let pk = p.pow(k) as i64;
        if p != 2 {
            if a.factors().values().any(|e| e % pk != 0) {
                return false;
            }
            continue;
        }
        // 2^k: a must be ε·c^{2^{k-1}} with c > 0
        let half = pk / 2;
        if a.factors().values().any(|e| e % half != 0) {
            return false;
        }
        let c = FactoredRational::from_parts(1, a.factors().iter().map(|(q, e)| (q.clone(), e / half)).collect())
            .expect("keys already prime");
        let w = unit_torsion_order(m) as i64;
        let target = if a.sign() == 1 { 0 } else { w / 2 };
        let found = (0..w).any(|j| (j * half).rem_euclid(w) == target && is_square_times_root(&c, j, m));
        if !found {
            return false;
        }
    }
    true
}

/// Decides whether `a = β^q · ζ` for some `β ∈ Q(ζ_n)` and root of unity `ζ` there.
pub fn is_qth_power_in_cyclotomic(a: &FactoredRational, q: u64, n: u64, bound: u64) -> Result<bool> {
    if !is_prime_u64(q) {
        return Err(Error::NotPrime(q));
    }
    check_bound(n, bound)?;
    if q != 2 {
        return Ok(a.factors().values().all(|e| e % q as i64 == 0));
    }
    let c = a.abs();
    let w = unit_torsion_order(n) as i64;
    let shift = if a.sign() == 1 { 0 } else { w / 2 };
    Ok([0, 1].iter().any(|&j| is_square_times_root(&c, j + shift, n)))
}
