//! Finite truncations of profinite integers, the congruence solver that
//! assembles them, and the profinite correction between two compact-kernel
//! covers of the same multiplicative fragment.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{divisors, gcd};
use crate::cover::{CoverPresentation, HElement};
use crate::value::MulValue;
use crate::{Error, Result};

/// An element of `Ẑ` known modulo `modulus`, hence at every divisor of it.
///
/// The residues on the divisor-closed index set are coherent by
/// construction: the residue at `n | modulus` is `residue mod n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZhatApprox {
    modulus: u64,
    residue: u64,
}

impl ZhatApprox {
    pub fn new(modulus: u64, residue: i64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Malformed("a profinite residue needs a positive modulus".into()));
        }
        Ok(ZhatApprox {
            modulus,
            residue: residue.rem_euclid(modulus as i64) as u64,
        })
    }

    pub(crate) fn from_u64(modulus: u64, residue: u64) -> Self {
        ZhatApprox {
            modulus,
            residue: residue % modulus,
        }
    }

    /// The element about which nothing is known yet.
    pub fn zero() -> Self {
        ZhatApprox { modulus: 1, residue: 0 }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    /// The residue mod `n`, when `n` is in the index set.
    pub fn residue_at(&self, n: u64) -> Option<u64> {
        (n > 0 && self.modulus % n == 0).then(|| self.residue % n)
    }

    /// The residue mod `n`, extending by the smallest nonnegative lift
    /// when `n` is not yet known.
    pub fn lift_residue(&self, n: u64) -> u64 {
        self.residue % n
    }

    pub fn index_set(&self) -> Vec<u64> {
        divisors(self.modulus)
    }

    pub fn residues(&self) -> BTreeMap<u64, u64> {
        self.index_set().into_iter().map(|n| (n, self.residue % n)).collect()
    }

    /// Extends the index set to the divisors of `lcm(modulus, n)`, keeping
    /// the smallest lift of the known residue.
    pub fn extend_to(&self, n: u64) -> Result<Self> {
        let g = gcd(self.modulus, n);
        let m = (self.modulus / g)
            .checked_mul(n)
            .ok_or_else(|| Error::BudgetExceeded(format!("modulus lcm({}, {n})", self.modulus)))?;
        Ok(ZhatApprox {
            modulus: m,
            residue: self.residue,
        })
    }

    /// Restriction to the divisors of `gcd(modulus, n)`.
    pub fn restrict(&self, n: u64) -> Self {
        ZhatApprox::from_u64(gcd(self.modulus, n), self.residue)
    }

    /// Sum, known on the common part of both index sets.
    pub fn add(&self, other: &Self) -> Self {
        let m = gcd(self.modulus, other.modulus);
        ZhatApprox::from_u64(m, (self.residue % m + other.residue % m) % m)
    }

    pub fn neg(&self) -> Self {
        ZhatApprox::from_u64(self.modulus, self.modulus - self.residue % self.modulus)
    }

    /// Coherent residues on an arbitrary set of moduli, glued by CRT.
    pub fn from_residues(residues: &BTreeMap<u64, i64>) -> Result<Self> {
        crt_solve(&CongruenceSystem {
            constraints: residues.iter().map(|(&n, &r)| (n, r)).collect(),
        })
    }
}

impl fmt::Display for ZhatApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZhatRepr {
    #[serde(rename = "mod")]
    modulus: u64,
    residue: i64,
}

impl Serialize for ZhatApprox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ZhatRepr {
            modulus: self.modulus,
            residue: self.residue as i64,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ZhatApprox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ZhatRepr::deserialize(d)?;
        ZhatApprox::new(r.modulus, r.residue).map_err(D::Error::custom)
    }
}

/// Congruences `z ≡ r (mod n)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CongruenceSystem {
    pub constraints: Vec<(u64, i64)>,
}

impl CongruenceSystem {
    pub fn new(constraints: Vec<(u64, i64)>) -> Self {
        CongruenceSystem { constraints }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SystemRepr {
    Map(BTreeMap<String, i64>),
    List(Vec<ZhatRepr>),
}

impl Serialize for CongruenceSystem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.constraints
            .iter()
            .map(|&(modulus, residue)| ZhatRepr { modulus, residue })
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CongruenceSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let constraints = match SystemRepr::deserialize(d)? {
            SystemRepr::Map(m) => m
                .into_iter()
                .map(|(k, r)| {
                    k.parse::<u64>()
                        .map(|n| (n, r))
                        .map_err(|_| D::Error::custom(format!("modulus {k:?} is not a positive integer")))
                })
                .collect::<std::result::Result<_, _>>()?,
            SystemRepr::List(l) => l.into_iter().map(|c| (c.modulus, c.residue)).collect(),
        };
        Ok(CongruenceSystem { constraints })
    }
}

fn inverse_mod(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1, mut s0, mut s1) = (a.rem_euclid(m), m, 1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(m)
}

/// The coherent solution of a congruence system, presented modulo the lcm
/// of its moduli. Pairwise compatibility `r_i ≡ r_j (mod gcd(n_i, n_j))` is
/// both necessary and sufficient; the first violating pair is reported.
pub fn crt_solve(system: &CongruenceSystem) -> Result<ZhatApprox> {
    let cs = &system.constraints;
    if cs.iter().any(|&(n, _)| n == 0) {
        return Err(Error::Malformed("congruence modulus must be positive".into()));
    }
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            let (n1, r1) = cs[i];
            let (n2, r2) = cs[j];
            let g = gcd(n1, n2) as i128;
            if (r1 as i128 - r2 as i128).rem_euclid(g) != 0 {
                return Err(Error::Inconsistent {
                    n1,
                    r1: r1.rem_euclid(n1 as i64) as u64,
                    n2,
                    r2: r2.rem_euclid(n2 as i64) as u64,
                });
            }
        }
    }
    let (mut m, mut r) = (1i128, 0i128);
    for &(n, rn) in cs {
        let n = n as i128;
        let g = gcd(m as u64, n as u64) as i128;
        let step = n / g;
        let t = ((rn as i128 - r).rem_euclid(n) / g * inverse_mod(m / g, step)).rem_euclid(step);
        r += m * t;
        m *= step;
        if m > u64::MAX as i128 {
            return Err(Error::BudgetExceeded("combined modulus exceeds 64 bits".into()));
        }
        r = r.rem_euclid(m);
    }
    Ok(ZhatApprox::from_u64(m as u64, r as u64))
}

/// Discrete logarithm of a root of unity of order dividing `n`, found by
/// running through `e(j/n)`.
fn discrete_log(b: &MulValue, n: u64) -> Option<u64> {
    (0..n).find(|&j| *b == MulValue::root_of_unity(BigRational::new(j.into(), n.into())))
}

/// The correction `ν ∈ Ẑ` (mod `lcm(1..=bound)`) with
/// `ex_H(h/n) = ex_G((g + ν)/n)` for every `n ≤ bound`, where `h` and `g`
/// are generators of two compact-kernel covers lying over the same element.
pub fn nu_for(
    h_pres: &CoverPresentation,
    h: usize,
    g_pres: &CoverPresentation,
    g: usize,
    bound: u64,
) -> Result<ZhatApprox> {
    let hv = h_pres.generator(h)?.value.to_value();
    let gv = g_pres.generator(g)?.value.to_value();
    if hv != gv {
        return Err(Error::NotSameElement(format!("ex(h) = {hv} but ex(g) = {gv}")));
    }
    let mut system = CongruenceSystem::default();
    for n in 1..=bound {
        let b = h_pres.root(h, n)?.div(&g_pres.root(g, n)?);
        let beta = discrete_log(&b, n).ok_or_else(|| {
            Error::NotSameElement(format!("discrepancy {b} at level {n} is not an {n}-th root of unity"))
        })?;
        system.constraints.push((n, beta as i64));
    }
    crt_solve(&system)
}

/// The homomorphism `H → G` fixing the shared fragment, as the list of
/// generator images `σ(h_j) = g_j + ν_j·κ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaMap {
    pub images: Vec<SigmaImage>,
    pub verified_to: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaImage {
    pub generator: String,
    pub target: String,
    pub shift: ZhatApprox,
}

impl SigmaMap {
    /// `ex_G(σ(v)/n)` for `v` a combination of generators of `H`, evaluated
    /// at a level `n` inside the verified range.
    pub fn image_root(&self, g_pres: &CoverPresentation, v: &HElement, n: u64) -> Result<MulValue> {
        let mut out = MulValue::root_of_unity(v.kernel.clone() / BigRational::from_integer(n.into()));
        for (j, q) in &v.gens {
            let level = n * q.denom().try_into().unwrap_or(1u64);
            let nu = self.images[*j].shift.lift_residue(level) as i64;
            let part = g_pres
                .fraction_root(*j, &(q / BigRational::from_integer(n.into())))?
                .mul(&MulValue::root_of_unity(q * BigRational::new(nu.into(), n.into())));
            out = out.mul(&part);
        }
        Ok(out)
    }
}

pub fn build_sigma(h_pres: &CoverPresentation, g_pres: &CoverPresentation, bound: u64) -> Result<SigmaMap> {
    if h_pres.len() != g_pres.len() {
        return Err(Error::NotSameElement(format!(
            "{} generators against {}",
            h_pres.len(),
            g_pres.len()
        )));
    }
    let mut images = Vec::with_capacity(h_pres.len());
    for j in 0..h_pres.len() {
        images.push(SigmaImage {
            generator: h_pres.generator(j)?.name.clone(),
            target: g_pres.generator(j)?.name.clone(),
            shift: nu_for(h_pres, j, g_pres, j, bound)?,
        });
    }
    let sigma = SigmaMap {
        images,
        verified_to: bound,
    };
    // every generator and every pairwise sum, at every level up to the bound
    let mut probes: Vec<HElement> = (0..h_pres.len()).map(HElement::generator).collect();
    for i in 0..h_pres.len() {
        for j in i + 1..h_pres.len() {
            probes.push(HElement::generator(i).add(&HElement::generator(j)));
        }
    }
    for v in &probes {
        for n in 1..=bound {
            let lhs = h_pres.element_root(v, n)?;
            let rhs = sigma.image_root(g_pres, v, n)?;
            if lhs != rhs {
                return Err(Error::NotSameElement(format!(
                    "σ fails on {v} at level {n}: {lhs} against {rhs}"
                )));
            }
        }
    }
    Ok(sigma)
}
