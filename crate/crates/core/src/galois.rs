//! Decides whether a field automorphism of `Q̄` (extended to the formal
//! symbols) maps a list of fragment values to another list, and produces an
//! explicit automorphism when one exists.
//!
//! An automorphism acts on the fragment through two kinds of data:
//!
//! * a unit `k` of `Ẑ` with `σ(ζ) = ζ^k` on roots of unity;
//! * one character `c_a ∈ Ẑ` per atom with `σ(a^{1/D}) = a^{1/D} · e(c_a / D)`.
//!
//! Characters of symbols are unconstrained. For a prime `p` the parity of
//! `c_p` is tied to `k` because `sqrt(p)` lies in a cyclotomic field:
//! `c_p` is odd exactly when the Kronecker character of `Q(sqrt(p))` sends
//! `k` to `-1`. Every pair `(k, c)` obeying these parity rules comes from an
//! automorphism, so deciding conjugacy reduces to a finite enumeration of `k`
//! modulo the torsion level and an integer linear system for the characters.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{fundamental_discriminant, gcd, kronecker, lcm, quadratic_conductor};
use crate::cyclotomic::GaloisMap;
use crate::lattice::{Atom, LeftSolver};
use crate::value::{frac, MulValue};
use crate::{Error, Result};

/// Constraint on the action on roots of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootPin {
    Free,
    /// `k ≡ residue (mod modulus)`.
    Congruent {
        modulus: u64,
        residue: u64,
    },
    /// Every root of unity is fixed.
    Identity,
}

impl RootPin {
    /// Fixes `μ_M` pointwise.
    pub fn fixing(m: u64) -> Self {
        if m <= 2 {
            RootPin::Free
        } else {
            RootPin::Congruent { modulus: m, residue: 1 }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RootAction {
    Identity,
    Power { k: u64, modulus: u64 },
}

/// An automorphism restricted to the part of the fragment it was solved on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentAutomorphism {
    pub roots: RootAction,
    /// Characters `c_a` reduced modulo `char_modulus`.
    pub chars: BTreeMap<String, u64>,
    pub char_modulus: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub rename: BTreeMap<String, String>,
    #[serde(skip)]
    atom_chars: BTreeMap<Atom, u64>,
}

impl FragmentAutomorphism {
    pub fn identity() -> Self {
        FragmentAutomorphism {
            roots: RootAction::Identity,
            chars: BTreeMap::new(),
            char_modulus: 1,
            rename: BTreeMap::new(),
            atom_chars: BTreeMap::new(),
        }
    }

    /// The action on roots of unity as a cyclotomic Galois map, when finite.
    pub fn galois_map(&self) -> Option<GaloisMap> {
        match self.roots {
            RootAction::Identity => None,
            RootAction::Power { k, modulus } => Some(GaloisMap {
                n: modulus,
                k: k % modulus.max(1),
            }),
        }
    }

    pub fn apply(&self, x: &MulValue) -> Result<MulValue> {
        let mut t = x.torsion().clone();
        if let RootAction::Power { k, modulus } = self.roots {
            if modulus % x.torsion_order() != 0 {
                return Err(Error::BudgetExceeded(format!(
                    "automorphism known on μ_{modulus} only, value {x} needs order {}",
                    x.torsion_order()
                )));
            }
            t = &t * BigRational::from_integer(BigInt::from(k));
        }
        for (a, e) in x.exps() {
            if e.is_integer() {
                continue;
            }
            let den = e.denom().to_u64().unwrap_or(u64::MAX);
            let c = match self.atom_chars.get(a) {
                Some(c) if self.char_modulus % den == 0 => *c,
                _ => {
                    return Err(Error::BudgetExceeded(format!(
                        "automorphism not determined on {a}^(1/{den})"
                    )))
                }
            };
            t += e * BigRational::from_integer(BigInt::from(c));
        }
        let exps = x.exps().clone();
        Ok(MulValue::from_parts(frac(&t), exps).rename(&self.rename))
    }
}

fn scaled(q: &BigRational, w: u64) -> BigInt {
    let s = q * BigRational::from_integer(BigInt::from(w));
    debug_assert!(s.is_integer());
    s.to_integer()
}

/// Null space over `F_2` of the rows given as bitmasks in `s` columns.
fn f2_annihilator(rows: &[u64], s: usize) -> Vec<u64> {
    let mut rows = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..s {
        let bit = 1u64 << c;
        let Some(i) = (r..rows.len()).find(|&i| rows[i] & bit != 0) else {
            continue;
        };
        rows.swap(r, i);
        for j in 0..rows.len() {
            if j != r && rows[j] & bit != 0 {
                rows[j] ^= rows[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut out = Vec::new();
    for f in 0..s {
        if pivots.contains(&f) {
            continue;
        }
        let mut v = 1u64 << f;
        for (i, &pc) in pivots.iter().enumerate() {
            if rows[i] & (1u64 << f) != 0 {
                v |= 1u64 << pc;
            }
        }
        out.push(v);
    }
    out
}

const MAX_PRIMES: usize = 20;

/// Searches for an automorphism `σ` with `σ(x_i) = y_i` for every pair,
/// respecting the pin on roots of unity and mapping symbols by `rename`.
pub fn find_automorphism(
    pairs: &[(MulValue, MulValue)],
    pin: RootPin,
    rename: &BTreeMap<String, String>,
) -> Result<Option<FragmentAutomorphism>> {
    let shifts = vec![None; pairs.len()];
    Ok(find_automorphism_shifted(pairs, &shifts, pin, rename)?.map(|(s, _)| s))
}

/// Like [`find_automorphism`], except that a pair carrying `Some(d)` only
/// asks for `σ(x) = y·e(n/d)` with the integer `n` left free. The returned
/// vector holds the chosen `n` (reduced into `[0, d)`) for those pairs and
/// zero elsewhere.
pub fn find_automorphism_shifted(
    pairs: &[(MulValue, MulValue)],
    shifts: &[Option<u64>],
    pin: RootPin,
    rename: &BTreeMap<String, String>,
) -> Result<Option<(FragmentAutomorphism, Vec<BigInt>)>> {
    assert_eq!(pairs.len(), shifts.len());
    for (x, y) in pairs {
        if x.rename(rename).exps() != y.exps() {
            return Ok(None);
        }
    }
    // atoms whose character actually matters
    let atoms: Vec<Atom> = pairs
        .iter()
        .flat_map(|(x, _)| x.exps().iter().filter(|(_, e)| !e.is_integer()).map(|(a, _)| a.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let primes: Vec<(usize, BigInt)> = atoms
        .iter()
        .enumerate()
        .filter_map(|(i, a)| match a {
            Atom::Prime(p) => Some((i, p.clone())),
            Atom::Symbol(_) => None,
        })
        .collect();
    if primes.len() > MAX_PRIMES {
        return Err(Error::BudgetExceeded(format!(
            "{} primes in one conjugacy problem",
            primes.len()
        )));
    }
    let mut w = 2u64;
    let mut t_level = 1u64;
    for (x, y) in pairs {
        w = lcm(w, x.exponent_denominator());
        w = lcm(w, x.torsion_order());
        w = lcm(w, y.torsion_order());
        t_level = lcm(t_level, x.torsion_order());
    }
    for d in shifts.iter().flatten() {
        w = lcm(w, *d);
    }
    let shifted: Vec<(usize, u64)> = shifts
        .iter()
        .enumerate()
        .filter_map(|(e, d)| d.map(|d| (e, d)))
        .collect();
    let neq = pairs.len();
    // equation data scaled by w
    let a: Vec<Vec<BigInt>> = pairs
        .iter()
        .map(|(x, _)| atoms.iter().map(|at| scaled(&x.exponent(at), w)).collect())
        .collect();
    let tt: Vec<BigInt> = pairs.iter().map(|(x, _)| scaled(x.torsion(), w)).collect();
    let rhs: Vec<BigInt> = pairs.iter().map(|(_, y)| scaled(y.torsion(), w)).collect();

    let col = |f: &dyn Fn(usize) -> BigInt| -> Vec<BigInt> { (0..neq).map(f).collect() };
    let symbol_idx: Vec<usize> = (0..atoms.len())
        .filter(|&i| matches!(atoms[i], Atom::Symbol(_)))
        .collect();

    let finish = |roots: RootAction, chars: Vec<BigInt>| -> FragmentAutomorphism {
        let atom_chars: BTreeMap<Atom, u64> = atoms
            .iter()
            .zip(chars.iter())
            .map(|(at, c)| (at.clone(), c.mod_floor(&BigInt::from(w)).to_u64().unwrap()))
            .collect();
        FragmentAutomorphism {
            roots,
            chars: atom_chars.iter().map(|(a, c)| (a.to_string(), *c)).collect(),
            char_modulus: w,
            rename: rename.clone(),
            atom_chars,
        }
    };

    let shift_rows = |rows: &mut Vec<Vec<BigInt>>| {
        for &(e, d) in &shifted {
            rows.push(col(&|j| if j == e { BigInt::from(w / d) } else { BigInt::zero() }));
        }
    };
    let verify =
        |sigma: FragmentAutomorphism, coef: &[BigInt]| -> Result<Option<(FragmentAutomorphism, Vec<BigInt>)>> {
            let mut ns = vec![BigInt::zero(); neq];
            for (j, &(e, d)) in shifted.iter().enumerate() {
                ns[e] = (-&coef[j]).mod_floor(&BigInt::from(d));
            }
            for (e, (x, y)) in pairs.iter().enumerate() {
                let img = sigma.apply(x)?;
                let target = match shifts[e] {
                    Some(d) => y.mul(&MulValue::root_of_unity(BigRational::new(
                        ns[e].clone(),
                        BigInt::from(d),
                    ))),
                    None => y.clone(),
                };
                assert_eq!(img, target, "automorphism witness failed verification");
            }
            Ok(Some((sigma, ns)))
        };

    if pin == RootPin::Identity {
        // k = 1 and every sqrt(p) is fixed, so each c_p is even
        let mut rows = Vec::new();
        for &(i, _) in &primes {
            rows.push(col(&|e| &a[e][i] * 2));
        }
        for &i in &symbol_idx {
            rows.push(col(&|e| a[e][i].clone()));
        }
        shift_rows(&mut rows);
        for e in 0..neq {
            rows.push(col(&|j| if j == e { BigInt::from(w) } else { BigInt::zero() }));
        }
        let target: Vec<BigInt> = (0..neq).map(|e| &rhs[e] - &tt[e]).collect();
        let Some(coef) = LeftSolver::new(&rows, neq).solve(&target) else {
            return Ok(None);
        };
        let mut chars = vec![BigInt::zero(); atoms.len()];
        for (j, &(i, _)) in primes.iter().enumerate() {
            chars[i] = &coef[j] * 2;
        }
        for (j, &i) in symbol_idx.iter().enumerate() {
            chars[i] = coef[primes.len() + j].clone();
        }
        let off = primes.len() + symbol_idx.len();
        return verify(finish(RootAction::Identity, chars), &coef[off..off + shifted.len()]);
    }

    let (pin_mod, pin_res) = match pin {
        RootPin::Congruent { modulus, residue } => (modulus, residue % modulus),
        _ => (1, 0),
    };
    let t_prime = lcm(t_level, pin_mod);
    let discs: Vec<i64> = primes
        .iter()
        .map(|(_, p)| {
            p.to_i64()
                .map(fundamental_discriminant)
                .ok_or_else(|| Error::BudgetExceeded(format!("prime {p} too large for a Kronecker symbol")))
        })
        .collect::<Result<_>>()?;
    let mut n_big = t_prime;
    for d in &discs {
        n_big = lcm(n_big, d.unsigned_abs());
    }
    // R: subsets of primes whose product has conductor dividing t_prime
    let s = primes.len();
    let mut r_sets = Vec::new();
    for mask in 1u64..(1u64 << s) {
        let mut d = BigInt::from(1);
        for (j, (_, p)) in primes.iter().enumerate() {
            if mask >> j & 1 == 1 {
                d *= p;
            }
        }
        let cond = quadratic_conductor(&d);
        if (BigInt::from(t_prime) % cond).is_zero() {
            r_sets.push(mask);
        }
    }
    let ann = f2_annihilator(&r_sets, s);

    let mut rows = Vec::new();
    for b in &ann {
        rows.push(col(&|e| {
            primes
                .iter()
                .enumerate()
                .filter(|(j, _)| b >> j & 1 == 1)
                .map(|(_, (i, _))| a[e][*i].clone())
                .sum()
        }));
    }
    for &(i, _) in &primes {
        rows.push(col(&|e| &a[e][i] * 2));
    }
    for &i in &symbol_idx {
        rows.push(col(&|e| a[e][i].clone()));
    }
    shift_rows(&mut rows);
    for e in 0..neq {
        rows.push(col(&|j| if j == e { BigInt::from(w) } else { BigInt::zero() }));
    }
    let solver = LeftSolver::new(&rows, neq);
    let kappa = |k: u64| -> u64 {
        discs
            .iter()
            .enumerate()
            .map(|(j, &d)| if kronecker(d, k) == -1 { 1u64 << j } else { 0 })
            .sum()
    };
    let lifts = n_big / t_prime;

    for k0 in (0..t_prime / pin_mod).map(|j| pin_res + pin_mod * j) {
        if gcd(k0, t_prime) != 1 {
            continue;
        }
        let Some(k_lift) = (0..lifts).map(|j| k0 + t_prime * j).find(|&k| gcd(k, n_big) == 1) else {
            continue;
        };
        let v0 = kappa(k_lift);
        let target: Vec<BigInt> = (0..neq)
            .map(|e| {
                let mut v = &rhs[e] - &tt[e] * BigInt::from(k0);
                for (j, &(i, _)) in primes.iter().enumerate() {
                    if v0 >> j & 1 == 1 {
                        v -= &a[e][i];
                    }
                }
                v
            })
            .collect();
        let Some(coef) = solver.solve(&target) else { continue };
        let mut parity = v0;
        for (j, b) in ann.iter().enumerate() {
            if coef[j].is_odd() {
                parity ^= b;
            }
        }
        let mut chars = vec![BigInt::zero(); atoms.len()];
        for (j, &(i, _)) in primes.iter().enumerate() {
            let mut c = BigInt::from(v0 >> j & 1);
            for (l, b) in ann.iter().enumerate() {
                if b >> j & 1 == 1 {
                    c += &coef[l];
                }
            }
            c += &coef[ann.len() + j] * 2;
            chars[i] = c;
        }
        for (j, &i) in symbol_idx.iter().enumerate() {
            chars[i] = coef[ann.len() + s + j].clone();
        }
        // a unit lift of k0 realizing the chosen parities
        let k_hat = (0..lifts)
            .map(|j| k0 + t_prime * j)
            .find(|&k| gcd(k, n_big) == 1 && kappa(k) == parity)
            .expect("parity coset is realized by some lift");
        let roots = RootAction::Power {
            k: k_hat,
            modulus: n_big,
        };
        let off = ann.len() + s + symbol_idx.len();
        return verify(finish(roots, chars), &coef[off..off + shifted.len()]);
    }
    Ok(None)
}

/// Convenience: is there an automorphism with the given pin mapping `x` to `y`?
pub fn conjugate(x: &MulValue, y: &MulValue, pin: RootPin) -> Result<bool> {
    Ok(find_automorphism(&[(x.clone(), y.clone())], pin, &BTreeMap::new())?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::CyclotomicElement;
    use crate::factored::FactoredRational;
    use crate::value::ratio;

    fn root(b: i64, m: u64) -> MulValue {
        MulValue::canonical_root(&FactoredRational::from_i64(b).unwrap(), m)
    }

    fn zeta(j: i64, d: i64) -> MulValue {
        MulValue::root_of_unity(ratio(j, d))
    }

    fn none() -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    #[test]
    fn sign_patterns_of_two_square_roots() {
        for (s2, s3) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let pairs = vec![
                (root(2, 2), root(2, 2).mul(&zeta(s2, 2))),
                (root(3, 2), root(3, 2).mul(&zeta(s3, 2))),
            ];
            assert!(find_automorphism(&pairs, RootPin::Free, &none()).unwrap().is_some());
        }
    }

    #[test]
    fn sqrt2_is_rigid_once_zeta8_is_fixed() {
        let x = root(2, 2);
        assert!(!conjugate(&x, &x.mul(&zeta(1, 2)), RootPin::fixing(8)).unwrap());
        assert!(conjugate(&x, &x.mul(&zeta(1, 2)), RootPin::fixing(4)).unwrap());
        assert!(!conjugate(&x, &x.mul(&zeta(1, 2)), RootPin::Identity).unwrap());
        // fixing μ_3 does not pin sqrt(2)
        assert!(conjugate(&x, &x.mul(&zeta(1, 2)), RootPin::fixing(3)).unwrap());
    }

    #[test]
    fn free_shift_picks_the_reachable_root() {
        // with ζ_8 fixed, sqrt(2) can only go to itself, so the shift from
        // -sqrt(2) has to be one half turn
        let x = root(2, 2);
        let y = x.mul(&zeta(1, 2));
        let (_, ns) = find_automorphism_shifted(&[(x.clone(), y)], &[Some(2)], RootPin::fixing(8), &none())
            .unwrap()
            .unwrap();
        assert_eq!(ns, vec![BigInt::from(1)]);
        // an eighth root of 2 with a free shift mod 8 is always reachable
        let q = root(2, 8);
        let (_, ns) = find_automorphism_shifted(
            &[(q.clone(), q.mul(&zeta(3, 8))), (x.clone(), x.clone())],
            &[Some(8), None],
            RootPin::fixing(8),
            &none(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(ns[1], BigInt::zero());
    }

    #[test]
    fn fourth_roots_over_fixed_sqrt2() {
        // 2^{1/4} -> i·2^{1/4} fixes sqrt(2)? No: it sends sqrt(2) to -sqrt(2).
        let q = root(2, 4);
        let pairs = vec![(q.clone(), q.mul(&zeta(1, 4))), (root(2, 2), root(2, 2))];
        assert!(find_automorphism(&pairs, RootPin::fixing(8), &none())
            .unwrap()
            .is_none());
        let pairs = vec![(q.clone(), q.mul(&zeta(1, 2))), (root(2, 2), root(2, 2))];
        assert!(find_automorphism(&pairs, RootPin::fixing(8), &none())
            .unwrap()
            .is_some());
    }

    #[test]
    fn witness_agrees_with_cyclotomic_galois_action() {
        // For every unit k mod 120, the automorphism fixed by ζ ↦ ζ^k must move
        // sqrt(p) exactly as the exact Galois map does on the Gauss sum.
        for p in [2i64, 3, 5, 7] {
            let x = root(p, 2);
            let (cond, w) = crate::cyclotomic::sqrt_in_cyclotomic(&BigInt::from(p), 512).unwrap();
            for k in 1..cond {
                if gcd(k, cond) != 1 {
                    continue;
                }
                let g = GaloisMap::new(cond, k as i64).unwrap();
                let img = w.galois_apply(&g).unwrap();
                let flipped = img == w.neg();
                assert!(flipped || img == w);
                let y = if flipped { x.mul(&zeta(1, 2)) } else { x.clone() };
                let pin = RootPin::Congruent {
                    modulus: cond,
                    residue: k,
                };
                assert!(conjugate(&x, &y, pin).unwrap(), "p={p} k={k}");
                assert!(!conjugate(&x, &y.mul(&zeta(1, 2)), pin).unwrap(), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn symbols_move_freely_but_keep_exponents() {
        let t = MulValue::symbol("t").pow(1).scale_raw(&ratio(1, 3));
        let y = t.mul(&zeta(1, 3));
        assert!(conjugate(&t, &y, RootPin::Identity).unwrap());
        assert!(!conjugate(&t, &MulValue::symbol("t"), RootPin::Free).unwrap());
        let mut ren = BTreeMap::new();
        ren.insert("t".to_string(), "u".to_string());
        let u = MulValue::symbol("u").scale_raw(&ratio(1, 3));
        let sigma = find_automorphism(&[(t.clone(), u.clone())], RootPin::Identity, &ren)
            .unwrap()
            .unwrap();
        assert_eq!(sigma.apply(&t).unwrap(), u);
    }

    #[test]
    fn roots_of_unity_only() {
        assert!(conjugate(&zeta(1, 5), &zeta(2, 5), RootPin::Free).unwrap());
        assert!(!conjugate(&zeta(1, 5), &zeta(1, 10), RootPin::Free).unwrap());
        assert!(!conjugate(&zeta(1, 5), &zeta(2, 5), RootPin::fixing(5)).unwrap());
        let w = zeta(1, 8).to_cyclotomic(8).unwrap();
        assert_eq!(w, CyclotomicElement::zeta_pow(8, 1));
    }
}
