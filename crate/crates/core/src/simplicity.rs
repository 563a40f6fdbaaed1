//! Simplicity of rationals and tuples of rationals, the quadratic stabilizer
//! of a simple rational, and the pure hull of a finitely generated subgroup
//! of `Q^×` inside the cyclotomic closure.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::cyclotomic::sqrt_conductor;
use crate::factored::FactoredRational;
use crate::lattice::{self, member, normal_form, saturate, serde_json_like, Atom, ExponentLattice, Index};
use crate::value::RadicalTuple;
use crate::{Error, Result};

/// `x^n = Π t_i^{exponents_i}` with `x` outside the subgroup generated by the tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PurityWitness {
    pub root: FactoredRational,
    pub n: u64,
    #[serde(serialize_with = "serde_json_like::ints")]
    pub exponents: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimplicityCertificate {
    pub tuple: Vec<FactoredRational>,
    pub verdict: bool,
    pub independent: bool,
    #[serde(serialize_with = "serde_json_like::ints")]
    pub smith: Vec<BigInt>,
    /// Present when the tuple is independent but its subgroup is not pure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PurityWitness>,
    /// Present when the tuple is dependent: `Π t_i^{relation_i} = 1`.
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serde_json_like::opt_ints"
    )]
    pub relation: Option<Vec<BigInt>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PureHullBasis {
    pub base_tuple: Vec<FactoredRational>,
    pub saturation_basis: Vec<FactoredRational>,
    /// Square roots of the saturation basis, all with denominator 2.
    pub half_basis: RadicalTuple,
    pub conductor: u64,
    #[serde(serialize_with = "serde_json_like::int")]
    pub index: BigInt,
}

pub fn is_k_simple(a: &FactoredRational, k: u64) -> bool {
    if a.is_torsion() {
        return false;
    }
    k.gcd(&a.exponent_gcd()) == 1
}

/// Product `Π t_i^{c_i}` of a tuple.
pub fn tuple_power(t: &[FactoredRational], c: &[BigInt]) -> FactoredRational {
    t.iter().zip(c).fold(FactoredRational::one(), |acc, (a, e)| {
        acc.mul(&a.pow(e.to_i64().expect("exponent fits in 64 bits")))
    })
}

/// Positive rational with the given exponent vector over prime atoms.
pub fn from_exponents(support: &[Atom], v: &[BigInt]) -> FactoredRational {
    let factors = support
        .iter()
        .zip(v)
        .filter(|(_, e)| !e.is_zero())
        .map(|(a, e)| match a {
            Atom::Prime(p) => (p.clone(), e.to_i64().expect("exponent fits")),
            Atom::Symbol(_) => unreachable!("rational tuples have prime support"),
        })
        .collect();
    FactoredRational::from_parts(1, factors).expect("support is prime")
}

pub fn is_simple_tuple(t: &[FactoredRational]) -> SimplicityCertificate {
    let lat = ExponentLattice::from_tuple(t);
    let (_, smith) = normal_form(&lat);
    let independent = lat.rank() == t.len();
    let mut cert = SimplicityCertificate {
        tuple: t.to_vec(),
        verdict: false,
        independent,
        smith: smith.clone(),
        witness: None,
        relation: None,
    };
    if !independent {
        let kernel = lattice::left_kernel(&lat.rows, lat.dim());
        let mut r = kernel.into_iter().next().expect("dependent tuple has a relation");
        if tuple_power(t, &r).sign() == -1 {
            r.iter_mut().for_each(|x| *x *= 2);
        }
        cert.relation = Some(r);
        return cert;
    }
    if smith.iter().all(|d| d.is_one()) {
        cert.verdict = true;
        return cert;
    }
    let sat = saturate(&lat);
    let v = sat
        .rows
        .iter()
        .find(|row| member(&lat, row).unwrap().is_none())
        .expect("non-saturated lattice has a saturation vector outside it")
        .clone();
    let bound: BigInt = smith.iter().product();
    let mut n = 1u64;
    let coeffs = loop {
        n += 1;
        let nv: Vec<BigInt> = v.iter().map(|x| x * n).collect();
        if let Some(c) = member(&lat, &nv).unwrap() {
            break c;
        }
        assert!(
            BigInt::from(n) <= bound,
            "order of a saturation vector divides the index"
        );
    };
    let root = from_exponents(&lat.support, &v);
    let product = tuple_power(t, &coeffs);
    let witness = if product.sign() == 1 {
        PurityWitness {
            root,
            n,
            exponents: coeffs,
        }
    } else if n % 2 == 1 {
        PurityWitness {
            root: root.mul(&FactoredRational::minus_one()),
            n,
            exponents: coeffs,
        }
    } else {
        PurityWitness {
            root,
            n: 2 * n,
            exponents: coeffs.into_iter().map(|c| c * 2).collect(),
        }
    };
    debug_assert_eq!(witness.root.pow(witness.n as i64), tuple_power(t, &witness.exponents));
    cert.witness = Some(witness);
    cert
}

/// The quadratic stabilizer of a simple rational: `N = 2`, together with the
/// conductor of the field generated by its square root.
pub fn stabilizer_n(a: &FactoredRational) -> Result<(u64, u64)> {
    if a.is_torsion() {
        return Err(Error::NotSimple(format!("{a} is a root of unity")));
    }
    if a.exponent_gcd() != 1 {
        return Err(Error::NotSimple(format!(
            "{a} is a {}-th power up to sign",
            a.exponent_gcd()
        )));
    }
    let cond = sqrt_conductor(a)
        .to_u64()
        .ok_or_else(|| Error::BudgetExceeded(format!("conductor of sqrt({a})")))?;
    Ok((2, cond))
}

pub fn pure_hull(t: &[FactoredRational]) -> Result<PureHullBasis> {
    let lat = ExponentLattice::from_tuple(t);
    if lat.rank() != t.len() {
        return Err(Error::NotIndependent);
    }
    let sat = saturate(&lat);
    let Index::Finite(idx) = lattice::group_index(&lat, &sat)? else {
        unreachable!("saturation keeps the rank")
    };
    let basis: Vec<FactoredRational> = sat.rows.iter().map(|r| from_exponents(&sat.support, r)).collect();
    let mut conductor = 1u64;
    for s in &basis {
        let (_, c) = stabilizer_n(s)?;
        conductor = conductor.lcm(&c);
    }
    let index = idx * BigInt::from(2).pow(t.len() as u32);
    Ok(PureHullBasis {
        base_tuple: t.to_vec(),
        half_basis: RadicalTuple::canonical(basis.clone(), 2),
        saturation_basis: basis,
        conductor,
        index,
    })
}

/// Exponent of the finite group `saturate(⟨b⟩) / ⟨b⟩`: its largest Smith invariant.
pub fn quotient_exponent(b: &[FactoredRational]) -> BigInt {
    let lat = ExponentLattice::from_tuple(b);
    normal_form(&lat)
        .1
        .into_iter()
        .max()
        .map(|d| d.abs())
        .unwrap_or_else(BigInt::one)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::MulValue;

    fn f(x: i64) -> FactoredRational {
        FactoredRational::from_i64(x).unwrap()
    }

    fn tup(v: &[i64]) -> Vec<FactoredRational> {
        v.iter().map(|&x| f(x)).collect()
    }

    #[test]
    fn k_simple_examples() {
        assert!(is_k_simple(&f(25), 3));
        assert!(!is_k_simple(&f(25), 2));
        assert!(!is_k_simple(&f(1), 5));
        assert!(!is_k_simple(&f(-1), 5));
        assert!(is_k_simple(&f(-8), 2));
        assert!(!is_k_simple(&f(-8), 6));
    }

    #[test]
    fn simple_tuple_examples() {
        assert!(is_simple_tuple(&tup(&[2, 3, 5])).verdict);
        let c = is_simple_tuple(&tup(&[4]));
        assert!(!c.verdict);
        let w = c.witness.unwrap();
        assert_eq!((w.root.clone(), w.n), (f(2), 2));
        assert_eq!(w.root.pow(2), tuple_power(&tup(&[4]), &w.exponents));
        assert!(is_simple_tuple(&tup(&[2, 6])).verdict);
        let dep = is_simple_tuple(&tup(&[2, -8]));
        assert!(!dep.verdict && !dep.independent);
        assert!(tuple_power(&tup(&[2, -8]), &dep.relation.unwrap()).is_one());
    }

    #[test]
    fn negative_witness_uses_sign_or_doubles() {
        // -8 = (-2)^3: odd order, the root absorbs the sign
        let w = is_simple_tuple(&tup(&[-8])).witness.unwrap();
        assert_eq!(w.root.pow(w.n as i64), tuple_power(&tup(&[-8]), &w.exponents));
        // -4: x^2 = -4 has no rational root, so the witness moves to x^4 = 16
        let w = is_simple_tuple(&tup(&[-4])).witness.unwrap();
        assert_eq!(w.n, 4);
        assert_eq!(w.root.pow(4), tuple_power(&tup(&[-4]), &w.exponents));
    }

    #[test]
    fn stabilizer_examples() {
        assert_eq!(stabilizer_n(&f(2)).unwrap(), (2, 8));
        assert_eq!(stabilizer_n(&f(5)).unwrap(), (2, 5));
        assert_eq!(stabilizer_n(&f(3)).unwrap(), (2, 12));
        assert_eq!(stabilizer_n(&f(-3)).unwrap(), (2, 3));
        assert!(matches!(stabilizer_n(&f(-1)), Err(Error::NotSimple(_))));
        assert!(matches!(stabilizer_n(&f(9)), Err(Error::NotSimple(_))));
    }

    #[test]
    fn pure_hull_examples() {
        let h = pure_hull(&tup(&[2])).unwrap();
        assert_eq!(
            (h.saturation_basis.clone(), h.conductor, h.index.clone()),
            (tup(&[2]), 8, BigInt::from(2))
        );
        let h = pure_hull(&tup(&[4])).unwrap();
        assert_eq!(
            (h.saturation_basis.clone(), h.conductor, h.index.clone()),
            (tup(&[2]), 8, BigInt::from(4))
        );
        let h = pure_hull(&tup(&[2, 3])).unwrap();
        assert_eq!((h.conductor, h.index.clone()), (24, BigInt::from(4)));
        for (i, s) in h.saturation_basis.iter().enumerate() {
            assert_eq!(h.half_basis.value(i).pow(2), MulValue::from_factored(s));
        }
        assert_eq!(pure_hull(&tup(&[2, 8])), Err(Error::NotIndependent));
    }
}
