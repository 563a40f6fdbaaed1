//! Field axioms, Galois compatibility and square-root minimality in
//! cyclotomic fields.

use cover_core::arith::{divisors, euler_phi, gcd};
use cover_core::cyclotomic::{is_qth_power_in_cyclotomic, sqrt_in_cyclotomic, CyclotomicElement, GaloisMap};
use cover_core::FactoredRational;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const CONDUCTORS: [u64; 8] = [3, 4, 5, 7, 8, 9, 12, 15];

fn element(n: u64) -> impl Strategy<Value = CyclotomicElement> {
    prop::collection::vec((-5i64..=5, 1i64..=3), euler_phi(n) as usize).prop_map(move |c| {
        CyclotomicElement::from_coeffs(
            n,
            c.into_iter()
                .map(|(a, b)| BigRational::new(a.into(), b.into()))
                .collect(),
        )
        .unwrap()
    })
}

fn triple() -> impl Strategy<Value = (CyclotomicElement, CyclotomicElement, CyclotomicElement)> {
    prop::sample::select(CONDUCTORS.to_vec()).prop_flat_map(|n| (element(n), element(n), element(n)))
}

proptest! {
    #[test]
    fn field_axioms((a, b, c) in triple()) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        if !a.is_zero() {
            let n = a.conductor();
            prop_assert_eq!(a.mul(&a.inv().unwrap()).unwrap(), CyclotomicElement::one(n));
        }
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn galois_is_a_field_automorphism((a, b, c) in triple(), k in 1i64..60, l in 1i64..60) {
        let n = a.conductor();
        prop_assume!(gcd(k as u64, n) == 1 && gcd(l as u64, n) == 1);
        let g = GaloisMap::new(n, k).unwrap();
        let h = GaloisMap::new(n, l).unwrap();
        let ga = a.galois_apply(&g).unwrap();
        let gb = b.galois_apply(&g).unwrap();
        prop_assert_eq!(a.mul(&b).unwrap().galois_apply(&g).unwrap(), ga.mul(&gb).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().galois_apply(&g).unwrap(), ga.add(&gb).unwrap());
        let q = c.coeffs()[0].clone();
        let r = CyclotomicElement::from_rational(n, q);
        prop_assert_eq!(r.galois_apply(&g).unwrap(), r);
        prop_assert_eq!(
            a.galois_apply(&h).unwrap().galois_apply(&g).unwrap(),
            a.galois_apply(&g.compose(&h).unwrap()).unwrap()
        );
        prop_assert_eq!(g.compose(&h).unwrap().k, (k * l).rem_euclid(n as i64) as u64);
    }

    #[test]
    fn power_tests_are_monotone(a in -30i64..=30, q in prop::sample::select(vec![2u64, 3, 5]), n in 1u64..=24, mult in 1u64..=4) {
        prop_assume!(a != 0);
        let f = FactoredRational::from_i64(a).unwrap();
        if is_qth_power_in_cyclotomic(&f, q, n, 512).unwrap() {
            prop_assert!(is_qth_power_in_cyclotomic(&f, q, n * mult, 512).unwrap());
        }
    }
}

/// Any square root of `a` in a subfield is `±w`, so minimality amounts to
/// `w` descending to `Q(ζ_d)` exactly when the conductor divides `d`.
#[test]
fn square_roots_have_minimal_conductor() {
    for a in -50i64..=50 {
        if a == 0 || a == 1 || (2..=7).any(|p: i64| a % (p * p) == 0) {
            continue;
        }
        let (cond, w) = sqrt_in_cyclotomic(&BigInt::from(a), 512).unwrap();
        let sq = w.mul(&w).unwrap();
        assert_eq!(sq.as_rational(), Some(BigRational::from_integer(a.into())));
        for d in divisors(w.conductor()) {
            let down = w.descend(d).unwrap();
            assert_eq!(
                down.is_some(),
                d % cond == 0,
                "sqrt({a}) against Q(ζ_{d}), conductor {cond}"
            );
        }
    }
}
