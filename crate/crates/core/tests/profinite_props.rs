//! Congruence solving and the profinite corrections between covers.

use cover_core::cover::{lcm_upto, CoverPresentation, GeneratorValue};
use cover_core::profinite::{crt_solve, nu_for, CongruenceSystem, ZhatApprox};
use cover_core::FactoredRational;
use num_integer::Integer;
use proptest::prelude::*;

fn system() -> impl Strategy<Value = (u64, Vec<u64>)> {
    (0u64..1_000_000, prop::collection::vec(1u64..=30, 1..=5))
}

fn constraints(x: u64, mods: &[u64]) -> CongruenceSystem {
    CongruenceSystem::new(mods.iter().map(|&m| (m, (x % m) as i64)).collect())
}

proptest! {
    #[test]
    fn crt_finds_the_unique_class((x, mods) in system()) {
        let sol = crt_solve(&constraints(x, &mods)).unwrap();
        let l = mods.iter().fold(1u64, |a, &m| a.lcm(&m));
        prop_assert_eq!(sol.modulus(), l);
        prop_assert_eq!(sol.residue(), x % l);
        for &m in &mods {
            prop_assert_eq!(sol.residue_at(m), Some(x % m));
        }
    }

    #[test]
    fn subsystems_solve_to_restrictions((x, mods) in system(), cut in 0usize..5) {
        let whole = crt_solve(&constraints(x, &mods)).unwrap();
        let sub = &mods[..cut.min(mods.len() - 1) + 1];
        let part = crt_solve(&constraints(x, sub)).unwrap();
        prop_assert_eq!(whole.restrict(part.modulus()), part);
    }

    #[test]
    fn shifted_residues_conflict((x, mods) in system()) {
        // moving one residue is detected exactly when it leaves the class the others force
        let mut cs = constraints(x, &mods);
        let (m0, r0) = cs.constraints[0];
        cs.constraints[0] = (m0, r0 + 1);
        let others = mods[1..].iter().fold(1u64, |a, &m| a.lcm(&m));
        let forced = m0.gcd(&others);
        prop_assert_eq!(crt_solve(&cs).is_ok(), forced == 1);
    }

    #[test]
    fn nu_for_is_natural_in_the_bound(b in -12i64..=12, th in 0u64..27720, tg in 0u64..27720, bound in 1u64..=6) {
        prop_assume!(b.abs() > 1);
        let base = || {
            CoverPresentation::canonical(vec![GeneratorValue::Rational(FactoredRational::from_i64(b).unwrap())], 12).unwrap()
        };
        let h = base().with_twist(0, ZhatApprox::new(27720, th as i64).unwrap()).unwrap();
        let g = base().with_twist(0, ZhatApprox::new(27720, tg as i64).unwrap()).unwrap();
        let small = nu_for(&h, 0, &g, 0, bound).unwrap();
        let large = nu_for(&h, 0, &g, 0, 2 * bound).unwrap();
        prop_assert_eq!(small.modulus(), lcm_upto(bound).unwrap());
        prop_assert_eq!(large.restrict(small.modulus()), small);
        // the correction is the difference of the twists
        let diff = (th + 27720 - tg) % large.modulus();
        prop_assert_eq!(large.residue(), diff);
    }
}
