//! Relation lattices and component counts of torus subgroups.

use cover_core::torus::{closure_components, pullback_components, pullback_formula, relation_lattice};
use cover_core::value::MulValue;
use cover_core::FactoredRational;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn value(x: i64) -> MulValue {
    MulValue::from_factored(&FactoredRational::from_i64(x).unwrap())
}

fn coordinate() -> impl Strategy<Value = i64> {
    prop::sample::select(vec![-1i64, 2, -2, 3, 4, -8, 6, 9, 12])
}

fn points(l: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(coordinate(), l), 1..=2)
}

fn to_values(p: &[Vec<i64>]) -> Vec<Vec<MulValue>> {
    p.iter().map(|g| g.iter().map(|&x| value(x)).collect()).collect()
}

proptest! {
    #[test]
    fn rows_are_relations(p in (1usize..=3).prop_flat_map(points)) {
        let gens = to_values(&p);
        let lat = relation_lattice(&gens).unwrap();
        for row in &lat.rows {
            for g in &gens {
                let prod = g.iter().zip(row).fold(MulValue::one(), |acc, (x, e)| acc.mul(&x.pow(e.to_i64().unwrap())));
                prop_assert!(prod.is_one());
            }
        }
    }

    #[test]
    fn components_ignore_the_generating_set(p in (1usize..=3).prop_flat_map(points), swap in any::<bool>()) {
        let gens = to_values(&p);
        let base = closure_components(&gens).unwrap();
        // append the product of all generators, and optionally reorder
        let l = gens[0].len();
        let prod: Vec<MulValue> = (0..l).map(|i| gens.iter().fold(MulValue::one(), |acc, g| acc.mul(&g[i]))).collect();
        let mut other = gens.clone();
        other.push(prod);
        if swap {
            other.reverse();
        }
        prop_assert_eq!(closure_components(&other).unwrap(), base.clone());
        if gens.len() == 2 {
            // replace g1 by g1·g2
            let mixed: Vec<MulValue> = (0..l).map(|i| gens[0][i].mul(&gens[1][i])).collect();
            prop_assert_eq!(closure_components(&[mixed, gens[1].clone()]).unwrap(), base);
        }
    }

    #[test]
    fn pullback_obeys_the_closed_form(p in (1usize..=3).prop_flat_map(points), d in 1u64..=6) {
        let gens = to_values(&p);
        prop_assert_eq!(pullback_components(&gens, d).unwrap(), pullback_formula(&gens, d).unwrap());
        if d == 1 {
            prop_assert_eq!(pullback_components(&gens, 1).unwrap(), closure_components(&gens).unwrap());
        }
    }

    #[test]
    fn transcendental_points_pull_back_irreducibly(l in 1usize..=3, d in 1u64..=8) {
        let g: Vec<MulValue> = (0..l).map(|i| MulValue::symbol(&format!("t{i}"))).collect();
        prop_assert_eq!(pullback_components(&[g], d).unwrap(), BigInt::from(1));
    }
}
