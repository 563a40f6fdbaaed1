//! Character lattices of finitely generated subgroups of the torus `G_m^l`
//! and the component counts of their Zariski closures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::arith::lcm;
use crate::lattice::{group_index, hnf, left_kernel, saturate, Atom, ExponentLattice, Index};
use crate::value::MulValue;
use crate::{Error, Result};

/// Generators of a subgroup of `G_m^l`, each a point with `l` coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusSubgroupData {
    pub generators: Vec<Vec<MulValue>>,
    pub relation_lattice: ExponentLattice,
}

impl TorusSubgroupData {
    pub fn new(generators: Vec<Vec<MulValue>>) -> Result<Self> {
        let relation_lattice = relation_lattice(&generators)?;
        Ok(TorusSubgroupData {
            generators,
            relation_lattice,
        })
    }
}

pub fn coordinate_support(l: usize) -> Vec<Atom> {
    (1..=l).map(|i| Atom::Symbol(format!("x{i}"))).collect()
}

fn dimension(gens: &[Vec<MulValue>]) -> Result<usize> {
    let l = gens.first().map_or(0, |g| g.len());
    if gens.iter().any(|g| g.len() != l) {
        return Err(Error::ShapeMismatch("generator points differ in dimension".into()));
    }
    Ok(l)
}

fn scale(q: &BigRational, w: u64) -> BigInt {
    (q * BigRational::from_integer(BigInt::from(w))).to_integer()
}

/// All `n ∈ Z^l` with `Π_i g_i^{n_i} = 1` for every generator `g`.
pub fn relation_lattice(gens: &[Vec<MulValue>]) -> Result<ExponentLattice> {
    let l = dimension(gens)?;
    let support = coordinate_support(l);
    if gens.is_empty() {
        // the trivial group: every character vanishes
        let rows = (0..l)
            .map(|i| (0..l).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect();
        return ExponentLattice::new(support, rows);
    }
    // unknowns: n_1..n_l then one slack per generator for the torsion congruence
    let mut columns: Vec<Vec<BigInt>> = Vec::new();
    for (j, g) in gens.iter().enumerate() {
        let mut atoms: Vec<&Atom> = g.iter().flat_map(|x| x.exps().keys()).collect();
        atoms.sort();
        atoms.dedup();
        for a in atoms {
            let w = g
                .iter()
                .fold(1u64, |acc, x| lcm(acc, x.exponent(a).denom().try_into().unwrap_or(1)));
            let mut col: Vec<BigInt> = g.iter().map(|x| scale(&x.exponent(a), w)).collect();
            col.extend(std::iter::repeat_n(BigInt::zero(), gens.len()));
            columns.push(col);
        }
        let t = g.iter().fold(1u64, |acc, x| lcm(acc, x.torsion_order()));
        if t > 1 {
            let mut col: Vec<BigInt> = g.iter().map(|x| scale(x.torsion(), t)).collect();
            col.extend((0..gens.len()).map(|k| if k == j { BigInt::from(t) } else { BigInt::zero() }));
            columns.push(col);
        }
    }
    let unknowns = l + gens.len();
    // matrix with one row per unknown and one column per equation
    let matrix: Vec<Vec<BigInt>> = (0..unknowns)
        .map(|u| columns.iter().map(|c| c[u].clone()).collect())
        .collect();
    let kernel = left_kernel(&matrix, columns.len());
    let projected: Vec<Vec<BigInt>> = kernel.into_iter().map(|v| v[..l].to_vec()).collect();
    ExponentLattice::new(support, hnf(&projected, l))
}

fn index_in_saturation(lat: &ExponentLattice) -> Result<BigInt> {
    match group_index(lat, &saturate(lat))? {
        Index::Finite(i) => Ok(i),
        Index::Infinite => unreachable!("saturation keeps the rank"),
    }
}

/// Number of irreducible components of the Zariski closure of the subgroup.
pub fn closure_components(gens: &[Vec<MulValue>]) -> Result<BigInt> {
    index_in_saturation(&relation_lattice(gens)?)
}

/// Components of the preimage of the closure under `x ↦ x^d`.
pub fn pullback_components(gens: &[Vec<MulValue>], d: u64) -> Result<BigInt> {
    if d == 0 {
        return Err(Error::Malformed("d must be positive".into()));
    }
    let lat = relation_lattice(gens)?;
    let scaled = ExponentLattice::new(
        lat.support.clone(),
        lat.rows.iter().map(|r| r.iter().map(|x| x * d).collect()).collect(),
    )?;
    index_in_saturation(&scaled)
}

/// `d^{rank Λ} · closure_components`, the closed form of the pullback count.
pub fn pullback_formula(gens: &[Vec<MulValue>], d: u64) -> Result<BigInt> {
    let lat = relation_lattice(gens)?;
    let base = index_in_saturation(&lat)?;
    Ok(num_traits::pow(BigInt::from(d), lat.rank()) * base)
}
