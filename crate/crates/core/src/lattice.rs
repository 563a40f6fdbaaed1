//! Integer row lattices: Hermite and Smith normal forms, integer kernels,
//! saturation, membership and subgroup index.
//!
//! Matrices are plain `Vec<Vec<BigInt>>` in row-major order. The Hermite form
//! used everywhere is the row echelon form with positive pivots, pivot columns
//! strictly increasing, and every entry above a pivot reduced into
//! `[0, pivot)`. Two row matrices span the same lattice exactly when their
//! Hermite forms coincide.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::factored::FactoredRational;
use crate::{Error, Result};

pub type Matrix = Vec<Vec<BigInt>>;
pub type IntVector = Vec<BigInt>;

/// A coordinate of an exponent lattice: a rational prime or a formal symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Prime(BigInt),
    Symbol(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Prime(p) => write!(f, "{p}"),
            Atom::Symbol(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.parse::<BigInt>() {
            Ok(p) => {
                if crate::arith::is_prime_big(&p) != Some(true) {
                    return Err(D::Error::custom(format!("support entry {p} is not prime")));
                }
                Ok(Atom::Prime(p))
            }
            Err(_) if !s.is_empty() => Ok(Atom::Symbol(s)),
            Err(_) => Err(D::Error::custom("empty support entry")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentLattice {
    pub support: Vec<Atom>,
    #[serde(serialize_with = "ser_matrix", deserialize_with = "de_matrix")]
    pub rows: Matrix,
}

/// Result of a subgroup index computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Index {
    Finite(BigInt),
    Infinite,
}

impl ExponentLattice {
    pub fn new(support: Vec<Atom>, rows: Matrix) -> Result<Self> {
        for r in &rows {
            if r.len() != support.len() {
                return Err(Error::SupportMismatch {
                    expected: support.len(),
                    got: r.len(),
                });
            }
        }
        Ok(ExponentLattice { support, rows })
    }

    pub fn from_i64(support: Vec<Atom>, rows: &[&[i64]]) -> Result<Self> {
        Self::new(
            support,
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    /// Lattice spanned by the prime-exponent vectors of a tuple of rationals.
    /// The sign of each entry is dropped; it lives in the torsion part.
    pub fn from_tuple(t: &[FactoredRational]) -> Self {
        let mut primes: Vec<BigInt> = t.iter().flat_map(|a| a.primes().cloned()).collect();
        primes.sort();
        primes.dedup();
        let rows = t
            .iter()
            .map(|a| primes.iter().map(|p| BigInt::from(a.exponent(p))).collect())
            .collect();
        ExponentLattice {
            support: primes.into_iter().map(Atom::Prime).collect(),
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn rank(&self) -> usize {
        rank(&self.rows)
    }

    /// Hermite form with zero rows removed.
    pub fn canonical(&self) -> ExponentLattice {
        ExponentLattice {
            support: self.support.clone(),
            rows: hnf(&self.rows, self.dim()),
        }
    }

    pub fn same_subgroup(&self, other: &ExponentLattice) -> bool {
        self.support == other.support && self.canonical().rows == other.canonical().rows
    }

    fn check_support(&self, other: &ExponentLattice) -> Result<()> {
        if self.support != other.support {
            return Err(Error::SupportMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

/// Canonical form plus the nonzero Smith invariants `d_1 | d_2 | ...`.
pub fn normal_form(l: &ExponentLattice) -> (ExponentLattice, Vec<BigInt>) {
    (l.canonical(), smith_diagonal(&l.rows))
}

/// Smallest lattice containing `l` with torsion-free quotient.
pub fn saturate(l: &ExponentLattice) -> ExponentLattice {
    ExponentLattice {
        support: l.support.clone(),
        rows: saturate_rows(&l.rows, l.dim()),
    }
}

/// Integer coefficients `c` with `c · rows = v`, if any.
pub fn member(l: &ExponentLattice, v: &[BigInt]) -> Result<Option<IntVector>> {
    if v.len() != l.dim() {
        return Err(Error::SupportMismatch {
            expected: l.dim(),
            got: v.len(),
        });
    }
    Ok(solve_left(&l.rows, v, l.dim()))
}

pub fn group_index(sub: &ExponentLattice, sup: &ExponentLattice) -> Result<Index> {
    sub.check_support(sup)?;
    let n = sup.dim();
    let sup_h = hnf(&sup.rows, n);
    let sub_h = hnf(&sub.rows, n);
    let mut coords = Vec::with_capacity(sub_h.len());
    for r in &sub_h {
        match solve_left(&sup_h, r, n) {
            Some(c) => coords.push(c),
            None => return Err(Error::NotASubgroup),
        }
    }
    if sub_h.len() != sup_h.len() {
        return Ok(Index::Infinite);
    }
    let d = smith_diagonal(&coords);
    Ok(Index::Finite(d.iter().fold(BigInt::one(), |acc, x| acc * x)))
}

/// True iff the rows of the tuple's exponent matrix are linearly independent.
/// A relation `prod b_i^{n_i} = ±1` squares to an exact relation, so the sign
/// column never changes the verdict, and a torsion entry always gives a zero row.
pub fn is_mult_independent(t: &[FactoredRational]) -> bool {
    let l = ExponentLattice::from_tuple(t);
    l.rank() == t.len()
}

// ---------------------------------------------------------------------------
// Matrix kernels
// ---------------------------------------------------------------------------

pub fn to_matrix(rows: &[Vec<i64>]) -> Matrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn transpose(a: &Matrix, cols: usize) -> Matrix {
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn identity(m: usize) -> Matrix {
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

fn row_axpy(a: &mut Matrix, dst: usize, src: usize, q: &BigInt) {
    // a[dst] -= q * a[src]
    if q.is_zero() {
        return;
    }
    let s = a[src].clone();
    for (x, y) in a[dst].iter_mut().zip(s.iter()) {
        *x -= q * y;
    }
}

/// Hermite reduction with transform: returns `(h, u, rank)` where `u` is
/// unimodular, `u · a = h`, the first `rank` rows of `h` are its Hermite form
/// and the remaining rows are zero.
pub fn hnf_with_transform(a: &Matrix, cols: usize) -> (Matrix, Matrix, usize) {
    let m = a.len();
    let mut h = a.clone();
    let mut u = identity(m);
    let mut r = 0usize;
    for j in 0..cols {
        if r == m {
            break;
        }
        loop {
            // bring the smallest nonzero entry of column j (rows >= r) to row r
            let best = (r..m)
                .filter(|&i| !h[i][j].is_zero())
                .min_by(|&x, &y| h[x][j].abs().cmp(&h[y][j].abs()));
            let Some(b) = best else { break };
            h.swap(r, b);
            u.swap(r, b);
            let mut clean = true;
            for i in r + 1..m {
                if !h[i][j].is_zero() {
                    let q = h[i][j].div_floor(&h[r][j]);
                    row_axpy(&mut h, i, r, &q);
                    row_axpy(&mut u, i, r, &q);
                    if !h[i][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if h.get(r).is_none_or(|row| row[j].is_zero()) {
            continue;
        }
        if h[r][j].is_negative() {
            for x in h[r].iter_mut() {
                *x = -x.clone();
            }
            for x in u[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let q = h[i][j].div_floor(&h[r][j]);
            row_axpy(&mut h, i, r, &q);
            row_axpy(&mut u, i, r, &q);
        }
        r += 1;
    }
    (h, u, r)
}

/// Hermite form with zero rows dropped.
pub fn hnf(a: &Matrix, cols: usize) -> Matrix {
    let (mut h, _, r) = hnf_with_transform(a, cols);
    h.truncate(r);
    h
}

pub fn rank(a: &Matrix) -> usize {
    let cols = a.first().map_or(0, |r| r.len());
    hnf_with_transform(a, cols).2
}

/// Basis of `{x in Z^m : x · a = 0}` for an `m × cols` matrix.
pub fn left_kernel(a: &Matrix, cols: usize) -> Matrix {
    let (_, u, r) = hnf_with_transform(a, cols);
    u.into_iter().skip(r).collect()
}

/// Basis of `{x in Z^cols : a · x = 0}`.
pub fn right_kernel(a: &Matrix, cols: usize) -> Matrix {
    left_kernel(&transpose(a, cols), a.len())
}

pub fn saturate_rows(a: &Matrix, cols: usize) -> Matrix {
    let k = right_kernel(a, cols);
    hnf(&right_kernel(&k, cols), cols)
}

/// Solves `c · a = v` over the integers.
pub fn solve_left(a: &Matrix, v: &[BigInt], cols: usize) -> Option<IntVector> {
    LeftSolver::new(a, cols).solve(v)
}

/// Precomputed Hermite data for repeated solves of `c · a = v` with a fixed `a`.
pub struct LeftSolver {
    h: Matrix,
    u: Matrix,
    rank: usize,
    pivots: Vec<usize>,
    rows: usize,
}

impl LeftSolver {
    pub fn new(a: &Matrix, cols: usize) -> Self {
        let (h, u, rank) = hnf_with_transform(a, cols);
        let pivots = h
            .iter()
            .take(rank)
            .map(|row| row.iter().position(|x| !x.is_zero()).unwrap())
            .collect();
        LeftSolver {
            h,
            u,
            rank,
            pivots,
            rows: a.len(),
        }
    }

    pub fn solve(&self, v: &[BigInt]) -> Option<IntVector> {
        let mut rest: Vec<BigInt> = v.to_vec();
        let mut y = vec![BigInt::zero(); self.rank];
        let mut done = 0usize;
        for (i, row) in self.h.iter().take(self.rank).enumerate() {
            let j = self.pivots[i];
            if rest[done..j].iter().any(|x| !x.is_zero()) {
                return None;
            }
            let (q, rem) = rest[j].div_rem(&row[j]);
            if !rem.is_zero() {
                return None;
            }
            for (x, hx) in rest.iter_mut().zip(row.iter()).skip(j) {
                *x -= &q * hx;
            }
            y[i] = q;
            done = j + 1;
        }
        if rest.iter().any(|x| !x.is_zero()) {
            return None;
        }
        let mut c = vec![BigInt::zero(); self.rows];
        for (i, yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += yi * &self.u[i][k];
            }
        }
        Some(c)
    }
}

/// Nonzero Smith invariants, each dividing the next.
pub fn smith_diagonal(a: &Matrix) -> Vec<BigInt> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let mut a = a.clone();
    let mut out = Vec::new();
    for t in 0..m.min(n) {
        // choose any nonzero entry of the trailing block as the starting pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..m {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    row_axpy(&mut a, i, t, &q);
                    if !a[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..n {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut() {
                        let s = row[t].clone();
                        row[j] -= &q * s;
                    }
                    if !a[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                // move the smallest remaining entry of row/column t to the pivot
                let mut best = (t, t);
                for i in t + 1..m {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..n {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            let p = a[t][t].clone();
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !(&a[i][j] % &p).is_zero()));
            match bad {
                Some(i) => {
                    let ones = BigInt::from(-1);
                    row_axpy(&mut a, t, i, &ones);
                }
                None => break,
            }
        }
        out.push(a[t][t].abs());
    }
    out
}

fn ser_matrix<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<serde_json_like::Int>> = m
        .iter()
        .map(|r| r.iter().map(serde_json_like::Int::from).collect())
        .collect();
    rows.serialize(s)
}

fn de_matrix<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
    let rows: Vec<Vec<serde_json_like::Int>> = Vec::deserialize(d)?;
    Ok(rows.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect())
}

/// Integers that serialize as plain numbers when they fit in 64 bits and as
/// decimal strings otherwise.
pub mod serde_json_like {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct Int(pub BigInt);

    impl From<&BigInt> for Int {
        fn from(b: &BigInt) -> Self {
            Int(b.clone())
        }
    }

    impl Serialize for Int {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            match self.0.to_i64() {
                Some(v) => s.serialize_i64(v),
                None => s.serialize_str(&self.0.to_string()),
            }
        }
    }

    pub fn int<S: Serializer>(b: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
        Int(b.clone()).serialize(s)
    }

    pub fn ints<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(Int::from))
    }

    pub fn opt_ints<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().map(Int::from).collect::<Vec<_>>())
            .serialize(s)
    }

    impl<'de> Deserialize<'de> for Int {
        fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            #[derive(Deserialize)]
            #[serde(untagged)]
            enum Raw {
                N(i64),
                S(String),
            }
            match Raw::deserialize(d)? {
                Raw::N(v) => Ok(Int(BigInt::from(v))),
                Raw::S(s) => s.parse().map(Int).map_err(D::Error::custom),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(rows: &[&[i64]]) -> Matrix {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    fn lat(rows: &[&[i64]]) -> ExponentLattice {
        let n = rows.first().map_or(0, |r| r.len());
        let support = [2u64, 3, 5, 7, 11][..n]
            .iter()
            .map(|&p| Atom::Prime(BigInt::from(p)))
            .collect();
        ExponentLattice::from_i64(support, rows).unwrap()
    }

    /// Smith invariants of a 2x2 matrix by the determinantal-divisor rule.
    fn smith_oracle_2x2(a: &[[i64; 2]; 2]) -> Vec<i64> {
        let g = a.iter().flatten().fold(0i64, |g, x| g.gcd(x));
        let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs();
        match (g, det) {
            (0, _) => vec![],
            (g, 0) => vec![g],
            (g, d) => vec![g, d / g],
        }
    }

    #[test]
    fn normal_form_examples() {
        let ints = |v: Vec<BigInt>| v.into_iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>();
        assert_eq!(ints(normal_form(&lat(&[&[2, 0], &[0, 2]])).1), vec![2, 2]);
        assert_eq!(ints(normal_form(&lat(&[&[1, 0]])).1), vec![1]);
        assert_eq!(ints(normal_form(&lat(&[&[2, 4]])).1), vec![2]);
    }

    #[test]
    fn smith_matches_determinantal_oracle() {
        for a in -4..=4i64 {
            for b in -4..=4 {
                for c in -4..=4 {
                    for d in [-3i64, 0, 2, 5] {
                        let m = [[a, b], [c, d]];
                        let got: Vec<i64> = smith_diagonal(&big(&[&[a, b], &[c, d]]))
                            .into_iter()
                            .map(|x| x.to_i64().unwrap())
                            .collect();
                        assert_eq!(got, smith_oracle_2x2(&m), "{m:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn saturation_examples() {
        assert_eq!(saturate(&lat(&[&[2, 0], &[0, 2]])).rows, big(&[&[1, 0], &[0, 1]]));
        assert_eq!(saturate(&lat(&[&[1, 0]])).rows, big(&[&[1, 0]]));
        assert_eq!(saturate(&lat(&[&[2, 4]])).rows, big(&[&[1, 2]]));
        assert_eq!(saturate(&lat(&[&[0, 0]])).rows, Matrix::new());
    }

    #[test]
    fn saturation_matches_box_scan() {
        // Smallest pure superlattice: every vector in [-2,2]^2 some multiple of
        // which lies in L must lie in saturate(L).
        let l = lat(&[&[2, 0], &[0, 2]]);
        let s = saturate(&l);
        for x in -2..=2i64 {
            for y in -2..=2i64 {
                let v = vec![BigInt::from(x), BigInt::from(y)];
                let in_sat = member(&s, &v).unwrap().is_some();
                let some_multiple = (1..=4).any(|k| {
                    let kv: Vec<BigInt> = v.iter().map(|e| e * k).collect();
                    member(&l, &kv).unwrap().is_some()
                });
                assert_eq!(in_sat, some_multiple);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let l = lat(&[&[1, 2]]);
        let c = member(&l, &[BigInt::from(2), BigInt::from(4)]).unwrap();
        assert_eq!(c, Some(vec![BigInt::from(2)]));
        assert_eq!(member(&l, &[BigInt::from(1), BigInt::from(1)]).unwrap(), None);
        assert_eq!(
            member(&l, &[BigInt::zero(), BigInt::zero()]).unwrap(),
            Some(vec![BigInt::zero()])
        );
        assert!(matches!(
            member(&l, &[BigInt::one()]),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn index_examples() {
        let z2 = lat(&[&[1, 0], &[0, 1]]);
        let sub = lat(&[&[2, 0], &[0, 2]]);
        assert_eq!(group_index(&sub, &z2).unwrap(), Index::Finite(BigInt::from(4)));
        assert_eq!(group_index(&z2, &z2).unwrap(), Index::Finite(BigInt::one()));
        assert_eq!(
            group_index(&lat(&[&[2, 4]]), &lat(&[&[1, 2]])).unwrap(),
            Index::Finite(BigInt::from(2))
        );
        assert_eq!(group_index(&lat(&[&[2, 4]]), &z2).unwrap(), Index::Infinite);
        assert_eq!(group_index(&z2, &sub), Err(Error::NotASubgroup));
    }

    #[test]
    fn independence_examples() {
        let f = |v: &[i64]| {
            v.iter()
                .map(|&x| FactoredRational::from_i64(x).unwrap())
                .collect::<Vec<_>>()
        };
        assert!(is_mult_independent(&f(&[2, 3, 5])));
        assert!(!is_mult_independent(&f(&[2, 8])));
        assert!(!is_mult_independent(&f(&[-1])));
        assert!(is_mult_independent(&f(&[-2, 6])));
    }

    #[test]
    fn json_round_trip() {
        let l = lat(&[&[2, 4]]);
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"{"support":["2","3"],"rows":[[2,4]]}"#);
        let back: ExponentLattice = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
