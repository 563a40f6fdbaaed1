//! Small-integer number theory used throughout the crate: gcd/lcm, Euler phi,
//! divisors, the Kronecker symbol, and a certified primality test plus
//! Pollard–Brent splitting for arbitrary-precision integers.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

pub fn lcm_all<I: IntoIterator<Item = u64>>(it: I) -> u64 {
    it.into_iter().fold(1, lcm)
}

/// Prime factorization of a machine integer by trial division.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor_u64(n).into_iter().fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor_u64(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Kronecker symbol `(a / n)` for `n >= 0`.
pub fn kronecker(a: i64, n: u64) -> i8 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result: i8 = 1;
    let v = n.trailing_zeros();
    let mut n = n >> v;
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let a8 = a.rem_euclid(8);
        if v % 2 == 1 && (a8 == 3 || a8 == 5) {
            result = -result;
        }
    }
    // Jacobi symbol for odd n.
    let mut a = a.rem_euclid(n as i64) as u64;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Absolute conductor of `Q(sqrt(d))` for a squarefree integer `d`:
/// `|d|` when `d = 1 mod 4`, otherwise `4|d|`. `d = 1` gives 1.
pub fn quadratic_conductor(d: &BigInt) -> BigInt {
    let four = BigInt::from(4);
    if d.mod_floor(&four) == BigInt::one() {
        d.abs()
    } else {
        d.abs() * four
    }
}

/// Fundamental discriminant of `Q(sqrt(d))` for squarefree `d != 1`.
pub fn fundamental_discriminant(d: i64) -> i64 {
    if d.rem_euclid(4) == 1 {
        d
    } else {
        4 * d
    }
}

/// Largest input for which the fixed-base Miller–Rabin test below is a proof.
fn certified_limit() -> BigInt {
    // 3317044064679887385961981: first strong pseudoprime to all bases up to 41.
    "3317044064679887385961981".parse().unwrap()
}

/// Certified primality for arbitrary-precision inputs. Returns `None` when the
/// input is beyond the range where the fixed witness set is a proof.
pub fn is_prime_big(n: &BigInt) -> Option<bool> {
    if n.sign() != Sign::Plus {
        return Some(false);
    }
    if let Some(small) = n.to_u64() {
        return Some(is_prime_u64(small));
    }
    if n >= &certified_limit() {
        return None;
    }
    let one = BigInt::one();
    let n_minus = n - &one;
    let mut d = n_minus.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let a = BigInt::from(a);
        if (&a % n).is_zero() {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&BigInt::from(2), n);
            if x == n_minus {
                continue 'witness;
            }
        }
        return Some(false);
    }
    Some(true)
}

/// Pollard–Brent search for a nontrivial factor of the odd composite `n`.
/// Gives up after `budget` iterations per polynomial constant.
pub fn pollard_brent(n: &BigInt, budget: u64) -> Option<BigInt> {
    let one = BigInt::one();
    for c in 1u32..20 {
        let c = BigInt::from(c);
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut y = BigInt::from(2);
        let mut r: u64 = 1;
        let mut q = one.clone();
        let mut g = one.clone();
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut spent = 0u64;
        let m = 128u64;
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    q = (q * (&x - &y).abs()) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            r *= 2;
            spent += r;
            if spent > budget {
                break;
            }
        }
        if g == *n {
            loop {
                ys = f(&ys);
                g = (&x - &ys).abs().gcd(n);
                if g != one {
                    break;
                }
            }
        }
        if g != one && g != *n {
            return Some(g);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small_table() {
        // (2/k) for odd k: +1 iff k = +-1 mod 8
        assert_eq!(kronecker(8, 1), 1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(8, 5), -1);
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-3, 2), -1);
        assert_eq!(kronecker(12, 5), -1);
        assert_eq!(kronecker(12, 11), 1);
        assert_eq!(kronecker(6, 9), 0);
    }

    #[test]
    fn phi_and_divisors() {
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(12), 4);
        assert_eq!(euler_phi(840), 192);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..2000u64 {
            let trial = n >= 2 && factor_u64(n) == vec![(n, 1)];
            assert_eq!(is_prime_u64(n), trial, "{n}");
        }
        let m61: BigInt = (BigInt::one() << 61) - 1;
        assert_eq!(is_prime_big(&m61), Some(true));
        let big: BigInt = "18446744073709551629".parse().unwrap(); // 2^64 + 13, prime
        assert_eq!(is_prime_big(&big), Some(true));
        assert_eq!(is_prime_big(&(&big * 3)), Some(false));
    }

    #[test]
    fn brent_splits_semiprime() {
        let n = BigInt::from(1_000_003u64) * BigInt::from(999_983u64);
        let f = pollard_brent(&n, 1 << 20).unwrap();
        assert!((&n % &f).is_zero() && f != BigInt::one() && f != n);
    }

    #[test]
    fn conductors() {
        assert_eq!(quadratic_conductor(&BigInt::from(2)), BigInt::from(8));
        assert_eq!(quadratic_conductor(&BigInt::from(5)), BigInt::from(5));
        assert_eq!(quadratic_conductor(&BigInt::from(3)), BigInt::from(12));
        assert_eq!(quadratic_conductor(&BigInt::from(-3)), BigInt::from(3));
        assert_eq!(quadratic_conductor(&BigInt::from(-1)), BigInt::from(4));
        assert_eq!(quadratic_conductor(&BigInt::from(1)), BigInt::from(1));
    }
}
