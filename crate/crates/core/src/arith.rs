//! Elementary number theory over machine integers: deterministic primality,
//! factoring, Kronecker and Hilbert symbols, square classes, modular square
//! roots and GF(2) row reduction.
//!
//! Everything here is exact. Inputs are expected at "desk scale" (well inside
//! i64); intermediate products go through u128/i128 where they could overflow.

use crate::error::{Error, Result};
use num_integer::{gcd, Roots};
use serde::{Deserialize, Serialize};

/// Deterministic Miller-Rabin. The base set is known to be exact for every
/// n < 3.3 * 10^24, far beyond i64.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    is_prime_u64(n as u64)
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'base: for &a in &MR_BASES {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Sign-and-exponents form of a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub negative: bool,
    /// (prime, exponent), primes strictly increasing.
    pub primes: Vec<(i64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> i64 {
        let mut v: i128 = if self.negative { -1 } else { 1 };
        for &(p, e) in &self.primes {
            for _ in 0..e {
                v *= p as i128;
            }
        }
        v as i64
    }

    pub fn is_squarefree(&self) -> bool {
        self.primes.iter().all(|&(_, e)| e == 1)
    }
}

pub fn factorize(n: i64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::ZeroInput);
    }
    let negative = n < 0;
    let mut m = n.unsigned_abs();
    let mut out: Vec<(i64, u32)> = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p as i64, e));
        }
    }
    let mut stack = vec![m];
    let mut large: Vec<u64> = Vec::new();
    while let Some(k) = stack.pop() {
        if k == 1 {
            continue;
        }
        if is_prime_u64(k) {
            large.push(k);
        } else {
            let f = pollard_rho(k);
            stack.push(f);
            stack.push(k / f);
        }
    }
    large.sort_unstable();
    let mut i = 0;
    while i < large.len() {
        let p = large[i];
        let mut e = 0;
        while i < large.len() && large[i] == p {
            e += 1;
            i += 1;
        }
        out.push((p as i64, e));
    }
    out.sort_unstable();
    Ok(Factorization {
        negative,
        primes: out,
    })
}

/// Brent-style rho. Caller guarantees n is odd, composite and has no factor
/// below 50, so a nontrivial splitter always exists.
fn pollard_rho(n: u64) -> u64 {
    for c in 1..64u64 {
        let step = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        loop {
            x = step(x);
            y = step(step(y));
            let d = gcd(x.abs_diff(y), n);
            if d == n {
                break;
            }
            if d > 1 {
                return d;
            }
        }
    }
    unreachable!("rho failed on {n}");
}

/// Kronecker symbol (a/n), extended to all integers.
/// (a/0) is 1 for a = +-1 and 0 otherwise; (a/-1) is the sign character.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut a = a;
    if n % 2 == 0 {
        if a % 2 == 0 {
            return 0;
        }
        let t = n.trailing_zeros();
        n >>= t;
        if t % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
    }
    // n is now odd and positive: Jacobi.
    a = a.rem_euclid(n);
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// A nonzero rational square class, stored as its signed squarefree
/// representative. -11 and 11 are distinct classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SquareClass(i64);

impl SquareClass {
    pub const ONE: SquareClass = SquareClass(1);

    pub fn new(n: i64) -> Result<Self> {
        squarefree_part(n)
    }

    /// Wraps a value already known to be squarefree.
    pub(crate) fn from_squarefree(n: i64) -> Self {
        debug_assert!(n != 0);
        SquareClass(n)
    }

    pub fn repr(self) -> i64 {
        self.0
    }
}

impl std::ops::Mul for SquareClass {
    type Output = SquareClass;

    // sf(a*b) = (a/g)*(b/g) with g = gcd: both cofactors are squarefree and
    // coprime, and the g^2 dropped is a square.
    fn mul(self, rhs: SquareClass) -> SquareClass {
        let g = gcd(self.0, rhs.0);
        SquareClass((self.0 / g).checked_mul(rhs.0 / g).expect("square class overflow"))
    }
}

impl std::fmt::Display for SquareClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Signed squarefree part: the unique squarefree r with n = r * k^2.
pub fn squarefree_part(n: i64) -> Result<SquareClass> {
    let f = factorize(n)?;
    let mut r: i64 = if f.negative { -1 } else { 1 };
    for &(p, e) in &f.primes {
        if e % 2 == 1 {
            r = r.checked_mul(p).ok_or(Error::Overflow("squarefree_part"))?;
        }
    }
    Ok(SquareClass(r))
}

/// Rank of a rectangular 0/1 matrix over GF(2).
///
/// Panics on ragged input or entries other than 0/1: those are programmer
/// errors, not data.
pub fn gf2_rank(rows: &[Vec<u8>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let width = rows[0].len();
    let mut packed: Vec<u128> = rows
        .iter()
        .map(|row| {
            assert!(row.len() == width, "gf2_rank: ragged matrix");
            assert!(width <= 128, "gf2_rank: width > 128 unsupported");
            row.iter().enumerate().fold(0u128, |acc, (j, &bit)| {
                assert!(bit <= 1, "gf2_rank: entry not a bit");
                acc | ((bit as u128) << j)
            })
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let mask = 1u128 << col;
        if let Some(pivot) = (rank..packed.len()).find(|&i| packed[i] & mask != 0) {
            packed.swap(rank, pivot);
            let pivot_row = packed[rank];
            for (i, row) in packed.iter_mut().enumerate() {
                if i != rank && *row & mask != 0 {
                    *row ^= pivot_row;
                }
            }
            rank += 1;
        }
    }
    rank
}

pub(crate) fn is_square_i64(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let s = n.sqrt();
    s * s == n
}

pub(crate) fn is_square_i128(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let s = n.sqrt();
    s * s == n
}

/// (g, x, y) with a*x + b*y = g = gcd(a, b), g >= 0.
pub(crate) fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i128, 0i128);
    let (mut y0, mut y1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (x0, x1) = (x1, x0 - q * x1);
        (y0, y1) = (y1, y0 - q * y1);
    }
    if r0 < 0 {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Square root of a mod odd prime p (Tonelli-Shanks). None if a is a
/// non-residue; Some(0) for a = 0 mod p.
pub(crate) fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // Tonelli-Shanks for p = 1 mod 4.
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = (2..)
        .find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1)
        .unwrap();
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let i = (1..m)
            .scan(t, |acc, i| {
                *acc = mul_mod(*acc, *acc, p);
                Some((i, *acc))
            })
            .find(|&(_, v)| v == 1)
            .map(|(i, _)| i)
            .expect("tonelli: order not found");
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// All x in [0, m) with x^2 = a (mod m). m >= 1. Exact, by lifting roots
/// through each prime power and CRT; handles non-coprime a (needed for
/// square roots of discriminants divisible by ramified primes).
pub(crate) fn sqrt_mod(a: i64, m: i64) -> Vec<i64> {
    assert!(m >= 1);
    if m == 1 {
        return vec![0];
    }
    let fact = factorize(m).expect("m >= 1");
    let mut roots: Vec<i64> = vec![0];
    let mut modulus: i64 = 1;
    for &(p, e) in &fact.primes {
        let pe = p.pow(e);
        let local = sqrt_mod_prime_power(a.rem_euclid(pe) as u64, p as u64, e);
        if local.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(roots.len() * local.len());
        for &r in &roots {
            for &s in &local {
                next.push(crt_pair(r, modulus, s as i64, pe));
            }
        }
        roots = next;
        modulus *= pe;
    }
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// Roots of x^2 = a (mod p^e), found mod p and lifted one level at a time.
/// The filtering lift is uniform over singular cases (p | a), where plain
/// Hensel does not apply.
fn sqrt_mod_prime_power(a: u64, p: u64, e: u32) -> Vec<u64> {
    let mut roots: Vec<u64> = if p == 2 {
        (0..2).filter(|x| (x * x) % 2 == a % 2).collect()
    } else {
        match sqrt_mod_prime(a, p) {
            None => Vec::new(),
            Some(0) => vec![0],
            Some(r) => vec![r, p - r],
        }
    };
    let mut pk = p;
    for _ in 1..e {
        let pk1 = pk * p;
        let target = a % pk1;
        let mut next = Vec::new();
        for &r in &roots {
            let mut cand = r;
            for _ in 0..p {
                if mul_mod(cand, cand, pk1) == target {
                    next.push(cand);
                }
                cand += pk;
            }
        }
        next.sort_unstable();
        next.dedup();
        roots = next;
        if roots.is_empty() {
            break;
        }
        pk = pk1;
    }
    roots
}

/// x = r1 (mod m1), x = r2 (mod m2) for coprime moduli.
fn crt_pair(r1: i64, m1: i64, r2: i64, m2: i64) -> i64 {
    let (g, inv, _) = ext_gcd(m1 as i128, m2 as i128);
    debug_assert!(g == 1);
    let m = m1 as i128 * m2 as i128;
    let diff = (r2 as i128 - r1 as i128).rem_euclid(m2 as i128);
    let x = (r1 as i128 + (diff * inv).rem_euclid(m2 as i128) * m1 as i128).rem_euclid(m);
    x as i64
}

/// Hilbert symbol (a, b)_p for p = 2 or an odd prime. a, b nonzero.
pub fn hilbert(a: i64, b: i64, p: i64) -> i32 {
    assert!(a != 0 && b != 0, "hilbert symbol needs nonzero arguments");
    assert!(p == 2 || (p > 2 && is_prime(p)), "p must be prime");
    let split = |n: i64| -> (u32, i64) {
        let mut v = 0;
        let mut u = n;
        while u % p == 0 {
            u /= p;
            v += 1;
        }
        (v, u)
    };
    let (alpha, u) = split(a);
    let (beta, v) = split(b);
    if p == 2 {
        let eps = |x: i64| (x.rem_euclid(8) as u32 - 1) / 2 % 2; // (x-1)/2 mod 2
        let omega = |x: i64| match x.rem_euclid(8) {
            1 | 7 => 0u32,
            _ => 1,
        }; // (x^2-1)/8 mod 2
        let exp = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
        if exp % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        let mut r = 1i32;
        if alpha % 2 == 1 && beta % 2 == 1 {
            r *= kronecker(-1, p);
        }
        if beta % 2 == 1 {
            r *= kronecker(u, p);
        }
        if alpha % 2 == 1 {
            r *= kronecker(v, p);
        }
        r
    }
}

/// Odd primes up to and including n, by sieve.
pub(crate) fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    if n >= 1 {
        sieve[1] = false;
    }
    let mut p = 2;
    while p * p <= n {
        if sieve[p] {
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}
