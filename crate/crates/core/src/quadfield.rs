//! Real quadratic fields Q(sqrt d): discriminant, fundamental unit by the
//! continued fraction of sqrt d, exact norm equations through the form class
//! group, and classification of the prime triples (p1, q1, q2) this crate
//! studies.

use crate::arith::{factorize, is_prime, kronecker};
use crate::error::{Error, Result};
use crate::forms::{self, FormClassGroup};
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadField {
    /// Squarefree radicand > 1.
    pub d: i64,
    /// Field discriminant: d if d = 1 mod 4, else 4d.
    pub disc: i64,
}

pub fn make_field(d: i64) -> Result<QuadField> {
    if d <= 1 {
        return Err(Error::BadRadicand(d));
    }
    if d >= 1 << 44 {
        return Err(Error::Overflow("radicand"));
    }
    if !factorize(d)?.is_squarefree() {
        return Err(Error::BadRadicand(d));
    }
    let disc = if d % 4 == 1 { d } else { 4 * d };
    Ok(QuadField { d, disc })
}

impl QuadField {
    pub fn ramified_primes(&self) -> Vec<i64> {
        forms::ramified_primes(self.disc)
    }
}

/// Fundamental unit eps = (t + u sqrt(d)) / 2 with t = u = 0 mod 2 exactly
/// when eps lies in Z[sqrt d].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundUnit {
    pub d: i64,
    pub t: BigInt,
    pub u: BigInt,
    /// Norm of eps: (t^2 - d u^2)/4, always 1 or -1.
    pub norm: i8,
}

impl FundUnit {
    pub fn is_half_integer(&self) -> bool {
        self.t.is_odd()
    }
}

impl std::fmt::Display for FundUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_half_integer() {
            write!(f, "({} + {}*sqrt({}))/2", self.t, self.u, self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", &self.t / 2, &self.u / 2, self.d)
        }
    }
}

/// Fundamental unit by the continued fraction expansion of sqrt d. The
/// convergent at the end of the first period gives the fundamental unit of
/// Z[sqrt d]; for d = 1 mod 4 the unit group of the maximal order can be 3
/// times larger, which is caught by an exact cube test on the trace.
pub fn fundamental_unit(k: &QuadField) -> FundUnit {
    let d = k.d;
    let s = d.sqrt();
    debug_assert!(s * s != d);
    // P, Q, a: the standard sqrt d expansion; A, B: convergent numerators
    // and denominators.
    let (mut p, mut q) = (0i64, 1i64);
    let mut a = s;
    let (mut a_prev, mut a_cur) = (BigInt::one(), BigInt::from(s));
    let (mut b_prev, mut b_cur) = (BigInt::zero(), BigInt::one());
    let mut period = 0usize;
    loop {
        p = a * q - p;
        q = (d - p * p) / q;
        period += 1;
        if q == 1 {
            break;
        }
        a = (s + p) / q;
        let a_next = &a_cur * a + &a_prev;
        let b_next = &b_cur * a + &b_prev;
        (a_prev, a_cur) = (a_cur, a_next);
        (b_prev, b_cur) = (b_cur, b_next);
        assert!(period < 100_000_000, "period of sqrt {d} did not close");
    }
    let norm: i8 = if period % 2 == 1 { -1 } else { 1 };
    let big_a = a_cur;
    let big_b = b_cur;
    debug_assert!(
        &big_a * &big_a - d * &big_b * &big_b == BigInt::from(norm),
        "convergent is not a unit for d = {d}"
    );
    if d % 4 == 1 {
        if let Some(unit) = half_integer_cube_root(d, &big_a, &big_b, norm) {
            return unit;
        }
    }
    FundUnit {
        d,
        t: 2 * big_a,
        u: 2 * big_b,
        norm,
    }
}

/// If A + B sqrt(d) = ((t + u sqrt d)/2)^3 for odd t, u, return that cube
/// root. The trace identity t^3 - 3nt = 2A pins t to within 1 of the cube
/// root of 2A, so an exact integer cube root plus a small window decides.
fn half_integer_cube_root(d: i64, big_a: &BigInt, big_b: &BigInt, norm: i8) -> Option<FundUnit> {
    let n = BigInt::from(norm);
    let two_a: BigInt = 2 * big_a;
    let pivot = two_a.cbrt();
    for off in -2i64..=2 {
        let t = &pivot + off;
        if t <= BigInt::zero() || t.is_even() {
            continue;
        }
        if &t * &t * &t - 3 * &n * &t != two_a {
            continue;
        }
        let denom = &t * &t - &n;
        let two_b: BigInt = 2 * big_b;
        if (&two_b % &denom).is_zero() {
            let u = two_b / &denom;
            if u.is_odd() && &t * &t - d * &u * &u == 4 * &n {
                // exact cube check on both components
                debug_assert!(&t * &t * &t + 3 * d * &t * &u * &u == 8 * big_a);
                debug_assert!(3 * &t * &t * &u + d * &u * &u * &u == 8 * big_b);
                return Some(FundUnit { d, t, u, norm });
            }
        }
    }
    None
}

pub fn unit_norm(k: &QuadField) -> i8 {
    fundamental_unit(k).norm
}

/// Product in the ring of half-integer pairs (t + u sqrt d)/2.
pub(crate) fn unit_mul(x: (&BigInt, &BigInt), y: (&BigInt, &BigInt), d: i64) -> (BigInt, BigInt) {
    let t = x.0 * y.0 + d * x.1 * y.1;
    let u = x.0 * y.1 + x.1 * y.0;
    debug_assert!(t.is_even() && u.is_even());
    (t / 2, u / 2)
}

pub(crate) fn unit_pow(base: (&BigInt, &BigInt), e: u32, d: i64) -> (BigInt, BigInt) {
    let mut acc = (BigInt::from(2), BigInt::zero());
    for _ in 0..e {
        acc = unit_mul((&acc.0, &acc.1), base, d);
    }
    acc
}

/// Is eps = eta^k for some unit eta and k >= 2? The returned fundamental
/// unit must never be; used as a verification utility. Exact: candidate
/// traces come from integer k-th roots, candidates are confirmed by exact
/// powering.
pub fn is_proper_power(fu: &FundUnit, k_field: &QuadField) -> bool {
    let d = k_field.d;
    // eta >= golden ratio, so k <= log_phi(eps) ~ 1.45 * bits(t)
    let max_k = (fu.t.bits() as f64 * 1.45) as u32 + 3;
    for k in 2..=max_k {
        if !primal(k) {
            continue;
        }
        for n_eta in [1i8, -1] {
            if (n_eta as i64).pow(k) != fu.norm as i64 {
                continue;
            }
            let pivot = fu.t.nth_root(k);
            for off in -2i64..=2 {
                let a = &pivot + off;
                if a < BigInt::one() {
                    continue;
                }
                // b^2 = (a^2 - 4n)/d
                let num: BigInt = &a * &a - 4 * BigInt::from(n_eta);
                if (&num % d) == BigInt::zero() {
                    let b2: BigInt = num / d;
                    if b2 > BigInt::zero() {
                        let b = b2.sqrt();
                        if &b * &b == b2 && unit_pow((&a, &b), k, d) == (fu.t.clone(), fu.u.clone())
                        {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

fn primal(k: u32) -> bool {
    k >= 2 && (2..k).take_while(|p| p * p <= k).all(|p| k % p != 0)
}

/// Solve a^2 - d b^2 = 4n exactly, witness included. Equivalent to n being
/// a norm from the maximal order. Delegates to primitive representations by
/// the principal form of the field discriminant, over all square parts g^2.
pub fn norm_equation(k: &QuadField, n: i64) -> Result<Option<(BigInt, BigInt)>> {
    if n == 0 {
        return Err(Error::ZeroInput);
    }
    let mut g = 1i64;
    while g * g <= n.abs() {
        if n % (g * g) == 0 {
            if let Some((x, y)) = forms::represent_principal(k.disc, n / (g * g))? {
                let (a, b) = rep_to_element(k, &x, &y, g);
                assert!(
                    &a * &a - k.d * &b * &b == BigInt::from(4) * n,
                    "norm equation witness failed for d = {}, n = {n}",
                    k.d
                );
                // only the squares matter, so hand back the nonnegative pair
                return Ok(Some((a.abs(), b.abs())));
            }
        }
        g += 1;
    }
    Ok(None)
}

/// Same decision as norm_equation but without a witness, reusing an already
/// computed class group of the field discriminant.
pub fn norm_equation_solvable(k: &QuadField, group: &FormClassGroup, n: i64) -> Result<bool> {
    assert_eq!(group.disc(), k.disc);
    if n == 0 {
        return Err(Error::ZeroInput);
    }
    let mut g = 1i64;
    while g * g <= n.abs() {
        if n % (g * g) == 0 && group.represents_primitively(n / (g * g))? {
            return Ok(true);
        }
        g += 1;
    }
    Ok(false)
}

/// Map a representation of the principal form to (a, b) with
/// a^2 - d b^2 = 4 g^2 (value represented).
fn rep_to_element(k: &QuadField, x: &BigInt, y: &BigInt, g: i64) -> (BigInt, BigInt) {
    if k.d % 4 == 1 {
        (g * (2 * x + y), g * y)
    } else {
        (2 * g * x, 2 * g * y)
    }
}

/// The prime ideal over a ramified prime ell is principal iff ell or -ell
/// is a norm; cross-checks the class group route.
pub fn ramified_prime_has_norm_generator(k: &QuadField, ell: i64) -> Result<bool> {
    Ok(norm_equation(k, 4 * ell)?.is_some() || norm_equation(k, -4 * ell)?.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// p1 = 5, q1 = 3, q2 = 3 (mod 8); d = 5 mod 8, so 2 is inert in Q(sqrt d).
    Cond1,
    /// p1 = 5, q1 = 7, q2 = 3 (mod 8); d = 1 mod 8, so 2 splits.
    Cond2,
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pattern::Cond1 => write!(f, "cond1"),
            Pattern::Cond2 => write!(f, "cond2"),
        }
    }
}

/// A triple of distinct primes matching one of the two residue patterns,
/// together with the Legendre symbols that steer the tower analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeTriple {
    pub p1: i64,
    pub q1: i64,
    pub q2: i64,
    pub pattern: Pattern,
    /// (q1 / p1)
    pub s1: i32,
    /// (q2 / p1)
    pub s2: i32,
}

impl PrimeTriple {
    pub fn d(&self) -> i64 {
        self.p1 * self.q1 * self.q2
    }

    pub fn field(&self) -> QuadField {
        make_field(self.d()).expect("product of distinct primes")
    }

    /// Q(sqrt 2d), the companion field whose first tower layer coincides
    /// with the one of Q(sqrt d).
    pub fn companion_field(&self) -> QuadField {
        make_field(2 * self.d()).expect("product of distinct primes")
    }
}

pub fn classify_triple(p1: i64, q1: i64, q2: i64) -> Result<PrimeTriple> {
    let fail = |reason: &str| Error::PatternMismatch {
        p1,
        q1,
        q2,
        reason: reason.to_string(),
    };
    for v in [p1, q1, q2] {
        if !is_prime(v) {
            return Err(fail(&format!("{v} is not prime")));
        }
    }
    if p1 == q1 || p1 == q2 || q1 == q2 {
        return Err(fail("primes must be distinct"));
    }
    if p1
        .checked_mul(q1)
        .and_then(|x| x.checked_mul(q2))
        .filter(|&d| d < 1 << 44)
        .is_none()
    {
        return Err(Error::Overflow("radicand"));
    }
    if p1 % 8 != 5 {
        return Err(fail(&format!("p1 = {} mod 8, need 5", p1 % 8)));
    }
    let pattern = match (q1 % 8, q2 % 8) {
        (3, 3) => Pattern::Cond1,
        (7, 3) => Pattern::Cond2,
        (a, b) => {
            return Err(fail(&format!(
                "(q1, q2) = ({a}, {b}) mod 8, need (3, 3) or (7, 3)"
            )))
        }
    };
    Ok(PrimeTriple {
        p1,
        q1,
        q2,
        pattern,
        s1: kronecker(q1, p1),
        s2: kronecker(q2, p1),
    })
}
