//! Indefinite integral binary quadratic forms (a, b, c) of positive
//! non-square discriminant b^2 - 4ac, their rho-reduction cycles, Gauss
//! composition, and the 2-Sylow subgroups of the narrow and wide form class
//! groups of a fundamental discriminant.
//!
//! A form is reduced when |sqrt(D) - 2|a|| < b < sqrt(D). Proper equivalence
//! classes of primitive forms correspond to narrow ideal classes; two reduced
//! forms are equivalent exactly when they lie on the same rho cycle. The wide
//! class group is the quotient by the class of the form representing -1.

use crate::arith::{
    ext_gcd, factorize, is_prime, is_square_i128, is_square_i64, primes_up_to, sqrt_mod,
    sqrt_mod_prime,
};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::{gcd, Roots};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Largest discriminant accepted. Keeps every composition intermediate
/// inside i128 with a wide margin.
const MAX_DISC: i64 = 1 << 46;

/// Primitive form of positive non-square discriminant. Ordering is
/// lexicographic on (a, b, c); the canonical representative of a class is the
/// smallest reduced form on its cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Form> {
        let disc = (b as i128) * (b as i128) - 4 * (a as i128) * (c as i128);
        if disc <= 0 || is_square_i128(disc) {
            return Err(Error::BadDiscriminant(disc.clamp(i64::MIN as i128, i64::MAX as i128) as i64));
        }
        if disc > MAX_DISC as i128 {
            return Err(Error::Overflow("discriminant"));
        }
        if gcd(gcd(a, b), c) != 1 {
            return Err(Error::ImprimitiveForm(a, b, c));
        }
        Ok(Form { a, b, c })
    }

    fn from_raw(a: i128, b: i128, c: i128) -> Form {
        debug_assert!(
            i64::try_from(a).is_ok() && i64::try_from(b).is_ok() && i64::try_from(c).is_ok()
        );
        Form {
            a: a as i64,
            b: b as i64,
            c: c as i64,
        }
    }

    pub fn disc(&self) -> i64 {
        ((self.b as i128) * (self.b as i128) - 4 * (self.a as i128) * (self.c as i128)) as i64
    }

    pub fn is_reduced(&self) -> bool {
        let d = self.disc();
        is_reduced_raw(self.a as i128, self.b as i128, self.c as i128, d as i128, (d as i128).sqrt())
    }

    fn key(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    /// Value at (x, y), exactly.
    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        self.a * x * x + self.b * x * y + self.c * y * y
    }
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

fn is_reduced_raw(a: i128, b: i128, c: i128, disc: i128, s: i128) -> bool {
    let _ = c;
    if b < 1 || b > s {
        return false;
    }
    let ta = 2 * a.abs();
    // sqrt(D) - 2|a| < b  and  2|a| - sqrt(D) < b, in exact integer form.
    s - ta < b && (ta - b <= 0 || (ta - b) * (ta - b) < disc)
}

/// One rho step: (a, b, c) -> (c, r, (r^2 - D)/4c) with r = -b (mod 2|c|)
/// picked in the normalization window. Returns the new triple and the column
/// entry m with b + r = 2cm, which drives transform tracking.
fn rho_raw(a: i128, b: i128, c: i128, disc: i128, s: i128) -> (i128, i128, i128, i128) {
    let _ = a;
    let tc = 2 * c.abs();
    let upper = if c.abs() > s { c.abs() } else { s };
    let r0 = (-b).rem_euclid(tc);
    let r = upper - (upper - r0).rem_euclid(tc);
    let new_c = (r * r - disc) / (4 * c);
    debug_assert!((r * r - disc) % (4 * c) == 0);
    let m = (b + r) / (2 * c);
    (c, r, new_c, m)
}

fn reduce_raw(mut a: i128, mut b: i128, mut c: i128, disc: i128) -> (i128, i128, i128) {
    let s = disc.sqrt();
    let mut guard = 0u32;
    while !is_reduced_raw(a, b, c, disc, s) {
        (a, b, c, _) = rho_raw(a, b, c, disc, s);
        guard += 1;
        assert!(guard < 1_000_000, "reduction failed to terminate");
    }
    (a, b, c)
}

/// Reduced form equivalent to f.
pub fn reduce(f: &Form) -> Form {
    let d = f.disc() as i128;
    let (a, b, c) = reduce_raw(f.a as i128, f.b as i128, f.c as i128, d);
    Form::from_raw(a, b, c)
}

/// Successor of a reduced form on its cycle.
pub fn rho(f: &Form) -> Form {
    let d = f.disc() as i128;
    let (a, b, c, _) = rho_raw(f.a as i128, f.b as i128, f.c as i128, d, d.sqrt());
    Form::from_raw(a, b, c)
}

/// The full rho cycle of f's class, starting at reduce(f).
pub fn cycle(f: &Form) -> Vec<Form> {
    let start = reduce(f);
    let mut out = vec![start];
    let mut cur = rho(&start);
    while cur != start {
        out.push(cur);
        cur = rho(&cur);
        assert!(out.len() < 10_000_000, "cycle failed to close");
    }
    out
}

/// Principal form: (1, 1, (1-D)/4) for odd D, (1, 0, -D/4) for even D.
pub fn principal_form(disc: i64) -> Result<Form> {
    validate_disc(disc)?;
    if disc % 2 != 0 {
        Form::new(1, 1, (1 - disc) / 4)
    } else {
        Form::new(1, 0, -disc / 4)
    }
}

/// Form with leading coefficient -1; its class generates the kernel of the
/// narrow-to-wide quotient.
pub fn minus_one_form(disc: i64) -> Result<Form> {
    validate_disc(disc)?;
    if disc % 2 != 0 {
        Form::new(-1, 1, (disc - 1) / 4)
    } else {
        Form::new(-1, 0, disc / 4)
    }
}

/// Ambiguous form with leading coefficient ell for a ramified prime ell of a
/// fundamental discriminant.
pub fn ambiguous_prime_form(disc: i64, ell: i64) -> Result<Form> {
    require_fundamental(disc)?;
    let ram = ramified_primes(disc);
    if !ram.contains(&ell) {
        return Err(Error::NotRamified { prime: ell, disc });
    }
    if disc % 2 != 0 {
        // D odd: ell odd, 4*ell | ell^2 - D
        Form::new(ell, ell, (ell * ell - disc) / (4 * ell))
    } else {
        let m = disc / 4;
        if ell == 2 {
            if m.rem_euclid(4) == 2 {
                Form::new(2, 0, -m / 2)
            } else {
                // m = 3 mod 4
                Form::new(2, 2, (1 - m) / 2)
            }
        } else {
            Form::new(ell, 0, -(m / ell))
        }
    }
}

fn validate_disc(disc: i64) -> Result<()> {
    if disc <= 0 || disc.rem_euclid(4) > 1 || is_square_i64(disc) {
        return Err(Error::BadDiscriminant(disc));
    }
    if disc > MAX_DISC {
        return Err(Error::Overflow("discriminant"));
    }
    Ok(())
}

/// Fundamental: D = 1 mod 4 squarefree, or D = 4m with m squarefree and
/// m = 2 or 3 mod 4.
pub fn is_fundamental(disc: i64) -> bool {
    if validate_disc(disc).is_err() {
        return false;
    }
    if disc.rem_euclid(4) == 1 {
        factorize(disc).map(|f| f.is_squarefree()).unwrap_or(false)
    } else {
        let m = disc / 4;
        matches!(m.rem_euclid(4), 2 | 3) && factorize(m).map(|f| f.is_squarefree()).unwrap_or(false)
    }
}

fn require_fundamental(disc: i64) -> Result<()> {
    if is_fundamental(disc) {
        Ok(())
    } else {
        Err(Error::NotFundamental(disc))
    }
}

/// Primes dividing a fundamental discriminant.
pub fn ramified_primes(disc: i64) -> Vec<i64> {
    factorize(disc)
        .map(|f| f.primes.iter().map(|&(p, _)| p).collect())
        .unwrap_or_default()
}

/// Gauss composition. Both inputs are reduced first, so this is an operation
/// on classes; the result is a reduced representative of the product class.
pub fn compose(f: &Form, g: &Form) -> Result<Form> {
    let disc = f.disc();
    if disc != g.disc() {
        return Err(Error::DiscriminantMismatch(disc, g.disc()));
    }
    let f = reduce(f);
    let g = reduce(g);
    let d = disc as i128;
    let a1 = f.a as i128;
    let b1 = f.b as i128;

    // Replace g by an equivalent form whose leading coefficient is coprime to
    // a1. A primitive form represents such values at small coprime (x, y).
    let (a2, b2) = transform_coprime_to(&g, a1);

    // Concordant pair: B = b1 (mod 2 a1), B = b2 (mod 2 a2); then
    // (a1, B, a2 C) * (a2, B, a1 C) = (a1 a2, B, C).
    let a3 = a1 * a2;
    let b3 = crt2(b1, 2 * a1, b2, 2 * a2);
    // pull into least absolute residue mod 2 a3 to keep C small
    let m = 2 * a3.abs();
    let mut b3 = b3.rem_euclid(m);
    if b3 > m / 2 {
        b3 -= m;
    }
    let num = b3 * b3 - d;
    debug_assert!(num % (4 * a3) == 0);
    let c3 = num / (4 * a3);
    assert!(
        gcd(gcd(a3, b3), c3) == 1,
        "composition of primitive forms must be primitive"
    );
    let (ra, rb, rc) = reduce_raw(a3, b3, c3, d);
    Ok(Form::from_raw(ra, rb, rc))
}

/// Inverse class representative: (a, -b, c).
pub fn inverse(f: &Form) -> Form {
    Form {
        a: f.a,
        b: -f.b,
        c: f.c,
    }
}

/// (g(x,y), new middle coefficient) for the smallest coprime (x, y) making
/// the value coprime to n. Applies the SL2 matrix with first column (x, y).
fn transform_coprime_to(g: &Form, n: i128) -> (i128, i128) {
    let (ga, gb, gc) = (g.a as i128, g.b as i128, g.c as i128);
    if gcd(ga, n) == 1 {
        return (ga, gb);
    }
    let val = |x: i128, y: i128| ga * x * x + gb * x * y + gc * y * y;
    for h in 1i128..10_000 {
        // pairs with max(|x|, |y|) = h, x >= 0 to skip (-x,-y) duplicates
        let mut candidates: Vec<(i128, i128)> = Vec::new();
        for t in -h..=h {
            candidates.push((h, t));
            candidates.push((t.abs(), if t >= 0 { h } else { -h }));
        }
        for (x, y) in candidates {
            if gcd(x, y) != 1 {
                continue;
            }
            let v = val(x, y);
            if v != 0 && gcd(v, n) == 1 {
                // complete (x, y) to [[x, -t], [y, s]] with xs + yt = 1
                let (one, s, t) = ext_gcd(x, y);
                debug_assert!(one == 1);
                let (z, w) = (-t, s);
                let b_new = 2 * (ga * x * z + gc * y * w) + gb * (x * w + y * z);
                return (v, b_new);
            }
        }
    }
    unreachable!("no coprime value found for {g} against {n}");
}

/// x = r1 (mod m1), x = r2 (mod m2) where gcd(m1, m2) = 2 and r1 = r2 (mod 2).
fn crt2(r1: i128, m1: i128, r2: i128, m2: i128) -> i128 {
    debug_assert!((r1 - r2) % 2 == 0);
    let a1 = m1 / 2;
    let a2 = (m2 / 2).abs();
    let (g, inv, _) = ext_gcd(a1.rem_euclid(a2.max(1)), a2);
    if a2 == 1 {
        return r1;
    }
    debug_assert!(g == 1, "leading coefficients must be coprime");
    let k = ((r2 - r1) / 2 % a2 * inv).rem_euclid(a2);
    r1 + m1 * k
}

/// 2-Sylow subgroup data of a narrow or wide form class group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroup2 {
    pub disc: i64,
    /// True for the narrow group, false for the wide quotient.
    pub narrow: bool,
    /// Invariant factors, ascending, each a power of two. Empty = trivial.
    pub invariant_factors: Vec<u64>,
    /// Canonical representative of each class, sorted.
    pub elements: Vec<Form>,
    /// Ramified prime -> canonical representative of its ambiguous class.
    pub prime_class: BTreeMap<i64, Form>,
}

impl ClassGroup2 {
    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn two_rank(&self) -> u32 {
        self.invariant_factors.len() as u32
    }

    pub fn is_elementary(&self) -> bool {
        self.invariant_factors.iter().all(|&f| f == 2)
    }
}

/// Full cycle structure of a fundamental discriminant: every reduced form,
/// the cycle partition, and enough bookkeeping to multiply classes.
pub struct FormClassGroup {
    disc: i64,
    /// Canonical (minimal) reduced form of each cycle.
    reps: Vec<Form>,
    cycle_of: HashMap<(i64, i64, i64), u32>,
    id: u32,
    minus: u32,
    /// Class indices of the narrow 2-Sylow, sorted by canonical form.
    sylow: Vec<u32>,
}

impl FormClassGroup {
    pub fn compute(disc: i64) -> Result<Self> {
        require_fundamental(disc)?;
        let forms = reduced_forms(disc)?;
        let mut cycle_of: HashMap<(i64, i64, i64), u32> = HashMap::with_capacity(forms.len());
        let mut reps: Vec<Form> = Vec::new();
        for &f in &forms {
            if cycle_of.contains_key(&f.key()) {
                continue;
            }
            let cid = reps.len() as u32;
            let mut min = f;
            let mut cur = f;
            loop {
                let prev = cycle_of.insert(cur.key(), cid);
                assert!(prev.is_none(), "rho left the enumerated set at {cur}");
                if cur < min {
                    min = cur;
                }
                cur = rho(&cur);
                if cur == f {
                    break;
                }
            }
            reps.push(min);
        }
        let h_plus = reps.len() as u64;
        let mut group = FormClassGroup {
            disc,
            reps,
            cycle_of,
            id: 0,
            minus: 0,
            sylow: Vec::new(),
        };
        group.id = group.index_of(&principal_form(disc)?);
        group.minus = group.index_of(&minus_one_form(disc)?);

        let e2 = h_plus.trailing_zeros();
        let odd = h_plus >> e2;
        let mut sylow: HashSet<u32> = HashSet::new();
        for cid in 0..h_plus as u32 {
            sylow.insert(group.pow(cid, odd));
        }
        assert!(
            sylow.len() as u64 == 1 << e2,
            "2-Sylow of disc {disc} has wrong size"
        );
        let mut sylow: Vec<u32> = sylow.into_iter().collect();
        sylow.sort_by_key(|&c| group.reps[c as usize]);
        group.sylow = sylow;
        assert!(group.sylow.binary_search_by_key(&group.reps[group.minus as usize], |&c| group.reps[c as usize]).is_ok());
        Ok(group)
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    /// Narrow class number h+.
    pub fn h_plus(&self) -> u64 {
        self.reps.len() as u64
    }

    pub fn representative(&self, cid: u32) -> Form {
        self.reps[cid as usize]
    }

    pub fn principal_index(&self) -> u32 {
        self.id
    }

    /// Index of the class of the (-1, ., .) form. Equal to the principal
    /// index exactly when the fundamental unit has norm -1.
    pub fn minus_one_index(&self) -> u32 {
        self.minus
    }

    /// Class index of an arbitrary form of this discriminant.
    pub fn index_of(&self, f: &Form) -> u32 {
        debug_assert!(f.disc() == self.disc);
        *self
            .cycle_of
            .get(&reduce(f).key())
            .expect("reduced form missing from cycle table")
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        let f = compose(&self.reps[x as usize], &self.reps[y as usize]).expect("same disc");
        self.index_of(&f)
    }

    pub fn pow(&self, x: u32, mut e: u64) -> u32 {
        let mut base = x;
        let mut acc = self.id;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn order_stats_factors(&self, orders: &[u32]) -> Vec<u64> {
        // orders[i] = log2 of the element order; the counts
        // N_k = #{x : ord | 2^k} determine the invariant factors.
        let maxk = orders.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; maxk as usize + 1];
        for &o in orders {
            counts[o as usize] += 1;
        }
        let mut nk = vec![0u64; maxk as usize + 1];
        let mut acc = 0;
        for k in 0..=maxk as usize {
            acc += counts[k];
            nk[k] = acc;
        }
        let mut ranks = Vec::new(); // ranks[k-1] = #factors with exponent >= k
        for k in 1..=maxk as usize {
            let ratio = nk[k] / nk[k - 1];
            assert!(
                ratio.is_power_of_two() && nk[k] % nk[k - 1] == 0,
                "order statistics of a non-group"
            );
            ranks.push(ratio.trailing_zeros());
        }
        debug_assert!(ranks.windows(2).all(|w| w[0] >= w[1]));
        let rank = ranks.first().copied().unwrap_or(0);
        let mut factors: Vec<u64> = (1..=rank)
            .map(|i| {
                let e = ranks.iter().take_while(|&&r| r >= i).count();
                1u64 << e
            })
            .collect();
        factors.sort_unstable();
        factors
    }

    /// log2 of the order of x inside the narrow 2-Sylow.
    fn log_order(&self, x: u32) -> u32 {
        let mut k = 0;
        let mut cur = x;
        while cur != self.id {
            cur = self.mul(cur, cur);
            k += 1;
            assert!(k < 64);
        }
        k
    }

    /// log2 of the order of the image of x in the wide quotient.
    fn log_order_wide(&self, x: u32) -> u32 {
        let mut k = 0;
        let mut cur = x;
        while cur != self.id && cur != self.minus {
            cur = self.mul(cur, cur);
            k += 1;
            assert!(k < 64);
        }
        k
    }

    pub fn narrow_sylow(&self) -> ClassGroup2 {
        let orders: Vec<u32> = self.sylow.iter().map(|&c| self.log_order(c)).collect();
        let factors = self.order_stats_factors(&orders);
        let elements: Vec<Form> = self.sylow.iter().map(|&c| self.reps[c as usize]).collect();
        let prime_class = ramified_primes(self.disc)
            .into_iter()
            .map(|p| {
                let cid = self.index_of(&ambiguous_prime_form(self.disc, p).expect("ramified"));
                (p, self.reps[cid as usize])
            })
            .collect();
        ClassGroup2 {
            disc: self.disc,
            narrow: true,
            invariant_factors: factors,
            elements,
            prime_class,
        }
    }

    /// Canonical representative of the wide class of the narrow class cid:
    /// the smaller of the cid and cid * minus representatives.
    pub fn wide_rep(&self, cid: u32) -> Form {
        if self.minus == self.id {
            return self.reps[cid as usize];
        }
        let partner = self.mul(cid, self.minus);
        self.reps[cid as usize].min(self.reps[partner as usize])
    }

    pub fn wide_sylow(&self) -> ClassGroup2 {
        if self.minus == self.id {
            let mut g = self.narrow_sylow();
            g.narrow = false;
            return g;
        }
        let mut seen: HashSet<(i64, i64, i64)> = HashSet::new();
        let mut elements = Vec::new();
        let mut orders = Vec::new();
        for &c in &self.sylow {
            let rep = self.wide_rep(c);
            if seen.insert(rep.key()) {
                elements.push(rep);
                orders.push(self.log_order_wide(c));
            }
        }
        elements.sort_unstable();
        let factors = self.order_stats_factors(&orders);
        let prime_class = ramified_primes(self.disc)
            .into_iter()
            .map(|p| {
                let cid = self.index_of(&ambiguous_prime_form(self.disc, p).expect("ramified"));
                (p, self.wide_rep(cid))
            })
            .collect();
        ClassGroup2 {
            disc: self.disc,
            narrow: false,
            invariant_factors: factors,
            elements,
            prime_class,
        }
    }

    /// Is the prime ideal over ell principal in the ordinary (wide) sense?
    pub fn is_wide_principal(&self, ell: i64) -> Result<bool> {
        let f = ambiguous_prime_form(self.disc, ell)?;
        let cid = self.index_of(&f);
        Ok(cid == self.id || cid == self.minus)
    }

    /// Does the principal form represent m primitively? Decided exactly via
    /// cycle membership; no witness is produced.
    pub fn represents_primitively(&self, m: i64) -> Result<bool> {
        check_rep_target(m)?;
        Ok(candidate_forms(self.disc, m)
            .into_iter()
            .any(|f| self.index_of(&f) == self.id))
    }
}

/// 2-Sylow of the narrow class group of a fundamental discriminant.
pub fn narrow_class_group(disc: i64) -> Result<ClassGroup2> {
    Ok(FormClassGroup::compute(disc)?.narrow_sylow())
}

/// 2-Sylow of the wide (ordinary) class group.
pub fn wide_class_group(disc: i64) -> Result<ClassGroup2> {
    Ok(FormClassGroup::compute(disc)?.wide_sylow())
}

/// Canonical representative of the wide class of the ramified prime ell.
pub fn ramified_prime_class(disc: i64, ell: i64) -> Result<Form> {
    let g = FormClassGroup::compute(disc)?;
    let f = ambiguous_prime_form(disc, ell)?;
    let cid = g.index_of(&f);
    Ok(g.wide_rep(cid))
}

/// Is the prime ideal over ell principal (wide sense)?
pub fn is_principal(disc: i64, ell: i64) -> Result<bool> {
    FormClassGroup::compute(disc)?.is_wide_principal(ell)
}

fn check_rep_target(m: i64) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroInput);
    }
    if m.abs() >= 1 << 40 {
        return Err(Error::Overflow("representation target"));
    }
    Ok(())
}

/// Forms (m, b, c) of discriminant disc, one per residue b mod 2|m| with
/// b^2 = disc (mod 4|m|), skipping imprimitive ones. The principal class
/// represents m primitively iff one of these is principal.
fn candidate_forms(disc: i64, m: i64) -> Vec<Form> {
    let four_m = 4 * m.abs();
    let mut out = Vec::new();
    for b in sqrt_mod(disc.rem_euclid(four_m), four_m) {
        if b >= four_m / 2 {
            continue; // translation-equivalent to b - 2|m|
        }
        let c128 = ((b as i128) * (b as i128) - disc as i128) / (4 * m as i128);
        let c = c128 as i64;
        if gcd(gcd(m, b), c) != 1 {
            continue;
        }
        out.push(Form { a: m, b, c });
    }
    out
}

/// All primitive reduced forms of the given (not necessarily fundamental)
/// discriminant, sorted. Factors every (D - b^2)/4 with a quadratic-residue
/// sieve over the whole b range, so the cost stays near-linear in sqrt(D).
pub fn reduced_forms(disc: i64) -> Result<Vec<Form>> {
    validate_disc(disc)?;
    let s = (disc as i128).sqrt() as i64;
    let b0: i64 = if disc % 2 != 0 { 1 } else { 2 };
    if s < b0 {
        return Ok(Vec::new());
    }
    let n_entries = ((s - b0) / 2 + 1) as usize;
    let b_at = |i: usize| b0 + 2 * i as i64;
    // leftover cofactors and collected factors per entry
    let mut rem: Vec<i64> = (0..n_entries)
        .map(|i| (disc - b_at(i) * b_at(i)) / 4)
        .collect();
    let mut factors: Vec<Vec<(i64, u32)>> = vec![Vec::new(); n_entries];
    for i in 0..n_entries {
        let t = rem[i].trailing_zeros();
        if t > 0 {
            factors[i].push((2, t));
            rem[i] >>= t;
        }
    }
    let max_m = (disc / 4).max(1);
    for &p in primes_up_to((max_m as u64).sqrt() + 1).iter().skip(1) {
        let p = p as i64;
        let roots: Vec<i64> = if disc % p == 0 {
            vec![0]
        } else {
            match sqrt_mod_prime(disc.rem_euclid(p) as u64, p as u64) {
                None => continue,
                Some(r) => vec![r as i64, p - r as i64],
            }
        };
        for r in roots {
            // first b >= b0 with b = r (mod p) and the right parity
            let start = if (r - b0) % 2 == 0 { r } else { r + p };
            let start = start.rem_euclid(2 * p);
            let mut b = b0 + (start - b0).rem_euclid(2 * p);
            while b <= s {
                let i = ((b - b0) / 2) as usize;
                let mut e = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    e += 1;
                }
                debug_assert!(e > 0, "sieve hit a non-divisor");
                factors[i].push((p, e));
                b += 2 * p;
            }
        }
    }
    let mut out: Vec<Form> = Vec::new();
    for i in 0..n_entries {
        if rem[i] > 1 {
            debug_assert!(is_prime(rem[i]), "cofactor {} not prime", rem[i]);
            factors[i].push((rem[i], 1));
        }
        let b = b_at(i);
        let m = (disc - b * b) / 4;
        // divisors t of m in the window sqrt(D) - b < 2t < sqrt(D) + b
        let mut divisors = vec![1i64];
        for &(p, e) in &factors[i] {
            let snapshot = divisors.len();
            let mut pe = 1i64;
            for _ in 0..e {
                pe *= p;
                for j in 0..snapshot {
                    divisors.push(divisors[j] * pe);
                }
            }
        }
        for t in divisors {
            let lo_ok = (2 * t + b) * (2 * t + b) > disc;
            let hi_ok = 2 * t - b <= 0 || ((2 * t - b) as i128) * ((2 * t - b) as i128) < disc as i128;
            if !lo_ok || !hi_ok {
                continue;
            }
            let other = m / t;
            if gcd(t, gcd(b, other)) != 1 {
                continue;
            }
            out.push(Form { a: t, b, c: -other });
            out.push(Form { a: -t, b, c: other });
        }
    }
    out.sort_unstable();
    debug_assert!(out.iter().all(|f| f.is_reduced() && f.disc() == disc));
    Ok(out)
}

/// Exact primitive representation of m by the principal form of disc, with
/// witness. Walks the principal cycle with an SL2 transform in big integers,
/// since the smallest witness can be as large as the fundamental unit.
pub fn represent_principal(disc: i64, m: i64) -> Result<Option<(BigInt, BigInt)>> {
    validate_disc(disc)?;
    check_rep_target(m)?;
    let principal = principal_form(disc)?;
    let members: HashSet<(i64, i64, i64)> = cycle(&principal).into_iter().map(|f| f.key()).collect();
    let (rq, v) = reduce_with_transform(&principal);
    for f0 in candidate_forms(disc, m) {
        let (rf, u) = reduce_with_transform(&f0);
        if !members.contains(&rf.key()) {
            continue;
        }
        // walk rq -> rf along the cycle, tracking the transform
        let mut w = Mat::identity();
        let mut cur = rq;
        let mut steps = 0usize;
        while cur != rf {
            let d = disc as i128;
            let (na, nb, nc, mm) = rho_raw(cur.a as i128, cur.b as i128, cur.c as i128, d, d.sqrt());
            w = w.mul_rho(mm);
            cur = Form::from_raw(na, nb, nc);
            steps += 1;
            assert!(steps <= members.len(), "walk left the cycle");
        }
        // principal o (V W U^-1) = f0, so the first column represents m
        let total = v.mul(&w).mul(&u.inverse());
        let (x, y) = (total.m11, total.m21);
        let val = principal.eval(&x, &y);
        assert!(val == BigInt::from(m), "representation check failed");
        return Ok(Some((x, y)));
    }
    Ok(None)
}

/// 2x2 integer matrix in SL2(Z); entries grow like the fundamental unit
/// during cycle walks, hence BigInt.
#[derive(Clone, Debug)]
struct Mat {
    m11: BigInt,
    m12: BigInt,
    m21: BigInt,
    m22: BigInt,
}

impl Mat {
    fn identity() -> Mat {
        Mat {
            m11: BigInt::from(1),
            m12: BigInt::from(0),
            m21: BigInt::from(0),
            m22: BigInt::from(1),
        }
    }

    fn mul(&self, o: &Mat) -> Mat {
        Mat {
            m11: &self.m11 * &o.m11 + &self.m12 * &o.m21,
            m12: &self.m11 * &o.m12 + &self.m12 * &o.m22,
            m21: &self.m21 * &o.m11 + &self.m22 * &o.m21,
            m22: &self.m21 * &o.m12 + &self.m22 * &o.m22,
        }
    }

    /// Right-multiply by the rho matrix [[0, -1], [1, m]]: the new columns
    /// are (old col2, m * old col2 - old col1).
    fn mul_rho(&self, m: i128) -> Mat {
        let m = BigInt::from(m);
        Mat {
            m11: self.m12.clone(),
            m12: &self.m12 * &m - &self.m11,
            m21: self.m22.clone(),
            m22: &self.m22 * &m - &self.m21,
        }
    }

    fn inverse(&self) -> Mat {
        // det = 1 throughout
        Mat {
            m11: self.m22.clone(),
            m12: -self.m12.clone(),
            m21: -self.m21.clone(),
            m22: self.m11.clone(),
        }
    }
}

fn reduce_with_transform(f: &Form) -> (Form, Mat) {
    let disc = f.disc() as i128;
    let s = disc.sqrt();
    let (mut a, mut b, mut c) = (f.a as i128, f.b as i128, f.c as i128);
    let mut mat = Mat::identity();
    let mut guard = 0u32;
    while !is_reduced_raw(a, b, c, disc, s) {
        let (na, nb, nc, m) = rho_raw(a, b, c, disc, s);
        mat = mat.mul_rho(m);
        (a, b, c) = (na, nb, nc);
        guard += 1;
        assert!(guard < 1_000_000, "reduction failed to terminate");
    }
    (Form::from_raw(a, b, c), mat)
}
