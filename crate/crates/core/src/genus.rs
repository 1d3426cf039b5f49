//! Genus theory of a fundamental discriminant: the splitting into prime
//! discriminants, genus and narrow genus fields, the ambiguous class number
//! formula, and the Redei decompositions S1/S2 reading off the 2- and
//! 4-rank of the narrow class group without enumerating a single form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gf2_rank, hilbert, is_prime, kronecker, squarefree_part, SquareClass};
use crate::error::{Error, Result};
use crate::forms::is_fundamental;
use crate::quadfield::{Pattern, PrimeTriple, QuadField};

/// Splits a fundamental discriminant into prime discriminants, each
/// divisible by exactly one prime: -4, 8 or -8 for the even part, p for
/// p = 1 mod 4, -p for p = 3 mod 4. Even part first, then odd primes
/// ascending; the product recovers the input exactly.
pub fn prime_discriminant_factorization(disc: i64) -> Result<Vec<i64>> {
    if !is_fundamental(disc) {
        return Err(Error::NotFundamental(disc));
    }
    let mut parts = Vec::new();
    let odd = if disc % 4 == 0 {
        let m = disc / 4;
        if m % 4 == 3 {
            parts.push(-4);
            m
        } else {
            let half = m / 2;
            parts.push(if half % 4 == 1 { 8 } else { -8 });
            half
        }
    } else {
        disc
    };
    for &(p, _) in &factorize(odd)?.primes {
        parts.push(if p % 4 == 1 { p } else { -p });
    }
    assert_eq!(parts.iter().product::<i64>(), disc);
    Ok(parts)
}

/// The prime dividing a prime discriminant.
fn prime_of(pd: i64) -> i64 {
    match pd {
        -4 | 8 | -8 => 2,
        p => p.abs(),
    }
}

/// An unordered splitting D = D1 * D2 into two coprime discriminants
/// (1 allowed), stored with |D1| < |D2|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d1: i64,
    pub d2: i64,
}

/// All splittings of D into complementary products of its prime
/// discriminants, one per unordered pair, sorted by (|D1|, D1). Includes
/// (1, D). The count is 2^(t-1), the number of genera.
pub fn redei_s1(disc: i64) -> Result<Vec<Decomposition>> {
    let parts = prime_discriminant_factorization(disc)?;
    let t = parts.len();
    assert!(t < 32, "discriminant with {t} prime factors out of range");
    let mut out = Vec::with_capacity(1 << (t - 1));
    for mask in 0u32..1 << t {
        let d1: i64 = parts
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &pd)| pd)
            .product();
        // complement product; exact since the parts multiply to disc
        let d2 = disc / d1;
        if d1.abs() < d2.abs() {
            out.push(Decomposition { d1, d2 });
        }
    }
    out.sort_by_key(|dec| (dec.d1.abs(), dec.d1));
    assert_eq!(out.len(), 1 << (t - 1));
    Ok(out)
}

/// chi_d(p) = 1 for every prime p dividing m. The symbol is never zero
/// here because d and m have disjoint prime support.
fn all_residues(d: i64, m: i64) -> bool {
    let f = factorize(m).expect("nonzero divisor of a discriminant");
    f.primes.iter().all(|&(p, _)| {
        let chi = kronecker(d, p);
        debug_assert!(chi != 0);
        chi == 1
    })
}

/// The members of S1 whose halves are mutual residues: chi_D1(p) = 1 at
/// every p | D2 and chi_D2(p) = 1 at every p | D1. The count is 2^(4-rank
/// of the narrow class group); in particular only (1, D) survives iff the
/// narrow 2-Sylow subgroup is 2-elementary.
pub fn redei_s2(disc: i64) -> Result<Vec<Decomposition>> {
    Ok(redei_s1(disc)?
        .into_iter()
        .filter(|dec| all_residues(dec.d1, dec.d2) && all_residues(dec.d2, dec.d1))
        .collect())
}

/// 4-rank of the narrow class group, read off the t x t matrix over GF(2)
/// of residue characters between the prime discriminants: entry (i, j) for
/// i != j is the additive character of D_i at the prime of D_j, and each
/// diagonal entry makes its column sum to zero. The rows then sum to zero,
/// so the rank is at most t - 1, and the 4-rank is t - 1 - rank.
pub fn redei_four_rank(disc: i64) -> Result<u32> {
    let parts = prime_discriminant_factorization(disc)?;
    let t = parts.len();
    let mut matrix = vec![vec![0u8; t]; t];
    for j in 0..t {
        let p = prime_of(parts[j]);
        let mut col_sum = 0u8;
        for i in 0..t {
            if i == j {
                continue;
            }
            let chi = kronecker(parts[i], p);
            debug_assert!(chi != 0);
            let bit = (chi == -1) as u8;
            matrix[i][j] = bit;
            col_sum ^= bit;
        }
        matrix[j][j] = col_sum;
    }
    let rank = gf2_rank(&matrix);
    Ok(t as u32 - 1 - rank as u32)
}

/// Generators of the narrow genus field over Q, as square classes: the
/// radicand followed by the squarefree parts of the prime discriminants.
/// The listed radicand is redundant as a generator but kept for display.
pub fn narrow_genus_field(k: &QuadField) -> Vec<SquareClass> {
    let parts =
        prime_discriminant_factorization(k.disc).expect("field discriminant is fundamental");
    let mut gens = vec![SquareClass::from_squarefree(k.d)];
    for pd in parts {
        gens.push(squarefree_part(pd).expect("prime discriminant is nonzero"));
    }
    gens
}

/// Closure of a set of square classes under multiplication.
fn span_of(gens: &[SquareClass]) -> BTreeSet<SquareClass> {
    let mut span = BTreeSet::new();
    span.insert(SquareClass::ONE);
    for &g in gens {
        // every class is an involution, so one sweep of products suffices
        let snapshot: Vec<SquareClass> = span.iter().copied().collect();
        for e in snapshot {
            span.insert(e * g);
        }
    }
    span
}

/// Generators of the genus field, the maximal real subfield of the narrow
/// genus field: an ascending GF(2) basis of the positive square classes in
/// the span of the narrow generators.
pub fn genus_field(k: &QuadField) -> Vec<SquareClass> {
    let full = span_of(&narrow_genus_field(k));
    let positive: Vec<SquareClass> = full.iter().copied().filter(|c| c.repr() > 0).collect();
    let mut basis = Vec::new();
    let mut sub = BTreeSet::new();
    sub.insert(SquareClass::ONE);
    for c in positive {
        if sub.contains(&c) {
            continue;
        }
        let snapshot: Vec<SquareClass> = sub.iter().copied().collect();
        for e in snapshot {
            sub.insert(e * c);
        }
        basis.push(c);
    }
    basis
}

/// 2-rank of the wide class group by the ambiguous class number formula:
/// t - 1 genera, minus one more when -1 is not a norm from the field. The
/// norm test is local at 2 and at every odd ramified prime.
pub fn genus_rank(k: &QuadField) -> u32 {
    let t = k.ramified_primes().len() as i64;
    let mut places = k.ramified_primes();
    if !places.contains(&2) {
        places.push(2);
    }
    let minus_is_norm = places.iter().all(|&p| hilbert(-1, k.d, p) == 1);
    let rank = t - 1 - i64::from(!minus_is_norm);
    assert!(rank >= 0, "ambiguous class count below 1 for d = {}", k.d);
    rank as u32
}

/// Order of the subgroup of a 2-class group fixed by a degree-2 Galois
/// action: subfield_order * 2^(t-1) / unit_index, demanded exact. t counts
/// the ramified places of the relative extension, so t = 0 can halve the
/// subfield order.
pub fn genus_formula_fixed_order(t: u32, subfield_order: u64, unit_index: u64) -> Result<u64> {
    if unit_index != 1 && unit_index != 2 {
        return Err(Error::BadUnitIndex(unit_index));
    }
    assert!(
        subfield_order.is_power_of_two(),
        "subfield 2-class order must be a power of two"
    );
    if t > 40 {
        return Err(Error::Overflow("genus formula"));
    }
    let num = subfield_order
        .checked_mul(1u64 << t)
        .ok_or(Error::Overflow("genus formula"))?;
    let den = 2 * unit_index;
    if num % den != 0 {
        return Err(Error::NonIntegralOrder);
    }
    Ok(num / den)
}

/// Upper bound for the layer-1 order of the 2-class group in terms of the
/// base layer and the companion field: A0 * AF / 2 when 2 is inert in
/// Q(sqrt d), A0 * AF when 2 splits.
pub fn lemma_2_3_bound(pattern: Pattern, a0: u64, af: u64) -> u64 {
    match pattern {
        Pattern::Cond1 => a0 * af / 2,
        Pattern::Cond2 => a0 * af,
    }
}

/// Residue criterion for #A(Q(sqrt(p1 q1 q2))) = 2 with p1 = 1 mod 4 and
/// q1 = q2 = 3 mod 4: the 2-class group is as small as its rank allows iff
/// at least one of q1, q2 is a nonresidue mod p1. Accepts the full
/// congruence range, wider than the two tower patterns.
pub fn lemma_2_6_criterion(p1: i64, q1: i64, q2: i64) -> Result<bool> {
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
    if p1 % 4 != 1 {
        return Err(fail(&format!("p1 = {} mod 4, need 1", p1 % 4)));
    }
    if q1 % 4 != 3 || q2 % 4 != 3 {
        return Err(fail("q1 and q2 must be 3 mod 4"));
    }
    Ok(kronecker(q1, p1) == -1 || kronecker(q2, p1) == -1)
}

/// Residue criterion for the companion field of a cond1 triple to have
/// 2-class group (Z/2)^2: true when (q1 q2 / p1) = -1 or both symbols are
/// +1, false exactly when both are -1.
pub fn lemma_2_8_criterion(t: &PrimeTriple) -> Result<bool> {
    if t.pattern != Pattern::Cond1 {
        return Err(Error::PatternMismatch {
            p1: t.p1,
            q1: t.q1,
            q2: t.q2,
            reason: "criterion applies to cond1 triples only".to_string(),
        });
    }
    Ok(t.s1 * t.s2 == -1 || (t.s1 == 1 && t.s2 == 1))
}

/// For a cond2 triple the companion field's 2-class group is expected to be
/// (Z/2)^2 unconditionally. This computes the group by form enumeration and
/// returns the comparison verdict rather than assuming it.
pub fn lemma_2_9_check(t: &PrimeTriple) -> Result<bool> {
    if t.pattern != Pattern::Cond2 {
        return Err(Error::PatternMismatch {
            p1: t.p1,
            q1: t.q1,
            q2: t.q2,
            reason: "check applies to cond2 triples only".to_string(),
        });
    }
    let group = crate::forms::wide_class_group(t.companion_field().disc)?;
    Ok(group.invariant_factors == [2, 2])
}
