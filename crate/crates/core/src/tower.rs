//! First layer of the cyclotomic 2-tower over K = Q(sqrt d), d = p1 q1 q2:
//! square classes of fundamental units decide the Hasse unit index of
//! K1 = Q(sqrt 2, sqrt d), the biquadratic class number formula gives
//! #A(K1), and order stability at the first layer pins down the Iwasawa
//! data reported for the whole tower.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::arith::{factorize, squarefree_part, SquareClass};
use crate::error::{Error, Result};
use crate::forms::{ambiguous_prime_form, FormClassGroup};
use crate::genus::{genus_rank, lemma_2_3_bound, lemma_2_6_criterion, lemma_2_8_criterion};
use crate::quadfield::{
    fundamental_unit, norm_equation_solvable, Pattern, PrimeTriple, QuadField,
};

/// Square class c with K(sqrt eps) = K(sqrt c), for the fundamental unit
/// eps of the field with radicand d. Exists only when N(eps) = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CInvariant {
    pub d: i64,
    pub square_class: SquareClass,
}

/// Squarefree part of a positive integer whose prime support, outside an
/// allowed set, consists of squares only. Avoids factoring huge traces:
/// trial-divides by the allowed primes and insists the cofactor is square.
fn restricted_square_class(value: &BigInt, support: &[i64]) -> SquareClass {
    let mut rem = value.clone();
    let mut c = 1i64;
    for &p in support {
        let big_p = BigInt::from(p);
        let mut e = 0u64;
        while (&rem % &big_p).is_zero() {
            rem /= &big_p;
            e += 1;
        }
        if e % 2 == 1 {
            c *= p;
        }
    }
    let root = rem.sqrt();
    assert!(
        &root * &root == rem,
        "cofactor {rem} outside support {support:?} must be a perfect square"
    );
    SquareClass::from_squarefree(c)
}

/// c-invariant of the field: with N(eps) = +1 and T = tr(eps), the identity
/// (1 + eps)^2 = (T + 2) eps gives K(sqrt eps) = K(sqrt(T + 2)). The square
/// class of T + 2 has support in the ramified primes because adjoining a
/// unit square root ramifies only above 2, so the restricted extraction is
/// exact.
pub fn c_invariant(k: &QuadField) -> Result<CInvariant> {
    let fu = fundamental_unit(k);
    if fu.norm != 1 {
        return Err(Error::UnitNormNegative(k.d));
    }
    let trace_plus_2: BigInt = &fu.t + 2;
    let support: Vec<i64> = factorize(2 * k.d)?.primes.iter().map(|&(p, _)| p).collect();
    Ok(CInvariant {
        d: k.d,
        square_class: restricted_square_class(&trace_plus_2, &support),
    })
}

/// Whether sqrt of a unit with c-invariant class c lies in K1 = Q(sqrt 2,
/// sqrt d): exactly when c is a square times 1, 2, d or 2d.
pub fn sqrt_unit_in_k1(c: SquareClass, d: i64) -> bool {
    let two = SquareClass::from_squarefree(2);
    let sd = squarefree_part(d).expect("nonzero radicand");
    c == SquareClass::ONE || c == two || c == sd || c == sd * two
}

/// Fundamental system of units of K1 modulo torsion, among the shapes that
/// can occur when both quadratic units under a square root have norm +1.
/// e1, e2, e3 are the fundamental units of Q(sqrt d), Q(sqrt 2d), Q(sqrt 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FundSystem {
    /// {e1, e2, e3}
    Plain,
    /// {sqrt(e1), e2, e3}
    SqrtEps1,
    /// {e1, sqrt(e2), e3}
    SqrtEps2,
    /// {sqrt(e1), sqrt(e2), e3}
    SqrtBoth,
    /// {sqrt(e1 e2), e2, e3}
    SqrtProduct,
}

impl std::fmt::Display for FundSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FundSystem::Plain => "{e1, e2, e3}",
            FundSystem::SqrtEps1 => "{sqrt(e1), e2, e3}",
            FundSystem::SqrtEps2 => "{e1, sqrt(e2), e3}",
            FundSystem::SqrtBoth => "{sqrt(e1), sqrt(e2), e3}",
            FundSystem::SqrtProduct => "{sqrt(e1 e2), e2, e3}",
        };
        write!(f, "{s}")
    }
}

struct UnitData {
    c1: CInvariant,
    c2: CInvariant,
    /// sqrt(e1), sqrt(e2), sqrt(e1 e2) lie in K1
    m1: bool,
    m2: bool,
    m12: bool,
    q: u64,
    system: FundSystem,
}

fn unit_data(t: &PrimeTriple) -> UnitData {
    let d = t.d();
    let c1 = c_invariant(&t.field()).expect("q1 = 3 mod 4 ramifies, so N(e1) = +1");
    let c2 = c_invariant(&t.companion_field()).expect("q1 = 3 mod 4 ramifies, so N(e2) = +1");
    let m1 = sqrt_unit_in_k1(c1.square_class, d);
    let m2 = sqrt_unit_in_k1(c2.square_class, d);
    let m12 = sqrt_unit_in_k1(c1.square_class * c2.square_class, d);
    let count = u8::from(m1) + u8::from(m2) + u8::from(m12);
    // the rootable subgroup of <e1, e2> mod squares: two memberships force
    // the third
    assert!(count != 2, "membership set must be a subgroup");
    let (q, system) = match (m1, m2, m12) {
        (false, false, false) => (1, FundSystem::Plain),
        (true, false, false) => (2, FundSystem::SqrtEps1),
        (false, true, false) => (2, FundSystem::SqrtEps2),
        (false, false, true) => (2, FundSystem::SqrtProduct),
        _ => (4, FundSystem::SqrtBoth),
    };
    UnitData {
        c1,
        c2,
        m1,
        m2,
        m12,
        q,
        system,
    }
}

/// Hasse unit index Q(K1) = [E(K1) : <-1, e1, e2, e3>] together with the
/// fundamental system realizing it. Purely a unit computation.
pub fn hasse_unit_index(t: &PrimeTriple) -> (u64, FundSystem) {
    let u = unit_data(t);
    (u.q, u.system)
}

/// #A(K1) by the class number formula for the biquadratic K1: since
/// Q(sqrt 2) has class number 1, #A(K1) = Q * #A0 * #A(F) / 4.
pub fn kuroda_a1(t: &PrimeTriple) -> Result<u64> {
    let a0 = crate::forms::wide_class_group(t.field().disc)?.order();
    let af = crate::forms::wide_class_group(t.companion_field().disc)?.order();
    let (q, _) = hasse_unit_index(t);
    Ok(kuroda_from_parts(q, a0, af))
}

fn kuroda_from_parts(q: u64, a0: u64, af: u64) -> u64 {
    let num = q * a0 * af;
    assert!(num % 4 == 0, "class number formula must divide exactly");
    num / 4
}

/// Stability verdict at the first layer. The prime(s) above 2 are totally
/// ramified in the tower from layer 0, so equal orders at layers 0 and 1
/// freeze the orders for good: lambda = mu = 0 and nu = log2(#A0). Unequal
/// orders decide nothing yet.
pub fn fukuda_stabilize(a0: u64, a1: u64) -> Option<(u32, u32, u32)> {
    assert!(a0.is_power_of_two() && a1.is_power_of_two());
    if a0 == a1 {
        Some((0, 0, a0.trailing_zeros()))
    } else {
        None
    }
}

/// A lambda, mu or nu entry: known exactly, or not derivable at layer 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwasawaNumber {
    Known(u32),
    Unknown,
}

impl Serialize for IwasawaNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IwasawaNumber::Known(n) => s.serialize_u32(*n),
            IwasawaNumber::Unknown => s.serialize_str("unknown"),
        }
    }
}

impl std::fmt::Display for IwasawaNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IwasawaNumber::Known(n) => write!(f, "{n}"),
            IwasawaNumber::Unknown => write!(f, "unknown"),
        }
    }
}

/// Everything the tower analysis derives for one triple. Serializes to the
/// fixed 19-key JSON object; the fundamental system is display-only.
#[derive(Debug, Clone)]
pub struct TowerReport {
    pub triple: PrimeTriple,
    /// (q1/p1), (q2/p1), (q1 q2/p1)
    pub symbols: [i32; 3],
    pub a0: u64,
    pub a0_factors: Vec<u64>,
    pub af: u64,
    pub af_factors: Vec<u64>,
    pub q: u64,
    pub a1: u64,
    pub fundamental_system: FundSystem,
    /// Decimal values of the primes among p1, q1, q2 whose ideal above is
    /// principal in K.
    pub principal: Vec<String>,
    pub stable: bool,
    pub lambda: IwasawaNumber,
    pub mu: IwasawaNumber,
    pub nu: IwasawaNumber,
    pub xinf: &'static str,
    pub theorem: &'static str,
    pub violations: Vec<String>,
}

impl Serialize for TowerReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TowerReport", 19)?;
        st.serialize_field("p1", &self.triple.p1)?;
        st.serialize_field("q1", &self.triple.q1)?;
        st.serialize_field("q2", &self.triple.q2)?;
        st.serialize_field("pattern", &self.triple.pattern)?;
        st.serialize_field("symbols", &self.symbols)?;
        st.serialize_field("A0", &self.a0)?;
        st.serialize_field("A0_factors", &self.a0_factors)?;
        st.serialize_field("AF", &self.af)?;
        st.serialize_field("AF_factors", &self.af_factors)?;
        st.serialize_field("Q", &self.q)?;
        st.serialize_field("A1", &self.a1)?;
        st.serialize_field("principal", &self.principal)?;
        st.serialize_field("stable", &self.stable)?;
        st.serialize_field("lambda", &self.lambda)?;
        st.serialize_field("mu", &self.mu)?;
        st.serialize_field("nu", &self.nu)?;
        st.serialize_field("Xinf", &self.xinf)?;
        st.serialize_field("theorem", &self.theorem)?;
        st.serialize_field("violations", &self.violations)?;
        st.end()
    }
}

/// Shared state for the per-triple checks: both class groups, both unit
/// square classes, and the three derived orders.
struct Ctx {
    t: PrimeTriple,
    k: QuadField,
    f: QuadField,
    k_group: FormClassGroup,
    f_group: FormClassGroup,
    a0: u64,
    a0_factors: Vec<u64>,
    af: u64,
    af_factors: Vec<u64>,
    units: UnitData,
    a1: u64,
}

impl Ctx {
    fn new(t: &PrimeTriple) -> Result<Ctx> {
        let k = t.field();
        let f = t.companion_field();
        let k_group = FormClassGroup::compute(k.disc)?;
        let f_group = FormClassGroup::compute(f.disc)?;
        let k_wide = k_group.wide_sylow();
        let f_wide = f_group.wide_sylow();
        let units = unit_data(t);
        let a0 = k_wide.order();
        let af = f_wide.order();
        let a1 = kuroda_from_parts(units.q, a0, af);
        Ok(Ctx {
            t: *t,
            k,
            f,
            k_group,
            f_group,
            a0,
            a0_factors: k_wide.invariant_factors,
            af,
            af_factors: f_wide.invariant_factors,
            units,
            a1,
        })
    }

    /// [l1] = [l2] for the ramified primes l1, l2 in the wide class group:
    /// ambiguous classes square to the identity, so equality is the same as
    /// principality of the product.
    fn classes_equal(&self, group: &FormClassGroup, l1: i64, l2: i64) -> Result<bool> {
        let i1 = group.index_of(&ambiguous_prime_form(group.disc(), l1)?);
        let i2 = group.index_of(&ambiguous_prime_form(group.disc(), l2)?);
        let prod = group.mul(i1, i2);
        Ok(prod == group.principal_index() || prod == group.minus_one_index())
    }
}

fn record(v: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        v.push(msg());
    }
}

/// Cross-checks that apply to every triple regardless of its symbols.
fn universal_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    let t = &ctx.t;
    record(v, 4 * ctx.a1 == ctx.units.q * ctx.a0 * ctx.af, || {
        format!(
            "class number formula: 4*{} != {}*{}*{}",
            ctx.a1, ctx.units.q, ctx.a0, ctx.af
        )
    });
    let bound = lemma_2_3_bound(t.pattern, ctx.a0, ctx.af);
    record(v, ctx.a1 <= bound, || {
        format!("layer-1 bound: A1 = {} exceeds {bound}", ctx.a1)
    });
    let small = lemma_2_6_criterion(t.p1, t.q1, t.q2)?;
    record(v, small == (ctx.a0 == 2), || {
        format!("small-group criterion {} vs A0 = {}", small, ctx.a0)
    });
    match t.pattern {
        Pattern::Cond1 => {
            let four_group = lemma_2_8_criterion(t)?;
            record(v, four_group == (ctx.af_factors == [2, 2]), || {
                format!(
                    "companion shape criterion {} vs A(F) = {:?}",
                    four_group, ctx.af_factors
                )
            });
        }
        Pattern::Cond2 => {
            record(v, ctx.af_factors == [2, 2], || {
                format!("A(F) must be [2, 2], got {:?}", ctx.af_factors)
            });
        }
    }
    record(v, ctx.a0_factors.len() == 1, || {
        format!("A0 must be cyclic, got {:?}", ctx.a0_factors)
    });
    record(v, ctx.af_factors.len() == 2, || {
        format!("A(F) must have rank 2, got {:?}", ctx.af_factors)
    });
    record(v, genus_rank(&ctx.k) == ctx.a0_factors.len() as u32, || {
        "genus rank of K disagrees with enumerated rank".to_string()
    });
    record(v, genus_rank(&ctx.f) == ctx.af_factors.len() as u32, || {
        "genus rank of F disagrees with enumerated rank".to_string()
    });

    // principality must look the same through forms and through norm forms
    for (field, group) in [(&ctx.k, &ctx.k_group), (&ctx.f, &ctx.f_group)] {
        for ell in field.ramified_primes() {
            let by_class = group.is_wide_principal(ell)?;
            let by_norm = norm_equation_solvable(field, group, ell)?
                || norm_equation_solvable(field, group, -ell)?;
            record(v, by_class == by_norm, || {
                format!(
                    "principality routes split at {ell} over d = {}: class {by_class}, norm {by_norm}",
                    field.d
                )
            });
        }
    }

    // an element of norm -p1 forces both symbols to be -1; outside that
    // corner the equation must be unsolvable (checked for the remaining
    // theorem-1.3 pattern in its own body)
    if !(t.s1 == -1 && t.s2 == -1) && !(t.pattern == Pattern::Cond1 && t.s1 == 1 && t.s2 == 1) {
        record(v, !norm_equation_solvable(&ctx.k, &ctx.k_group, -t.p1)?, || {
            format!("norm -{} element exists despite a symbol being +1", t.p1)
        });
    }

    // 2-elementary wide forces 2-elementary narrow when a prime 3 mod 4
    // ramifies; q1 provides one in both patterns
    let f_wide_elem = ctx.af_factors.iter().all(|&x| x == 2);
    if f_wide_elem {
        let narrow_elem = ctx.f_group.narrow_sylow().is_elementary();
        record(v, narrow_elem, || {
            format!("wide A(F) 2-elementary but narrow A(F) is not, d = {}", ctx.f.d)
        });
    }
    Ok(())
}

fn theorem_1_1_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    record(v, ctx.a0 == 2, || format!("A0 = {}, expected 2", ctx.a0));
    record(v, ctx.af == 4, || format!("A(F) = {}, expected 4", ctx.af));
    record(v, ctx.units.q == 1, || {
        format!("Q = {}, expected 1", ctx.units.q)
    });
    record(v, ctx.a1 == 2, || format!("A1 = {}, expected 2", ctx.a1));
    Ok(())
}

fn theorem_1_3_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    let t = &ctx.t;
    let u = &ctx.units;
    let p_pr = ctx.k_group.is_wide_principal(t.p1)?;
    let q1_pr = ctx.k_group.is_wide_principal(t.q1)?;
    let q2_pr = ctx.k_group.is_wide_principal(t.q2)?;

    record(v, p_pr == (ctx.a1 != ctx.a0), || {
        format!(
            "principality of the p1 ideal ({p_pr}) must match A1 != A0 ({} vs {})",
            ctx.a1, ctx.a0
        )
    });
    record(v, !(q1_pr && q2_pr), || {
        "ideals above q1 and q2 are both principal".to_string()
    });
    record(
        v,
        p_pr == ctx.classes_equal(&ctx.k_group, t.q1, t.q2)?,
        || "p1 principal iff [q1] = [q2] failed".to_string(),
    );

    // sqrt(e2) generates the same quartic step as sqrt(p1), hence is not
    // in K1
    record(v, !u.m2, || "sqrt(e2) unexpectedly in K1".to_string());
    let p1_class = SquareClass::from_squarefree(t.p1);
    record(
        v,
        sqrt_unit_in_k1(u.c2.square_class * p1_class, t.d()),
        || format!("c(e2) = {} not p1 times a K1 square", u.c2.square_class),
    );

    if p_pr {
        record(v, !u.m1, || "sqrt(e1) unexpectedly in K1".to_string());
        record(
            v,
            sqrt_unit_in_k1(u.c1.square_class * p1_class, t.d()),
            || format!("c(e1) = {} not p1 times a K1 square", u.c1.square_class),
        );
        record(v, u.m12, || "sqrt(e1 e2) should be in K1".to_string());
        record(v, u.q == 2, || format!("Q = {}, expected 2", u.q));
        record(v, ctx.a1 == 2 * ctx.a0, || {
            format!("A1 = {}, expected 2*A0 = {}", ctx.a1, 2 * ctx.a0)
        });
    } else {
        record(v, q1_pr != q2_pr, || {
            "exactly one of the q ideals must be principal".to_string()
        });
        // [p1] equals the class of the non-principal q, so e1 is the
        // principal q times a square
        let q_pr = if q1_pr { t.q1 } else { t.q2 };
        record(
            v,
            sqrt_unit_in_k1(u.c1.square_class * SquareClass::from_squarefree(q_pr), t.d()),
            || format!("c(e1) = {} not {q_pr} times a K1 square", u.c1.square_class),
        );
        record(v, !u.m1 && !u.m2 && !u.m12, || {
            "no square root of e1, e2, e1 e2 may lie in K1".to_string()
        });
        record(v, u.q == 1, || format!("Q = {}, expected 1", u.q));
        record(v, ctx.a1 == ctx.a0, || {
            format!("A1 = {}, expected A0 = {}", ctx.a1, ctx.a0)
        });
    }
    Ok(())
}

fn corollary_1_4_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    let t = &ctx.t;
    let p_pr = ctx.k_group.is_wide_principal(t.p1)?;
    let plus = norm_equation_solvable(&ctx.k, &ctx.k_group, t.p1)?;
    let minus = norm_equation_solvable(&ctx.k, &ctx.k_group, -t.p1)?;
    record(v, !minus, || {
        format!("norm -{} element exists despite (q/p1) symbols being +1", t.p1)
    });
    // with -p1 impossible, a norm p1 element is the whole story
    record(v, plus == p_pr, || {
        format!("norm {} solvability ({plus}) must match principality ({p_pr})", t.p1)
    });
    if !plus {
        record(v, ctx.a1 == ctx.a0, || {
            format!("unsolvable norm equation but A1 = {} != A0 = {}", ctx.a1, ctx.a0)
        });
        record(v, ctx.a0 >= 4, || {
            format!("A0 = {}, expected at least 4", ctx.a0)
        });
    }
    Ok(())
}

fn theorem_1_5_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    let t = &ctx.t;
    let u = &ctx.units;
    record(v, ctx.a0 == 2, || format!("A0 = {}, expected 2", ctx.a0));
    record(v, ctx.af == 4, || format!("A(F) = {}, expected 4", ctx.af));
    record(v, u.q == 1, || format!("Q = {}, expected 1", u.q));
    record(v, ctx.a1 == 2, || format!("A1 = {}, expected 2", ctx.a1));
    if t.s2 == 1 {
        // the unit and class identities the argument routes through when
        // (p1/q2) = +1
        record(
            v,
            ctx.classes_equal(&ctx.k_group, t.p1, t.q1)?,
            || "[p1] = [q1] in A(K) failed".to_string(),
        );
        record(
            v,
            ctx.classes_equal(&ctx.f_group, t.p1, t.q2)?,
            || "[p1] = [q2] in A(F) failed".to_string(),
        );
        record(
            v,
            sqrt_unit_in_k1(u.c1.square_class * SquareClass::from_squarefree(t.q2), t.d()),
            || format!("c(e1) = {} not q2 times a K1 square", u.c1.square_class),
        );
        record(
            v,
            sqrt_unit_in_k1(u.c2.square_class * SquareClass::from_squarefree(t.q1), t.d()),
            || format!("c(e2) = {} not q1 times a K1 square", u.c2.square_class),
        );
    }
    Ok(())
}

fn concluding_cases_body(ctx: &Ctx, v: &mut Vec<String>) -> Result<()> {
    let t = &ctx.t;
    let u = &ctx.units;
    record(v, ctx.f_group.is_wide_principal(t.q1)?, || {
        "ideal above q1 must be principal in F".to_string()
    });
    record(v, !u.m2, || "sqrt(e2) unexpectedly in K1".to_string());
    record(
        v,
        sqrt_unit_in_k1(u.c2.square_class * SquareClass::from_squarefree(t.q1), t.d()),
        || format!("c(e2) = {} not q1 times a K1 square", u.c2.square_class),
    );

    if t.s2 == -1 {
        record(v, ctx.a0 == 2, || format!("A0 = {}, expected 2", ctx.a0));
        record(
            v,
            ctx.classes_equal(&ctx.k_group, t.p1, t.q2)?,
            || "[p1] = [q2] in A(K) failed".to_string(),
        );
        record(
            v,
            sqrt_unit_in_k1(u.c1.square_class * SquareClass::from_squarefree(t.q1), t.d()),
            || format!("c(e1) = {} not q1 times a K1 square", u.c1.square_class),
        );
        record(v, u.m12, || "sqrt(e1 e2) should be in K1".to_string());
        record(v, u.q == 2, || format!("Q = {}, expected 2", u.q));
        record(v, ctx.a1 == 2 * ctx.a0, || {
            format!("A1 = {}, expected 2*A0 = {}", ctx.a1, 2 * ctx.a0)
        });
    } else {
        let p_pr = ctx.k_group.is_wide_principal(t.p1)?;
        let q1_pr = ctx.k_group.is_wide_principal(t.q1)?;
        let q2_pr = ctx.k_group.is_wide_principal(t.q2)?;
        record(v, ctx.a0 >= 4, || {
            format!("A0 = {}, expected at least 4", ctx.a0)
        });
        record(v, (ctx.a1 == ctx.a0) == !q1_pr, || {
            format!(
                "stability (A1 = {}, A0 = {}) must match q1 non-principality ({})",
                ctx.a1, ctx.a0, !q1_pr
            )
        });
        record(v, !(p_pr && q2_pr), || {
            "ideals above p1 and q2 are both principal".to_string()
        });
        record(
            v,
            q1_pr == ctx.classes_equal(&ctx.k_group, t.p1, t.q2)?,
            || "q1 principal iff [p1] = [q2] failed".to_string(),
        );
        if q1_pr {
            record(v, u.q == 2, || format!("Q = {}, expected 2", u.q));
            record(v, ctx.a1 == 2 * ctx.a0, || {
                format!("A1 = {}, expected 2*A0 = {}", ctx.a1, 2 * ctx.a0)
            });
        } else {
            record(v, u.q == 1, || format!("Q = {}, expected 1", u.q));
        }
    }
    Ok(())
}

fn require_hypothesis(t: &PrimeTriple, pattern: Pattern, cond: bool, msg: &str) -> Result<()> {
    if t.pattern != pattern || !cond {
        return Err(Error::PatternMismatch {
            p1: t.p1,
            q1: t.q1,
            q2: t.q2,
            reason: msg.to_string(),
        });
    }
    Ok(())
}

/// For cond1 triples with (q1 q2/p1) = -1: verifies A1 = A0 = 2. Returns
/// the list of violated assertions, empty when everything holds.
pub fn theorem_1_1_check(t: &PrimeTriple) -> Result<Vec<String>> {
    require_hypothesis(t, Pattern::Cond1, t.s1 * t.s2 == -1, "needs (q1 q2/p1) = -1")?;
    let ctx = Ctx::new(t)?;
    let mut v = Vec::new();
    theorem_1_1_body(&ctx, &mut v)?;
    Ok(v)
}

/// For cond1 triples with both symbols +1: verifies that the ideal above p1
/// is principal exactly when the order grows at the first layer, plus the
/// class and unit identities feeding that equivalence.
pub fn theorem_1_3_check(t: &PrimeTriple) -> Result<Vec<String>> {
    require_hypothesis(
        t,
        Pattern::Cond1,
        t.s1 == 1 && t.s2 == 1,
        "needs (q1/p1) = (q2/p1) = 1",
    )?;
    let ctx = Ctx::new(t)?;
    let mut v = Vec::new();
    theorem_1_3_body(&ctx, &mut v)?;
    Ok(v)
}

/// Same hypotheses as the layer-growth equivalence; decides x^2 - d y^2 =
/// 4 p1 and ties its solvability to principality, with the negative sign
/// ruled out.
pub fn corollary_1_4_check(t: &PrimeTriple) -> Result<Vec<String>> {
    require_hypothesis(
        t,
        Pattern::Cond1,
        t.s1 == 1 && t.s2 == 1,
        "needs (q1/p1) = (q2/p1) = 1",
    )?;
    let ctx = Ctx::new(t)?;
    let mut v = Vec::new();
    corollary_1_4_body(&ctx, &mut v)?;
    Ok(v)
}

/// For cond2 triples with (q1/p1) = -1: verifies A0 = A1 = 2 and Q = 1, and
/// the identities of the argument when (q2/p1) = +1.
pub fn theorem_1_5_check(t: &PrimeTriple) -> Result<Vec<String>> {
    require_hypothesis(t, Pattern::Cond2, t.s1 == -1, "needs (q1/p1) = -1")?;
    let ctx = Ctx::new(t)?;
    let mut v = Vec::new();
    theorem_1_5_body(&ctx, &mut v)?;
    Ok(v)
}

/// For cond2 triples with (q1/p1) = +1, both remaining symbol cases:
/// growth forced when (q2/p1) = -1; growth tied to principality of the
/// ideal above q1 when (q2/p1) = +1.
pub fn concluding_cases_check(t: &PrimeTriple) -> Result<Vec<String>> {
    require_hypothesis(t, Pattern::Cond2, t.s1 == 1, "needs (q1/p1) = 1")?;
    let ctx = Ctx::new(t)?;
    let mut v = Vec::new();
    concluding_cases_body(&ctx, &mut v)?;
    Ok(v)
}

fn stable_xinf(m: u32) -> &'static str {
    match m {
        1 => "Z/2",
        2 => "Z/2^m, m≥2",
        _ => "Z/2^m, m≥3",
    }
}

/// Runs every applicable check for the triple and assembles the full
/// report. Violations are collected, never panicked on, so a scan can
/// surface them.
pub fn build_tower_report(t: &PrimeTriple) -> Result<TowerReport> {
    let ctx = Ctx::new(t)?;
    let mut violations = Vec::new();
    universal_body(&ctx, &mut violations)?;

    let p_principal = ctx.k_group.is_wide_principal(t.p1)?;
    let theorem = match (t.pattern, t.s1, t.s2) {
        (Pattern::Cond1, _, _) if t.s1 * t.s2 == -1 => {
            theorem_1_1_body(&ctx, &mut violations)?;
            "Thm1.1"
        }
        (Pattern::Cond1, 1, 1) => {
            theorem_1_3_body(&ctx, &mut violations)?;
            corollary_1_4_body(&ctx, &mut violations)?;
            if p_principal {
                "Thm1.3"
            } else {
                "Thm1.3+Cor1.4"
            }
        }
        (Pattern::Cond1, _, _) => {
            // both symbols -1: no statement covers the layer growth
            if ctx.a1 == ctx.a0 {
                "Thm2.5"
            } else {
                "none"
            }
        }
        (Pattern::Cond2, -1, _) => {
            theorem_1_5_body(&ctx, &mut violations)?;
            "Thm1.5"
        }
        (Pattern::Cond2, 1, -1) => {
            concluding_cases_body(&ctx, &mut violations)?;
            "Case1"
        }
        (Pattern::Cond2, _, _) => {
            concluding_cases_body(&ctx, &mut violations)?;
            "Case2"
        }
    };

    let stable = ctx.a1 == ctx.a0;
    let (lambda, mu, nu, xinf) = if let Some((l, m, n)) = fukuda_stabilize(ctx.a0, ctx.a1) {
        (
            IwasawaNumber::Known(l),
            IwasawaNumber::Known(m),
            IwasawaNumber::Known(n),
            stable_xinf(n),
        )
    } else {
        match t.pattern {
            // nothing known about the tower beyond the computed layer
            Pattern::Cond1 => (
                IwasawaNumber::Unknown,
                IwasawaNumber::Unknown,
                IwasawaNumber::Unknown,
                "unknown beyond layer 1",
            ),
            // lambda vanishes for this family, so the module is finite
            // cyclic; A1 already bounds it from below
            Pattern::Cond2 => (
                IwasawaNumber::Known(0),
                IwasawaNumber::Known(0),
                IwasawaNumber::Unknown,
                if ctx.a1 >= 8 {
                    "Z/2^m, m≥3"
                } else {
                    "Z/2^m, m≥2"
                },
            ),
        }
    };

    let mut principal = Vec::new();
    for ell in [t.p1, t.q1, t.q2] {
        if ctx.k_group.is_wide_principal(ell)? {
            principal.push(ell.to_string());
        }
    }

    Ok(TowerReport {
        triple: *t,
        symbols: [t.s1, t.s2, t.s1 * t.s2],
        a0: ctx.a0,
        a0_factors: ctx.a0_factors,
        af: ctx.af,
        af_factors: ctx.af_factors,
        q: ctx.units.q,
        a1: ctx.a1,
        fundamental_system: ctx.units.system,
        principal,
        stable,
        lambda,
        mu,
        nu,
        xinf,
        theorem,
        violations,
    })
}

/// One row of the bundled reference tables: the triple, the principal prime
/// the table names, and the two orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub p1: i64,
    pub q1: i64,
    pub q2: i64,
    pub principal: i64,
    pub a0: u64,
    pub a1: u64,
}

fn parse_table(src: &str) -> Vec<TableRow> {
    src.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cells: Vec<i64> = line
                .split(',')
                .map(|c| c.trim().parse().expect("integer table cell"))
                .collect();
            assert_eq!(cells.len(), 6, "table row needs 6 cells");
            TableRow {
                p1: cells[0],
                q1: cells[1],
                q2: cells[2],
                principal: cells[3],
                a0: cells[4] as u64,
                a1: cells[5] as u64,
            }
        })
        .collect()
}

/// The two bundled 10-row reference tables: first the stable rows (the
/// ideal above p1 non-principal), then the growing rows (principal).
pub fn reference_tables() -> (Vec<TableRow>, Vec<TableRow>) {
    (
        parse_table(include_str!("../fixtures/table2.csv")),
        parse_table(include_str!("../fixtures/table3.csv")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::{classify_triple, fundamental_unit, make_field, unit_norm};

    fn class(n: i64) -> SquareClass {
        SquareClass::new(n).unwrap()
    }

    #[test]
    fn c_invariant_frozen_values() {
        for (d, c) in [(165, 15), (330, 55), (105, 21), (210, 15), (3, 6), (34, 2)] {
            let got = c_invariant(&make_field(d).unwrap()).unwrap();
            assert_eq!(got.square_class, class(c), "d = {d}");
        }
        assert_eq!(
            c_invariant(&make_field(2).unwrap()),
            Err(Error::UnitNormNegative(2))
        );
        let c1045 = c_invariant(&make_field(1045).unwrap()).unwrap();
        assert!(!sqrt_unit_in_k1(c1045.square_class, 1045));
    }

    #[test]
    fn c_invariant_complements_through_the_radicand() {
        // sf(T+2) * sf(T-2) = sf(d) since (T+2)(T-2) = u^2 d
        for d in [3, 6, 7, 15, 21, 33, 34, 105, 165, 210, 330, 1045, 2090] {
            let k = make_field(d).unwrap();
            if unit_norm(&k) != 1 {
                continue;
            }
            let fu = fundamental_unit(&k);
            let support: Vec<i64> = factorize(2 * d)
                .unwrap()
                .primes
                .iter()
                .map(|&(p, _)| p)
                .collect();
            let plus = restricted_square_class(&(&fu.t + 2), &support);
            let minus = restricted_square_class(&(&fu.t - 2), &support);
            assert_eq!(plus * minus, squarefree_part(d).unwrap(), "d = {d}");
            assert_eq!(c_invariant(&k).unwrap().square_class, plus);
        }
    }

    #[test]
    fn membership_set() {
        assert!(sqrt_unit_in_k1(class(2), 165));
        assert!(sqrt_unit_in_k1(class(1), 7));
        assert!(sqrt_unit_in_k1(class(165), 165));
        assert!(sqrt_unit_in_k1(class(330), 165));
        assert!(!sqrt_unit_in_k1(class(15), 165));
        assert!(!sqrt_unit_in_k1(class(55), 165));
        // an even class folds the factor 2 into the radicand side
        assert_eq!(class(330) * class(2), class(165));
    }

    #[test]
    fn unit_index_frozen() {
        let (q, system) = hasse_unit_index(&classify_triple(5, 11, 19).unwrap());
        assert_eq!((q, system), (1, FundSystem::Plain));

        let (q, system) = hasse_unit_index(&classify_triple(5, 11, 131).unwrap());
        assert_eq!((q, system), (2, FundSystem::SqrtProduct));

        let (q, _) = hasse_unit_index(&classify_triple(5, 7, 3).unwrap());
        assert_eq!(q, 1);
    }

    #[test]
    fn layer_one_orders() {
        assert_eq!(kuroda_a1(&classify_triple(5, 11, 19).unwrap()).unwrap(), 4);
        assert_eq!(kuroda_a1(&classify_triple(5, 11, 131).unwrap()).unwrap(), 8);
        assert_eq!(kuroda_a1(&classify_triple(13, 43, 179).unwrap()).unwrap(), 16);
    }

    #[test]
    fn stability_outcomes() {
        assert_eq!(fukuda_stabilize(4, 4), Some((0, 0, 2)));
        assert_eq!(fukuda_stabilize(2, 2), Some((0, 0, 1)));
        assert_eq!(fukuda_stabilize(4, 8), None);
    }

    #[test]
    fn checks_pass_on_known_triples() {
        for (p1, q1, q2) in [(5, 3, 11), (5, 3, 19)] {
            let t = classify_triple(p1, q1, q2).unwrap();
            assert_eq!(theorem_1_1_check(&t).unwrap(), Vec::<String>::new());
        }
        assert!(theorem_1_1_check(&classify_triple(5, 11, 19).unwrap()).is_err());

        for (p1, q1, q2) in [(5, 11, 19), (5, 11, 131), (53, 11, 43)] {
            let t = classify_triple(p1, q1, q2).unwrap();
            assert_eq!(theorem_1_3_check(&t).unwrap(), Vec::<String>::new());
            assert_eq!(corollary_1_4_check(&t).unwrap(), Vec::<String>::new());
        }
        assert!(theorem_1_3_check(&classify_triple(5, 3, 11).unwrap()).is_err());

        for (p1, q1, q2) in [(5, 7, 3), (5, 7, 11), (13, 7, 3)] {
            let t = classify_triple(p1, q1, q2).unwrap();
            assert_eq!(theorem_1_5_check(&t).unwrap(), Vec::<String>::new());
        }

        // (31/5) = 1 and (3/5) = -1: the forced-growth case
        let case1 = classify_triple(5, 31, 3).unwrap();
        assert_eq!((case1.s1, case1.s2), (1, -1));
        assert_eq!(concluding_cases_check(&case1).unwrap(), Vec::<String>::new());

        // (31/5) = (11/5) = 1: growth tied to the ideal above q1
        let case2 = classify_triple(5, 31, 11).unwrap();
        assert_eq!((case2.s1, case2.s2), (1, 1));
        assert_eq!(concluding_cases_check(&case2).unwrap(), Vec::<String>::new());

        assert!(theorem_1_5_check(&case1).is_err());
        assert!(concluding_cases_check(&classify_triple(5, 7, 3).unwrap()).is_err());
    }

    #[test]
    fn report_for_a_stable_triple() {
        let r = build_tower_report(&classify_triple(5, 11, 19).unwrap()).unwrap();
        assert_eq!(
            (r.a0, r.af, r.q, r.a1, r.stable),
            (4, 4, 1, 4, true)
        );
        assert_eq!(r.a0_factors, vec![4]);
        assert_eq!(r.af_factors, vec![2, 2]);
        assert_eq!(r.principal, vec!["11"]);
        assert_eq!(r.theorem, "Thm1.3+Cor1.4");
        assert_eq!(r.xinf, "Z/2^m, m≥2");
        assert_eq!(
            (r.lambda, r.mu, r.nu),
            (
                IwasawaNumber::Known(0),
                IwasawaNumber::Known(0),
                IwasawaNumber::Known(2)
            )
        );
        assert_eq!(r.fundamental_system, FundSystem::Plain);
        assert_eq!(r.violations, Vec::<String>::new());
    }

    #[test]
    fn report_for_a_growing_triple() {
        let r = build_tower_report(&classify_triple(5, 11, 131).unwrap()).unwrap();
        assert_eq!((r.a0, r.q, r.a1, r.stable), (4, 2, 8, false));
        assert_eq!(r.principal, vec!["5"]);
        assert_eq!(r.theorem, "Thm1.3");
        assert_eq!(r.xinf, "unknown beyond layer 1");
        assert_eq!(r.lambda, IwasawaNumber::Unknown);
        assert_eq!(r.fundamental_system, FundSystem::SqrtProduct);
        assert_eq!(r.violations, Vec::<String>::new());
    }

    #[test]
    fn report_for_the_small_pattern() {
        let r = build_tower_report(&classify_triple(5, 3, 11).unwrap()).unwrap();
        assert_eq!((r.a0, r.af, r.q, r.a1), (2, 4, 1, 2));
        assert!(r.stable);
        assert_eq!(r.theorem, "Thm1.1");
        assert_eq!(r.xinf, "Z/2");
        assert_eq!(r.nu, IwasawaNumber::Known(1));
        assert_eq!(r.violations, Vec::<String>::new());
    }

    #[test]
    fn report_json_shape() {
        let r = build_tower_report(&classify_triple(5, 11, 131).unwrap()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        assert_eq!(
            keys,
            vec![
                "p1", "q1", "q2", "pattern", "symbols", "A0", "A0_factors", "AF", "AF_factors",
                "Q", "A1", "principal", "stable", "lambda", "mu", "nu", "Xinf", "theorem",
                "violations"
            ]
        );
        assert_eq!(v["pattern"], "cond1");
        assert_eq!(v["symbols"], serde_json::json!([1, 1, 1]));
        assert_eq!(v["A1"], 8);
        assert_eq!(v["principal"], serde_json::json!(["5"]));
        assert_eq!(v["lambda"], "unknown");
        assert_eq!(v["stable"], false);

        let stable = build_tower_report(&classify_triple(5, 3, 11).unwrap()).unwrap();
        let v = serde_json::to_value(&stable).unwrap();
        assert_eq!(v["nu"], 1);
        assert_eq!(v["Xinf"], "Z/2");
    }

    #[test]
    fn random_triples_verify_clean() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
            cases: 32,
            ..Default::default()
        });
        let pool_p: Vec<i64> = (0..40i64)
            .map(|k| 8 * k + 5)
            .filter(|&n| crate::arith::is_prime(n))
            .collect();
        let pool_q3: Vec<i64> = (0..40i64)
            .map(|k| 8 * k + 3)
            .filter(|&n| crate::arith::is_prime(n))
            .collect();
        let pool_q7: Vec<i64> = (0..40i64)
            .map(|k| 8 * k + 7)
            .filter(|&n| crate::arith::is_prime(n))
            .collect();
        runner
            .run(
                &(0..pool_p.len(), 0..pool_q3.len(), 0..pool_q3.len(), 0..pool_q7.len(), any::<bool>()),
                |(i, j, k, l, cond2)| {
                    let (q1, q2) = if cond2 {
                        (pool_q7[l], pool_q3[j])
                    } else {
                        (pool_q3[j], pool_q3[k])
                    };
                    prop_assume!(q1 != q2);
                    let t = classify_triple(pool_p[i], q1, q2).unwrap();
                    let r = build_tower_report(&t).unwrap();
                    prop_assert_eq!(&r.violations, &Vec::<String>::new(), "triple {:?}", t);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn bundled_tables_parse() {
        let (t2, t3) = reference_tables();
        assert_eq!(t2.len(), 10);
        assert_eq!(t3.len(), 10);
        assert_eq!(
            t2[0],
            TableRow {
                p1: 5,
                q1: 11,
                q2: 19,
                principal: 11,
                a0: 4,
                a1: 4
            }
        );
        assert_eq!(
            t3[9],
            TableRow {
                p1: 53,
                q1: 11,
                q2: 43,
                principal: 53,
                a0: 16,
                a1: 32
            }
        );
        for row in t2.iter().chain(&t3) {
            classify_triple(row.p1, row.q1, row.q2).unwrap();
        }
    }
}
