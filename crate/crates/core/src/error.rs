use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("radicand must be a squarefree integer > 1, got {0}")]
    BadRadicand(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("discriminant must be positive and not a perfect square, got {0}")]
    BadDiscriminant(i64),
    #[error("form ({0}, {1}, {2}) has gcd > 1")]
    ImprimitiveForm(i64, i64, i64),
    #[error("forms have different discriminants: {0} vs {1}")]
    DiscriminantMismatch(i64, i64),
    #[error("{prime} is not ramified in the field of discriminant {disc}")]
    NotRamified { prime: i64, disc: i64 },
    #[error("({p1}, {q1}, {q2}) does not match the congruence pattern: {reason}")]
    PatternMismatch {
        p1: i64,
        q1: i64,
        q2: i64,
        reason: String,
    },
    #[error("fundamental unit of Q(sqrt {0}) has norm -1, so it has no c-invariant")]
    UnitNormNegative(i64),
    #[error("genus formula inputs yield a non-integral order")]
    NonIntegralOrder,
    #[error("unit index must be 1 or 2, got {0}")]
    BadUnitIndex(u64),
    #[error("value too large for {0}")]
    Overflow(&'static str),
    #[error("cannot parse {what}: {input}")]
    BadArgument { what: &'static str, input: String },
    #[error("{context}: {message}")]
    Io {
        context: &'static str,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
