use thiserror::Error;

/// Errors raised by the group, set, series and simulation layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} must be a squarefree integer >= 2")]
    InvalidModulus(u64),

    #[error("matrix dimension {0} outside the supported range 1..=16")]
    InvalidDimension(usize),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("matrix is not invertible modulo {0}")]
    NotInvertible(u64),

    #[error("operation requires a prime modulus, got {0}")]
    CompositeModulus(u64),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime {prime} does not divide modulus {modulus}")]
    PrimeDoesNotDivide { prime: u64, modulus: u64 },

    #[error("duplicate prime {0} in residue list")]
    DuplicatePrime(u64),

    #[error("matrix is not a symplectic similitude")]
    NotSimilitude,

    #[error("{0} is not a prime power")]
    NotPrimePower(u64),

    #[error("q = {q} is not coprime to n = {n}")]
    NotCoprime { q: u64, n: u64 },

    #[error("work estimate {estimate} exceeds budget {budget}")]
    BudgetExceeded { estimate: u128, budget: u64 },

    #[error("only {available} matrices without eigenvalue 1 are available, {needed} required")]
    InsufficientMatrices { needed: u64, available: u64 },

    #[error("prime {ell} rejected: {reason}")]
    UnsupportedPrime { ell: u64, reason: String },

    #[error("special set is not materialized")]
    NotMaterialized,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
