use thiserror::Error;

/// Errors shared across the sieve, solver, and gap-finding modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("divisor does not divide the primorial: offending prime power {prime}^{exponent}")]
    DivisorNotDividing { prime: u64, exponent: u32 },

    #[error("invalid divisor expression `{0}`")]
    BadDivisor(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no solution: multiplier is 0 mod p but the target interval excludes 0")]
    NoSolution,

    #[error(
        "sieve needs ~{required} bytes (grid {grid} + prime cache {cache} + row table {table}), \
         over the {budget} byte budget"
    )]
    MemoryBudget {
        required: u64,
        grid: u64,
        cache: u64,
        table: u64,
        budget: u64,
    },

    #[error("gap search for m={m} exceeded the {cap} offset cap on the {side} side")]
    SearchCapExceeded { m: u64, side: &'static str, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
