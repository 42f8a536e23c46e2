use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty word")]
    EmptyWord,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("generator degree {found} exceeds depth bound {depth}")]
    DepthExceeded { found: u32, depth: u32 },

    #[error("no value assigned to Lyndon variable {0}")]
    MissingAssignment(String),

    #[error("bad prime {prime}: a denominator vanishes mod p")]
    BadPrime { prime: u64 },

    #[error("degenerate sample: cross-prime disagreement persisted through {attempts} attempts")]
    DegenerateSample { attempts: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not of stated degree: leading coefficient vanishes")]
    DegreeDrop,

    #[error("factorization claim violated: {0}")]
    Factorization(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("cache format: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
