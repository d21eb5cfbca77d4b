use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("only {found} of {wanted} primes of {bits} bits congruent to 1 mod {step} exist")]
    InsufficientPrimes {
        wanted: usize,
        found: usize,
        bits: u32,
        step: u64,
    },

    #[error("input {value} exceeds the reduction domain of modulus {modulus}")]
    ReductionRange { value: u128, modulus: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("source and target bases share modulus {0}")]
    OverlappingBases(u64),

    #[error("ring degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("polynomial is in the wrong representation for {0}")]
    Representation(&'static str),

    #[error("level mismatch: {0} vs {1} limbs")]
    LevelMismatch(usize, usize),

    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),

    #[error("ciphertext has {limbs} limb(s) left; {op} needs bootstrapping first")]
    NeedsBootstrapping { op: &'static str, limbs: usize },

    #[error("missing switching key: {0}")]
    MissingKey(String),

    #[error("encoded value overflows the modulus: {0}")]
    EncodingOverflow(String),

    #[error("EvalMod input {0} lies outside [-1, 1]")]
    EvalModRange(f64),

    #[error("bad magic bytes in serialized object")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated input: needed {needed} more bytes")]
    Truncated { needed: usize },

    #[error("parameter mismatch: {0}")]
    ParamsMismatch(String),

    #[error("level underflow: {needed} limbs needed, {available} available")]
    LevelUnderflow { needed: usize, available: usize },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
