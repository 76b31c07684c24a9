use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input that no amount of computation can repair
    /// (zero denominators, perfect-square discriminants, empty ranges...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// mα landed exactly on ℤ or ℤ + 1/2. Only rational α can do this, and
    /// it makes S_M (or the requested distance) undefined rather than zero.
    #[error("degenerate at m = {m}: m·α is exactly {hit} (rational α)")]
    Degenerate { m: u64, hit: DegenerateHit },

    /// A finite expansion ran out before the requested depth.
    #[error("expansion exhausted: {available} quotients available, {requested} requested")]
    ExpansionExhausted { available: usize, requested: usize },

    /// A random dyadic α was asked for quotients beyond the depth its bit
    /// budget can certify.
    #[error("validity horizon exceeded: horizon {horizon}, requested depth {requested}")]
    HorizonExceeded { horizon: usize, requested: usize },

    /// Periodicity detection gave up; for a normalized quadratic surd this
    /// means `max_steps` was too small (or there is a bug upstream).
    #[error("no cycle found within {max_steps} steps of the surd recurrence")]
    CycleNotFound { max_steps: usize },

    /// A generated quotient exceeded the configured cap.
    #[error("quotient cap exceeded at index {k}: cap {cap}")]
    CapExceeded { k: usize, cap: BigUint },

    /// A wall-clock budget ran out mid-computation.
    #[error("runtime budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// Which exceptional value m·α hit exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateHit {
    Integer,
    HalfInteger,
}

impl std::fmt::Display for DegenerateHit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DegenerateHit::Integer => write!(f, "an integer"),
            DegenerateHit::HalfInteger => write!(f, "a half-integer"),
        }
    }
}
