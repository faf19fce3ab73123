use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed ring: {0}")]
    MalformedRing(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("factor {0} carries no Frobenius lift")]
    UnsupportedLift(String),
    #[error("operands live over different rings")]
    RingMismatch,
    #[error("result window is empty")]
    EmptyResultWindow,
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("series has negative support")]
    NegativeSupport,
    #[error("exponent {0} is divisible by p")]
    NonUnitExponent(i64),
    #[error("operator variable sets differ")]
    DeltaMismatch,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("no generator for gamma parameter {0}")]
    MissingGammaParameter(i64),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("principal part in the solved variable needs a ramified extension")]
    PrincipalPartUnsupported,
    #[error("generator matrices violate the group relations: {0}")]
    NotACocycle(String),
    #[error("invariants have deficient rank: {0}")]
    DescentDefect(String),
    #[error("unsupported ramification: {0}")]
    UnsupportedRamification(String),
    #[error("insufficient level: found rank {found}, expected {expected}")]
    InsufficientLevel { found: usize, expected: usize },
    #[error("fixed module is not free: {0}")]
    NonFreeSolution(String),
    #[error("lifting obstruction is nonzero: {0}")]
    ObstructionNonzero(String),
    #[error("maps do not commute: {0}")]
    NonCommutingMaps(String),
    #[error("d^2 is nonzero in degree {0}")]
    D2NotZero(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
