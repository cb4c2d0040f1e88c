use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime in 3..=101")]
    InvalidModulus(u32),
    #[error("operands live over different fields (F_{0} vs F_{1})")]
    FieldMismatch(u32, u32),
    #[error("polynomial has zero constant term")]
    ZeroConstantTerm,
    #[error("polynomial is not monic")]
    NotMonic,
    #[error("no polynomial found: {0}")]
    NotFound(String),
    #[error("matrix is singular")]
    Singular,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("group order {order} exceeds the enumeration cap {cap}")]
    TooLarge { order: u128, cap: u128 },
    #[error("subspace is not a Lagrangian")]
    NotLagrangian,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not symplectic: {0}")]
    NotSymplectic(String),
    #[error("no decomposition of length <= {0}")]
    Exceeds(usize),
    #[error("table mismatch: {0}")]
    Mismatch(String),
    #[error("invalid pullback problem: {0}")]
    InvalidProblem(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("invalid scalar: {0}")]
    InvalidScalar(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),
    #[error("unrealizable cell parameters: {0}")]
    Unrealizable(String),
    #[error("unknown fixture name: {0}")]
    UnknownName(String),
    #[error("fixture requires a different field: {0}")]
    WrongField(String),
    #[error("malformed input: {0}")]
    Parse(String),
}
