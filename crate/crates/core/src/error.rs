use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol `{symbol}` has arity {expected} but was given {found} argument(s)")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },

    #[error("variable x{0} has no value")]
    UnboundVariable(usize),

    #[error("element {element} is outside the universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("{what} of size {size} exceeds the configured bound {bound}")]
    SizeBound {
        what: &'static str,
        size: u128,
        bound: u128,
    },

    #[error("{what}: budget of {budget} exhausted (inconclusive)")]
    BudgetExceeded { what: &'static str, budget: u64 },

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("universe size mismatch: {left} vs {right}")]
    UniverseMismatch { left: usize, right: usize },

    #[error("empty seed set and no nullary operations: the generated subuniverse would be empty")]
    EmptySubuniverse,

    #[error("pair ({0}, {1}) is not in the generated congruence")]
    NotDerivable(usize, usize),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("formula (1) fails in the generated variety: generators are not related by the transformer congruence of the free algebra")]
    NotInGeneratedVariety,

    #[error("transformers are not valid in the algebra: counterexample ({0}, {1})")]
    TransformersInvalid(usize, usize),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("lifting failed (implementation bug): {0}")]
    LiftFailed(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// True for errors that mean "ran out of budget" rather than "the input is wrong".
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
