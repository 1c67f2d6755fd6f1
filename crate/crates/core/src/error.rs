//! Shared error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum DbcError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("element not in the valuation ring: {0}")]
    NotInValuationRing(String),
    #[error("bad base field: {0}")]
    BadField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix has entries outside D: {0}")]
    NotOverD(String),
    #[error("matrix not invertible")]
    NotInvertible,
    #[error("polynomial is reducible: {0}")]
    ReduciblePolynomial(String),
    #[error("band polynomial must differ from t")]
    PhiEqualsT,
    #[error("unknown bunch element: {0}")]
    UnknownElement(String),
    #[error("invalid bunch: {0}")]
    InvalidBunch(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("bad shift index {0} for cycle of length {1}")]
    BadShiftIndex(usize, usize),
    #[error("invalid representation: {0}")]
    InvalidRep(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("illegal transformation pair: {0}")]
    IllegalPair(String),
    #[error("bunch mismatch between representations")]
    BunchMismatch,
    #[error("transformation violates an e-condition: {0}")]
    EConditionViolated(String),
    #[error("periodic cycle cannot define a band")]
    PeriodicCycle,
    #[error("bad band polynomial: {0}")]
    BadPolynomial(String),
    #[error("representation is zero; no leading pair")]
    ZeroRepresentation,
    #[error("reduction made no progress: {0}")]
    NoProgress(String),
    #[error("bad cusp type: {0}")]
    BadType(String),
    #[error("bad (n, m) pair: {0}")]
    BadPair(String),
    #[error("bad catalog case: {0}")]
    BadCase(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad family: {0}")]
    BadFamily(String),
    #[error("bad band data: {0}")]
    BadBandData(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("polynomial factorization not supported here: {0}")]
    FactorizationUnsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
