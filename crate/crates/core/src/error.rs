use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation overflow at reduced argument {re}+{im}i")]
    Overflow { re: f64, im: f64 },
    #[error("denominator magnitude {magnitude:e} below pole guard")]
    Pole { magnitude: f64 },
    #[error("variable {0} is not bound in the assignment")]
    UnboundVariable(usize),
    #[error("sampling exhausted after {draws} draws ({accepted} of {requested} points accepted)")]
    SamplingExhausted {
        draws: usize,
        accepted: usize,
        requested: usize,
    },
    #[error("element is not invertible (reciprocal condition {rcond:e})")]
    NotInvertible { rcond: f64 },
    #[error("determinant size {0} exceeds the supported maximum of 6")]
    TooLarge(usize),
    #[error("grid is not square or ragged: {0}")]
    Shape(String),
    #[error("operators belong to different algebras")]
    AlgebraMismatch,
    #[error("numerical rank is ambiguous (singular-value gap {gap:.3e} < 1e3)")]
    RankAmbiguous { gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
