use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate overflow in {0}")]
    Overflow(&'static str),
    #[error("decode precision {0} bits is below the 53-bit minimum")]
    Precision(u32),
    #[error("impulse response is not diagonal against the DCT-II basis (row {row}, residual {residual:e})")]
    NotDiagonal { row: usize, residual: f64 },
    #[error("empty search range [{lo}, {hi}] with step {step}")]
    EmptyRange { lo: f64, hi: f64, step: f64 },
    #[error("no shift-add schedule for the factor set {0:?}")]
    UnknownFactorSet([i64; 3]),
    #[error("stream length {0} is not a multiple of 64")]
    StreamLength(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
