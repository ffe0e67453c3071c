use thiserror::Error;

/// Errors raised by the rounding emulator, the kernels, the oracle and the
/// bound calculator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("value {0:e} is outside the modeled carrier range")]
    OutOfRange(f64),

    #[error("result of {op} overflows the modeled carrier range")]
    Overflow { op: &'static str },

    #[error("division by zero")]
    DivisionByZero,

    #[error("value {0} is not representable with {1} significand bits")]
    NotRepresentable(f64, u32),

    #[error("precision must lie in [2, 24], got {0}")]
    InvalidPrecision(u32),

    #[error("empty input")]
    EmptyInput,

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("relative error is undefined when the exact value is zero")]
    UndefinedRelativeError,

    #[error("bound is undefined: condition number {0} is infinite")]
    UndefinedBound(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by numerical domains rather than malformed
    /// configuration.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::InvalidPrecision(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
