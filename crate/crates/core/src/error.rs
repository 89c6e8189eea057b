use thiserror::Error;

/// Errors raised by kernel construction, discretization, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("shift {re} + {im}i lies on the real axis; the resolvent may not exist")]
    ShiftOnRealAxis { re: f64, im: f64 },

    #[error("unsupported derivative order {0} (supported: 1, 2)")]
    UnsupportedOrder(u32),

    #[error("self-adjointness violation: {0}")]
    SelfAdjointness(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid pencil: {0}")]
    InvalidPencil(String),

    #[error("truncated system of size {n} is numerically singular at this shift; increase the truncation")]
    NearSpectrum { n: usize },

    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
