use thiserror::Error;

/// Errors produced by the exponent, design and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} is outside the CGF domain (-{limit}, {limit})")]
    Domain { value: f64, limit: f64 },

    #[error("signal has zero power")]
    DegenerateSignal,

    #[error("quantizer cell {0} has zero probability")]
    EmptyCell(usize),

    #[error("quadrature did not reach tolerance (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("no correlator power attains the requested FA exponent")]
    Infeasible,

    #[error("tilt parameter {0} leaves the CGF domain")]
    DegenerateTilt(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
