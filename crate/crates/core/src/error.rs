use thiserror::Error;

/// Errors produced across the simulation, analysis and estimation stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("transfer function is not finite at {freq_hz} Hz")]
    NonFiniteTransfer { freq_hz: f64 },

    #[error("invalid WDM configuration: {0}")]
    InvalidWdm(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("channel index {index} out of range for {n_channels} channels")]
    ChannelOutOfRange { index: i64, n_channels: usize },

    #[error("invalid link configuration: {0}")]
    InvalidLink(String),

    #[error("scheme {0} has no inline dispersion-compensating element")]
    NoDcElement(String),

    #[error("split-step propagation produced non-finite samples; increase steps per span")]
    NumericBlowUp,

    #[error("invalid interferer: {0}")]
    InvalidInterferer(String),

    #[error("quadrature did not converge: relative change {rel_change:.3e} at M = {m}")]
    QuadratureNotConverged { m: usize, rel_change: f64 },

    #[error("interferer grid too coarse: {bins} nonzero bins (need at least {min})")]
    CoarseInterferer { bins: usize, min: usize },

    #[error("invalid auxiliary channel parameters: {0}")]
    InvalidParams(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("gain/noise estimation did not converge after {0} alternations")]
    EstimationNotConverged(usize),

    #[error("particle weights collapsed at symbol {index}")]
    WeightUnderflow { index: usize },

    #[error("invalid optimizer configuration: {0}")]
    InvalidGa(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
