use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid simulation or correlator parameters.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("quantization axis undefined: magnetic field vanishes at the active region")]
    QuantizationAxisUndefined,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("no threshold in range [{lo:e}, {hi:e}]")]
    NoThreshold { lo: f64, hi: f64 },

    /// The multi-family steady-state iteration did not settle.
    #[error("steady state did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("empty click stream")]
    EmptyStream,

    #[error("click stream not strictly increasing at index {0}")]
    Unsorted(usize),

    #[error("click stream format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
