use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A per-rotor speed lies outside the normalized range [0, 1].
    #[error("rotor {index} normalized speed {value} is outside [0, 1]")]
    OutOfCalibrationRange { index: usize, value: f64 },

    /// A sample stream is out of order or misaligned.
    #[error("stream error at index {index}: {reason}")]
    Stream { index: usize, reason: String },

    /// A regression could not be solved.
    #[error("fit error: {0}")]
    Fit(String),

    /// A model document could not be decoded.
    #[error("decode error: {0}")]
    Decode(String),

    /// A required model was not provided.
    #[error("usage error: {0}")]
    Usage(String),

    /// The simulated vehicle left its actuator envelope.
    #[error("simulation error at t = {t:.3} s: {reason}")]
    Simulation { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn ensure_finite3(name: &str, v: &nalgebra::Vector3<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(param(format!("{name} has non-finite components")))
    }
}
