use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("cavity field did not converge after {iterations} iterations (last relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("transmission {value} is not reachable on the operating flank: {reason}")]
    SignalOutOfRange { value: f64, reason: String },

    #[error("transmission {value} implies cos^2(X/2) = {cos2}, outside [0, 1]")]
    InconsistentSignal { value: f64, cos2: f64 },

    #[error("position inversion did not converge after {iterations} iterations (last step {step:e})")]
    InversionNonConvergence { iterations: usize, step: f64 },

    #[error("size error: {0}")]
    Size(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("kick {index}: {source}")]
    AtKick {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parameter(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_kick(self, index: usize) -> Self {
        Error::AtKick {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }
}
