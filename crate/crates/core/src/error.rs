use thiserror::Error;

/// Errors produced by the distribution, fitting and study routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("argument {name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("sample is empty")]
    EmptySample,
    #[error("observation {index} is invalid ({value}); observations must be finite and nonnegative")]
    InvalidObservation { index: usize, value: f64 },
    #[error("sample of size {n} is too small; at least {min} observations are required")]
    SampleTooSmall { n: usize, min: usize },
    #[error("no initial guess is feasible for the objective")]
    NoFeasibleStart,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
