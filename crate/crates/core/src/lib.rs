//! Topp-Leone exponential and Topp-Leone q-exponential lifetime laws, fitted
//! by least squares, weighted least squares, Cramér–von Mises and
//! Anderson–Darling minimum-distance estimation, with a maximum-likelihood
//! baseline and a seeded Monte Carlo harness for comparing the estimators.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod montecarlo;
pub mod objectives;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod sample;

pub use distributions::{DistKind, DistParams, Support, TleParams, TlqeParams};
pub use error::{Error, Result};
pub use estimators::{fit, fit_mle, FitRequest, FitResult, Method};
pub use montecarlo::{run_study, StudyCell, StudyConfig, StudyReport};
pub use objectives::{ObjectiveKind, ObjectiveValue};
pub use optimize::{OptimizeOutcome, OptimizerConfig, ParamSpace, RefineOutcome};
pub use sample::SortedSample;
