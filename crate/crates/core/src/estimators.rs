//! Fitting entry points: minimum-distance estimation for the four objectives
//! and a maximum-likelihood baseline.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistKind, DistParams, TleParams, TlqeParams};
use crate::error::{Error, Result};
use crate::objectives::{self, ObjectiveKind};
use crate::optimize::{default_initial_guesses, minimize, refine, OptimizerConfig, ParamSpace};
use crate::sample::SortedSample;

/// Smallest sample accepted by [`fit`].
pub const MIN_FIT_SIZE: usize = 3;

/// A fitted TLqE deformation this close to 1 is reported as exactly 1.
pub const Q_SNAP_TOLERANCE: f64 = 1e-6;

/// A fit whose `|ln lambda|` or `|ln alpha|` exceeds this has run off along a
/// ridge toward a limiting law rather than settling at an interior minimum,
/// and is reported as not converged.
pub const DIVERGENCE_LOG_BOUND: f64 = 40.0;

fn diverged(p: &DistParams) -> bool {
    p.lambda().ln().abs() > DIVERGENCE_LOG_BOUND || p.alpha().ln().abs() > DIVERGENCE_LOG_BOUND
}

/// Estimation method: one of the four minimum-distance objectives, or maximum
/// likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ls,
    Wls,
    Cvm,
    Ad,
    Ml,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ls, Method::Wls, Method::Cvm, Method::Ad, Method::Ml];

    pub fn objective_kind(self) -> Option<ObjectiveKind> {
        match self {
            Method::Ls => Some(ObjectiveKind::Ls),
            Method::Wls => Some(ObjectiveKind::Wls),
            Method::Cvm => Some(ObjectiveKind::Cvm),
            Method::Ad => Some(ObjectiveKind::Ad),
            Method::Ml => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Wls => "wls",
            Method::Cvm => "cvm",
            Method::Ad => "ad",
            Method::Ml => "ml",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct FitRequest {
    pub sample: SortedSample,
    pub distribution: DistKind,
    pub method: Method,
    pub optimizer: OptimizerConfig,
}

impl FitRequest {
    pub fn new(sample: SortedSample, distribution: DistKind, method: Method) -> Self {
        FitRequest {
            sample,
            distribution,
            method,
            optimizer: OptimizerConfig::default(),
        }
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerConfig) -> Self {
        self.optimizer = optimizer;
        self
    }
}

/// Outcome of a fit. For maximum likelihood `objective_value` is the negative
/// log-likelihood at `params`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: DistParams,
    pub objective_value: f64,
    pub method: Method,
    pub converged: bool,
    /// Euclidean norm of the objective gradient at `params`; absent for
    /// maximum likelihood.
    pub stationarity_norm: Option<f64>,
    pub n: usize,
    pub iterations: usize,
    pub starts_tried: usize,
    pub per_start_values: Vec<f64>,
}

/// `-sum ln f(x_i)`; `+inf` when any observation has zero density.
pub fn negative_log_likelihood(sample: &SortedSample, p: &DistParams) -> f64 {
    if let DistParams::Tlqe(t) = p {
        if !t.is_exponential_limit() && t.q() < 1.0 && (1.0 - t.q()) * t.lambda() * sample.max() >= 1.0 {
            return f64::INFINITY;
        }
    }
    let mut acc = 0.0;
    for &x in sample.values() {
        let l = p.ln_pdf(x);
        if l == f64::NEG_INFINITY || l.is_nan() {
            return f64::INFINITY;
        }
        acc -= l;
    }
    acc
}

fn criterion(method: Method, sample: &SortedSample, p: &DistParams) -> f64 {
    match method.objective_kind() {
        Some(kind) => objectives::value(kind, sample, p),
        None => negative_log_likelihood(sample, p),
    }
}

/// Iteration cap for the gradient polish after the simplex.
pub const REFINE_ITERATIONS: usize = 100;

/// The polish stops once the gradient norm is below this times `1 + |value|`.
pub const REFINE_GRADIENT_TOLERANCE: f64 = 1e-9;

/// Slack, relative to `1 + |value|`, within which the polish may trade
/// objective value for a smaller gradient. It sits at the rounding level of
/// the objective sums.
pub const REFINE_VALUE_SLACK: f64 = 1e-10;

/// Polishes a simplex solution with the analytic gradient; keeps the simplex
/// point when the polish does not reduce the gradient norm.
fn polish(
    method: Method,
    sample: &SortedSample,
    space: &ParamSpace,
    params: DistParams,
    value: f64,
) -> (DistParams, f64, usize) {
    let Some(kind) = method.objective_kind() else {
        return (params, value, 0);
    };
    let scale = 1.0 + value.abs();
    let objective = |p: &DistParams| {
        let ov = objectives::evaluate(kind, sample, p);
        ov.gradient.map(|g| (ov.value, g))
    };
    match refine(
        objective,
        space,
        &params,
        REFINE_ITERATIONS,
        REFINE_GRADIENT_TOLERANCE * scale,
        REFINE_VALUE_SLACK * scale,
    ) {
        Some(r) if r.iterations > 0 => (r.point, r.value, r.iterations),
        _ => (params, value, 0),
    }
}

fn check_request(req: &FitRequest) -> Result<()> {
    if req.sample.len() < MIN_FIT_SIZE {
        return Err(Error::SampleTooSmall {
            n: req.sample.len(),
            min: MIN_FIT_SIZE,
        });
    }
    req.optimizer.validate()
}

fn run(req: &FitRequest) -> Result<FitResult> {
    check_request(req)?;
    let sample = &req.sample;
    let method = req.method;
    let space = ParamSpace::new(req.distribution);
    let guesses = default_initial_guesses(sample, req.distribution, &req.optimizer);
    let outcome = minimize(
        |p| criterion(method, sample, p),
        &space,
        &req.optimizer,
        &guesses,
    )?;

    let (mut params, mut value, polished) =
        polish(method, sample, &space, outcome.best_point, outcome.best_value);
    let mut converged = outcome.converged;
    let mut iterations = outcome.iterations_used + polished;

    if let DistParams::Tlqe(t) = params {
        if (t.q() - 1.0).abs() < Q_SNAP_TOLERANCE {
            let start: DistParams = TleParams::new(t.alpha(), t.lambda())?.into();
            let tle_space = ParamSpace::new(DistKind::Tle);
            let refit = minimize(
                |p| criterion(method, sample, p),
                &tle_space,
                &req.optimizer,
                &[start],
            )?;
            let (best, _, polished) =
                polish(method, sample, &tle_space, refit.best_point, refit.best_value);
            params = TlqeParams::new(best.alpha(), best.lambda(), 1.0)?.into();
            value = criterion(method, sample, &params);
            converged = refit.converged;
            iterations += refit.iterations_used + polished;
        }
    }

    let stationarity_norm = method.objective_kind().and_then(|kind| {
        objectives::gradient(kind, sample, &params)
            .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
    });

    Ok(FitResult {
        params,
        objective_value: value,
        method,
        converged: converged && value.is_finite() && !diverged(&params),
        stationarity_norm,
        n: sample.len(),
        iterations,
        starts_tried: outcome.starts_tried,
        per_start_values: outcome.per_start_values,
    })
}

/// Fits `req.distribution` to `req.sample` with `req.method`.
pub fn fit(req: &FitRequest) -> Result<FitResult> {
    run(req)
}

/// Maximum-likelihood fit; `req.method` is ignored and reported as [`Method::Ml`].
pub fn fit_mle(req: &FitRequest) -> Result<FitResult> {
    let req = FitRequest {
        method: Method::Ml,
        ..req.clone()
    };
    run(&req)
}
