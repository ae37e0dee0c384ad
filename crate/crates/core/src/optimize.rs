//! Multi-start Nelder–Mead over an unconstrained reparameterization.
//!
//! `lambda` and `alpha` are optimized on the log scale; `q` goes through a
//! scaled logistic onto `(Q_LOWER, 2 - Q_UPPER_GAP)`. Every unconstrained
//! point therefore maps to a valid parameter record, and support violations
//! show up only as `+inf` objective values.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistKind, DistParams, TleParams, TlqeParams};
use crate::error::{Error, Result};
use crate::rng::{split, Stream};
use crate::sample::SortedSample;

pub const Q_LOWER: f64 = -5.0;
pub const Q_UPPER_GAP: f64 = 1e-3;

/// Bijection between parameter records and `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpace {
    kind: DistKind,
    q_lo: f64,
    q_hi: f64,
}

impl ParamSpace {
    pub fn new(kind: DistKind) -> Self {
        ParamSpace {
            kind,
            q_lo: Q_LOWER,
            q_hi: 2.0 - Q_UPPER_GAP,
        }
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    /// `q` range reachable from the unconstrained space.
    pub fn q_range(&self) -> (f64, f64) {
        (self.q_lo, self.q_hi)
    }

    /// `[ln lambda, ln alpha]` or `[ln lambda, ln alpha, logit q]`. `q` is
    /// clamped into the open range first.
    pub fn to_unconstrained(&self, p: &DistParams) -> Vec<f64> {
        let mut z = vec![p.lambda().ln(), p.alpha().ln()];
        if let Some(q) = p.q() {
            let span = self.q_hi - self.q_lo;
            let eps = 1e-12 * span;
            let q = q.clamp(self.q_lo + eps, self.q_hi - eps);
            z.push(((q - self.q_lo) / (self.q_hi - q)).ln());
        }
        z
    }

    pub fn to_params(&self, z: &[f64]) -> Result<DistParams> {
        let lambda = z[0].exp();
        let alpha = z[1].exp();
        match self.kind {
            DistKind::Tle => Ok(TleParams::new(alpha, lambda)?.into()),
            DistKind::Tlqe => {
                let sigmoid = if z[2] >= 0.0 {
                    1.0 / (1.0 + (-z[2]).exp())
                } else {
                    let e = z[2].exp();
                    e / (1.0 + e)
                };
                let q = self.q_lo + (self.q_hi - self.q_lo) * sigmoid;
                Ok(TlqeParams::new(alpha, lambda, q)?.into())
            }
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub value_tolerance: f64,
    pub point_tolerance: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 2000,
            value_tolerance: 1e-10,
            point_tolerance: 1e-8,
            starts: 8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.starts > 0
            && self.value_tolerance > 0.0
            && self.point_tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "optimizer iterations, starts and tolerances must be positive".into(),
            ))
        }
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub best_point: DistParams,
    pub best_value: f64,
    pub converged: bool,
    pub iterations_used: usize,
    pub starts_tried: usize,
    /// Final value of every start, `+inf` for starts that were infeasible.
    pub per_start_values: Vec<f64>,
    pub per_start_converged: Vec<bool>,
    /// Best value after every iteration of each start (empty for skipped starts).
    pub per_start_traces: Vec<Vec<f64>>,
}

struct StartResult {
    point: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
    /// best simplex value after each iteration
    trace: Vec<f64>,
}

const INITIAL_STEP: f64 = 0.2;
const RESTART_STEP: f64 = 0.05;
const MAX_RESTARTS: usize = 6;

fn simplex_around(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    simplex
}

/// One Nelder–Mead run from `simplex`; returns the best vertex.
fn nelder_mead_run(
    f: &impl Fn(&[f64]) -> f64,
    mut simplex: Vec<Vec<f64>>,
    max_iter: usize,
    vtol: f64,
    ptol: f64,
) -> StartResult {
    let d = simplex.len() - 1;
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut iterations = 0;
    let mut trace = Vec::new();

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[d];
        let second_worst = order[d - 1];
        trace.push(values[best]);

        let spread = values[worst] - values[best];
        let scale = 1.0 + values[best].abs();
        let size = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(simplex[best].iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let pscale = 1.0 + simplex[best].iter().map(|v| v.abs()).fold(0.0, f64::max);
        if spread.is_finite() && spread <= vtol * scale && size <= ptol * pscale {
            return StartResult {
                point: simplex[best].clone(),
                value: values[best],
                converged: true,
                iterations,
                trace,
            };
        }
        if iterations >= max_iter {
            return StartResult {
                point: simplex[best].clone(),
                value: values[best],
                converged: false,
                iterations,
                trace,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for &idx in order.iter().take(d) {
            for (c, x) in centroid.iter_mut().zip(simplex[idx].iter()) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= d as f64);

        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(simplex[worst].iter())
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, accept_below) = if fr < values[worst] {
            (along(0.5), fr)
        } else {
            (along(-0.5), values[worst])
        };
        let fc = f(&contracted);
        if fc < accept_below {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for &idx in order.iter().skip(1) {
            for (x, a) in simplex[idx].iter_mut().zip(anchor.iter()) {
                *x = a + 0.5 * (*x - a);
            }
            values[idx] = f(&simplex[idx]);
        }
    }
}

/// Nelder–Mead with restarts from the converged vertex until a restart no
/// longer improves the value.
fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> StartResult {
    let mut result = nelder_mead_run(
        f,
        simplex_around(x0, INITIAL_STEP),
        cfg.max_iterations,
        cfg.value_tolerance,
        cfg.point_tolerance,
    );
    let mut restarts = 0;
    while result.converged && restarts < MAX_RESTARTS {
        let budget = cfg.max_iterations.saturating_sub(result.iterations);
        if budget == 0 {
            break;
        }
        let next = nelder_mead_run(
            f,
            simplex_around(&result.point, RESTART_STEP),
            budget,
            cfg.value_tolerance,
            cfg.point_tolerance,
        );
        restarts += 1;
        let improved =
            result.value - next.value > cfg.value_tolerance * (1.0 + result.value.abs());
        let iterations = result.iterations + next.iterations;
        let mut trace = std::mem::take(&mut result.trace);
        let floor = trace.last().copied().unwrap_or(f64::INFINITY);
        trace.extend(next.trace.iter().map(|v| v.min(floor)));
        if next.value <= result.value {
            result = StartResult {
                iterations,
                trace,
                ..next
            };
        } else {
            result.iterations = iterations;
            result.trace = trace;
        }
        if !improved {
            break;
        }
    }
    result
}

/// Minimizes `objective` from every guess and keeps the lowest value
/// (earliest start wins ties). `objective` returns `+inf` at infeasible points.
///
/// Starts whose guess is itself infeasible are skipped; if every guess is
/// infeasible the result is [`Error::NoFeasibleStart`].
pub fn minimize<F>(
    objective: F,
    space: &ParamSpace,
    cfg: &OptimizerConfig,
    initial_guesses: &[DistParams],
) -> Result<OptimizeOutcome>
where
    F: Fn(&DistParams) -> f64,
{
    cfg.validate()?;
    if initial_guesses.is_empty() {
        return Err(Error::Config("at least one initial guess is required".into()));
    }
    let f = |z: &[f64]| -> f64 {
        match space.to_params(z) {
            Ok(p) => {
                let v = objective(&p);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut per_start_values = Vec::with_capacity(initial_guesses.len());
    let mut per_start_converged = Vec::with_capacity(initial_guesses.len());
    let mut per_start_traces = Vec::with_capacity(initial_guesses.len());
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut iterations_used = 0;

    for guess in initial_guesses {
        let z0 = space.to_unconstrained(guess);
        if !f(&z0).is_finite() {
            per_start_values.push(f64::INFINITY);
            per_start_converged.push(false);
            per_start_traces.push(Vec::new());
            continue;
        }
        let run = nelder_mead(&f, &z0, cfg);
        iterations_used += run.iterations;
        per_start_values.push(run.value);
        per_start_converged.push(run.converged);
        per_start_traces.push(run.trace);
        let better = match &best {
            None => true,
            Some((_, v, _)) => run.value < *v,
        };
        if better {
            best = Some((run.point, run.value, run.converged));
        }
    }

    let (z, best_value, converged) = best.ok_or(Error::NoFeasibleStart)?;
    if !best_value.is_finite() {
        return Err(Error::NoFeasibleStart);
    }
    Ok(OptimizeOutcome {
        best_point: space.to_params(&z)?,
        best_value,
        converged,
        iterations_used,
        starts_tried: initial_guesses.len(),
        per_start_values,
        per_start_converged,
        per_start_traces,
    })
}

/// Largest `lambda` kept for a `q < 1` guess, as a fraction of the support bound.
const FEASIBLE_SHRINK: f64 = 0.99;

impl ParamSpace {
    /// `d theta / d z` for each coordinate, in `(lambda, alpha, q)` order.
    fn jacobian(&self, p: &DistParams) -> Vec<f64> {
        let mut j = vec![p.lambda(), p.alpha()];
        if let Some(q) = p.q() {
            let span = self.q_hi - self.q_lo;
            j.push((q - self.q_lo) * (self.q_hi - q) / span);
        }
        j
    }
}

/// Result of [`refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub point: DistParams,
    pub value: f64,
    /// Euclidean norm of the gradient at `point`.
    pub gradient_norm: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton (BFGS) polish of a simplex solution using an analytic
/// gradient. `objective` returns the value and the gradient with respect to
/// `(lambda, alpha[, q])`, or `None` at infeasible points.
///
/// Works in the unconstrained coordinates with a backtracking line search.
/// A step is taken when it satisfies the Armijo condition, or, once value
/// differences are down at rounding level, when it shrinks the gradient norm
/// without lifting the value more than `value_slack` above the value at
/// `start`. Stops when the gradient norm falls to `gradient_tolerance` or no
/// acceptable step is found.
pub fn refine<F>(
    objective: F,
    space: &ParamSpace,
    start: &DistParams,
    max_iterations: usize,
    gradient_tolerance: f64,
    value_slack: f64,
) -> Option<RefineOutcome>
where
    F: Fn(&DistParams) -> Option<(f64, Vec<f64>)>,
{
    let eval = |z: &[f64]| -> Option<(DistParams, f64, Vec<f64>, f64)> {
        let p = space.to_params(z).ok()?;
        let (v, g) = objective(&p)?;
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let norm = dot(&g, &g).sqrt();
        let gz = g.iter().zip(space.jacobian(&p)).map(|(a, b)| a * b).collect();
        Some((p, v, gz, norm))
    };
    let mut z = space.to_unconstrained(start);
    let (mut point, mut value, mut gz, mut norm) = eval(&z)?;
    let ceiling = value + value_slack;
    let d = z.len();
    let identity = |scale: f64| -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let mut h = identity(1.0);
    let mut iterations = 0;
    while iterations < max_iterations && norm > gradient_tolerance {
        iterations += 1;
        let mut dir: Vec<f64> = h.iter().map(|row| -dot(row, &gz)).collect();
        let mut slope = dot(&gz, &dir);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity(1.0);
            dir = gz.iter().map(|g| -g).collect();
            slope = -dot(&gz, &gz);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            if let Some(next) = eval(&trial) {
                let armijo = next.1 <= value + 1e-4 * t * slope && next.1 < value;
                if armijo || (next.3 < norm && next.1 <= ceiling) {
                    accepted = Some((trial, next));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((z_new, (p_new, v_new, gz_new, norm_new))) = accepted else {
            break;
        };
        let s: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gz_new.iter().zip(&gz).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if iterations == 1 {
                h = identity(sy / dot(&y, &y));
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        z = z_new;
        point = p_new;
        value = v_new;
        gz = gz_new;
        norm = norm_new;
    }
    Some(RefineOutcome {
        point,
        value,
        gradient_norm: norm,
        iterations,
    })
}

fn feasible_lambda(lambda: f64, q: f64, x_max: f64) -> f64 {
    if q < 1.0 && x_max > 0.0 {
        lambda.min(FEASIBLE_SHRINK / ((1.0 - q) * x_max))
    } else {
        lambda
    }
}

/// Rate that puts the `alpha = 1` median of the family at `median`.
fn anchor_lambda(kind: DistKind, q: f64, median: f64) -> f64 {
    match kind {
        DistKind::Tle => std::f64::consts::LN_2 / (2.0 * median),
        DistKind::Tlqe => {
            let t = 1.0 - q;
            if t.abs() < 1e-8 {
                return std::f64::consts::LN_2 / (2.0 * median);
            }
            let k = 2.0 * (2.0 - q) / t;
            -(-std::f64::consts::LN_2 / k).exp_m1() / (t * median)
        }
    }
}

/// Anchor values of `q` for TLqE starts, one on each side of 1.
pub const Q_ANCHORS: [f64; 2] = [0.5, 1.5];

/// Deterministic starting points: the `alpha = 1` median-matched anchor(s)
/// followed by log-scale jitter around them, `cfg.starts` in total.
pub fn default_initial_guesses(
    sample: &SortedSample,
    kind: DistKind,
    cfg: &OptimizerConfig,
) -> Vec<DistParams> {
    let median = if sample.median() > 0.0 {
        sample.median()
    } else if sample.mean() > 0.0 {
        sample.mean()
    } else {
        1.0
    };
    let x_max = sample.max();
    let mut stream = Stream::new(split(cfg.seed, kind.dimension() as u64));
    let starts = cfg.starts.max(1);

    let make = |alpha: f64, lambda: f64, q: Option<f64>| -> DistParams {
        match q {
            None => TleParams::new(alpha, lambda)
                .expect("guesses are positive")
                .into(),
            Some(q) => TlqeParams::new(alpha, feasible_lambda(lambda, q, x_max), q)
                .expect("guesses are positive with q < 2")
                .into(),
        }
    };

    let anchors: Vec<DistParams> = match kind {
        DistKind::Tle => vec![make(1.0, anchor_lambda(kind, 1.0, median), None)],
        DistKind::Tlqe => Q_ANCHORS
            .iter()
            .map(|&q| make(1.0, anchor_lambda(kind, q, median), Some(q)))
            .collect(),
    };

    let mut guesses: Vec<DistParams> = anchors.iter().copied().take(starts).collect();
    let mut j = 0;
    while guesses.len() < starts {
        let anchor = anchors[j % anchors.len()];
        j += 1;
        let alpha = anchor.alpha() * (0.5 * stream.next_normal()).exp();
        let lambda = anchor.lambda() * (0.5 * stream.next_normal()).exp();
        let q = anchor.q().map(|q| {
            (q + 0.25 * stream.next_normal()).clamp(Q_LOWER + 0.01, 2.0 - 2.0 * Q_UPPER_GAP)
        });
        let lambda = match q {
            // re-anchor lambda on the jittered q so the median stays matched
            Some(q) => anchor_lambda(kind, q, median) * (lambda / anchor.lambda()),
            None => lambda,
        };
        guesses.push(make(alpha, lambda, q));
    }
    guesses
}
