//! Report documents: a JSON envelope carrying the tool version and the
//! invocation, or a CSV table preceded by `#` comment lines with the same.
//!
//! JSON numbers use the shortest decimal that parses back to the identical
//! `f64`; CSV cells use [`sig17`]. Non-finite values become `null` in JSON.

use anyhow::Result;
use serde::Serialize;
use tlfit::{FitResult, StudyReport, Support};

use crate::format::sig17;
use crate::{DistArg, MethodArg, OutFormat};

pub const TOOL: &str = "tlfit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Document<'a, I: Serialize, R: Serialize> {
    tool: &'a str,
    version: &'a str,
    invocation: I,
    result: R,
}

#[derive(Serialize)]
pub struct FitInvocation {
    pub command: &'static str,
    pub dist: DistArg,
    pub method: MethodArg,
    pub data: String,
    pub seed: u64,
    pub starts: usize,
    pub max_iterations: usize,
    pub out: OutFormat,
}

/// The worker count is deliberately absent so reports do not depend on it.
#[derive(Serialize)]
pub struct StudyInvocation {
    pub command: &'static str,
    pub config: String,
    pub out: OutFormat,
}

#[derive(Serialize)]
struct FitBody<'a> {
    #[serde(flatten)]
    fit: &'a FitResult,
    support: Support,
}

fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn fit_json(invocation: FitInvocation, fit: &FitResult) -> Result<String> {
    to_json(&Document {
        tool: TOOL,
        version: VERSION,
        invocation,
        result: FitBody {
            fit,
            support: fit.params.support(),
        },
    })
}

pub fn study_json(invocation: StudyInvocation, report: &StudyReport) -> Result<String> {
    to_json(&Document {
        tool: TOOL,
        version: VERSION,
        invocation,
        result: report,
    })
}

fn header<I: Serialize>(invocation: &I) -> Result<String> {
    Ok(format!(
        "# {TOOL} {VERSION}\n# invocation: {}\n",
        serde_json::to_string(invocation)?
    ))
}

fn table(preamble: String, header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(preamble.into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(sig17).unwrap_or_default()
}

pub fn fit_csv(invocation: &FitInvocation, fit: &FitResult) -> Result<String> {
    let support = fit.params.support();
    let row = vec![
        fit.params.kind().as_str().to_string(),
        fit.method.as_str().to_string(),
        sig17(fit.params.alpha()),
        sig17(fit.params.lambda()),
        opt(fit.params.q()),
        sig17(fit.objective_value),
        fit.converged.to_string(),
        opt(fit.stationarity_norm),
        fit.n.to_string(),
        fit.iterations.to_string(),
        fit.starts_tried.to_string(),
        sig17(support.lower),
        sig17(support.upper),
    ];
    table(
        header(invocation)?,
        &[
            "dist", "method", "alpha", "lambda", "q", "objective_value", "converged",
            "stationarity_norm", "n", "iterations", "starts_tried", "support_lower",
            "support_upper",
        ],
        vec![row],
    )
}

pub fn study_csv(invocation: &StudyInvocation, report: &StudyReport) -> Result<String> {
    let rows = report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.method.as_str().to_string(),
                c.n.to_string(),
                c.parameter.to_string(),
                sig17(c.truth),
                sig17(c.mean),
                sig17(c.bias),
                sig17(c.mse),
                sig17(c.failure_rate),
                c.replications.to_string(),
                c.successes.to_string(),
            ]
        })
        .collect();
    table(
        header(invocation)?,
        &[
            "method", "n", "parameter", "truth", "mean", "bias", "mse", "failure_rate",
            "replications", "successes",
        ],
        rows,
    )
}
