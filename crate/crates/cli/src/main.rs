//! `tlfit`: evaluate, sample and fit Topp-Leone exponential / q-exponential
//! laws, and run seeded estimator studies.
//!
//! Exit codes: 0 success, 1 input error, 2 fit finished without converging.

mod data;
mod format;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tlfit::{
    distributions, fit, DistKind, DistParams, FitRequest, Method, OptimizerConfig, StudyConfig,
    TleParams, TlqeParams,
};

use crate::format::sig17;

#[derive(Parser, Debug)]
#[command(name = "tlfit", version, about = "Topp-Leone exponential and q-exponential fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a distribution to a data file
    Fit(FitArgs),
    /// Draw a sorted random sample
    Sample(SampleArgs),
    /// Evaluate cdf, pdf or quantile
    Eval(EvalArgs),
    /// Run a Monte Carlo estimator study from a JSON config
    Study(StudyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum DistArg {
    Tle,
    Tlqe,
}

impl From<DistArg> for DistKind {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Tle => DistKind::Tle,
            DistArg::Tlqe => DistKind::Tlqe,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Ls,
    Wls,
    Cvm,
    Ad,
    Ml,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ls => Method::Ls,
            MethodArg::Wls => Method::Wls,
            MethodArg::Cvm => Method::Cvm,
            MethodArg::Ad => Method::Ad,
            MethodArg::Ml => Method::Ml,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    #[default]
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FnArg {
    Cdf,
    Pdf,
    Quantile,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    dist: DistArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Iteration budget per start
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long, value_enum)]
    dist: DistArg,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> Result<DistParams> {
        Ok(match (self.dist, self.q) {
            (DistArg::Tle, None) => TleParams::new(self.alpha, self.lambda)?.into(),
            (DistArg::Tle, Some(_)) => bail!("--q is only valid with --dist tlqe"),
            (DistArg::Tlqe, Some(q)) => TlqeParams::new(self.alpha, self.lambda, q)?.into(),
            (DistArg::Tlqe, None) => bail!("--dist tlqe requires --q"),
        })
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long = "fn", value_enum)]
    function: FnArg,
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
}

/// Failure with an exit code attached.
struct Exit {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Exit {
    fn from(error: anyhow::Error) -> Self {
        Exit { code: 1, error }
    }
}

fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<u8, Exit> {
    let sample = data::read_sample(&args.data)?;
    let optimizer = OptimizerConfig {
        seed: args.seed,
        starts: args.starts,
        max_iterations: args.max_iterations,
        ..OptimizerConfig::default()
    };
    let req = FitRequest::new(sample, args.dist.into(), args.method.into()).with_optimizer(optimizer);
    let result = fit(&req).map_err(anyhow::Error::from)?;
    let invocation = report::FitInvocation {
        command: "fit",
        dist: args.dist,
        method: args.method,
        data: args.data.display().to_string(),
        seed: args.seed,
        starts: args.starts,
        max_iterations: args.max_iterations,
        out: args.out,
    };
    let text = match args.out {
        OutFormat::Csv => report::fit_csv(&invocation, &result)?,
        OutFormat::Json => report::fit_json(invocation, &result)?,
    };
    write_stdout(&text)?;
    if result.converged {
        Ok(0)
    } else {
        eprintln!("warning: the fit did not converge");
        Ok(2)
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<u8, Exit> {
    let params = args.params.params()?;
    if args.n == 0 {
        return Err(anyhow!("--n must be at least 1").into());
    }
    let sample = distributions::sample(args.n, &params, args.seed);
    let mut text = String::with_capacity(args.n * 24);
    for v in sample.values() {
        text.push_str(&sig17(*v));
        text.push('\n');
    }
    write_stdout(&text)?;
    Ok(0)
}

fn cmd_eval(args: &EvalArgs) -> Result<u8, Exit> {
    let params = args.params.params()?;
    let value = match args.function {
        FnArg::Cdf | FnArg::Pdf => {
            let x = args.x.ok_or_else(|| anyhow!("--fn cdf/pdf requires --x"))?;
            if args.u.is_some() {
                return Err(anyhow!("--u is only used with --fn quantile").into());
            }
            match args.function {
                FnArg::Cdf => params.cdf(x),
                _ => params.pdf(x),
            }
        }
        FnArg::Quantile => {
            let u = args.u.ok_or_else(|| anyhow!("--fn quantile requires --u"))?;
            if args.x.is_some() {
                return Err(anyhow!("--x is not used with --fn quantile").into());
            }
            params.quantile(u)
        }
    }
    .map_err(anyhow::Error::from)?;
    write_stdout(&format!("{}\n", sig17(value)))?;
    Ok(0)
}

fn cmd_study(args: &StudyArgs) -> Result<u8, Exit> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut cfg = parse_study_config(&text)
        .with_context(|| format!("invalid config {}", args.config.display()))?;
    if let Some(p) = args.parallel {
        if p == 0 {
            return Err(anyhow!("--parallel must be at least 1").into());
        }
        cfg.parallelism = p;
    }
    let study = tlfit::run_study(&cfg).map_err(anyhow::Error::from)?;
    let invocation = report::StudyInvocation {
        command: "study",
        config: args.config.display().to_string(),
        out: args.out,
    };
    let text = match args.out {
        OutFormat::Csv => report::study_csv(&invocation, &study)?,
        OutFormat::Json => report::study_json(invocation, &study)?,
    };
    write_stdout(&text)?;
    Ok(0)
}

/// Parses a study config, naming the offending field on failure.
fn parse_study_config(text: &str) -> Result<StudyConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("field '{}': {}", path, e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Study(a) => cmd_study(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_the_field() {
        let err = parse_study_config(
            r#"{"distribution":{"kind":"tle","alpha":2,"lambda":1},"sample_sizes":[100,"x"],
               "replications":2,"methods":["ls"],"master_seed":1}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("sample_sizes[1]"), "{err}");
        let err = parse_study_config(
            r#"{"distribution":{"kind":"tle","alpha":2,"lambda":1},"sample_sizes":[100],
               "replications":2,"methods":["ks"],"master_seed":1}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("methods[0]"), "{err}");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
