//! Seeded simulation study of estimator bias and mean-squared error.
//!
//! Replication `r` at sample-size index `c` draws its sample with seed
//! `split2(master_seed, c, r)` (see [`crate::rng`]) and every method is fitted
//! to that same sample, with the optimizer seeded by the same value. Results
//! are folded in `(method, size, parameter, replication)` order, so the report
//! does not depend on how many threads ran the fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample, DistParams};
use crate::error::{Error, Result};
use crate::estimators::{fit, FitRequest, FitResult, Method};
use crate::estimators::MIN_FIT_SIZE;
use crate::optimize::OptimizerConfig;
use crate::rng::split2;

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Generating law and its true parameters.
    pub distribution: DistParams,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Thread-count hint; never affects results and is not echoed in reports.
    #[serde(default = "default_parallelism", skip_serializing)]
    pub parallelism: usize,
    /// The `seed` field is replaced per replication.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes must not be empty".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < MIN_FIT_SIZE) {
            return Err(Error::Config(format!(
                "sample size {n} is below the minimum of {MIN_FIT_SIZE}"
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        self.optimizer.validate()
    }
}

/// Summary of one `(method, sample size, parameter)` combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyCell {
    pub method: Method,
    pub n: usize,
    pub parameter: &'static str,
    pub truth: f64,
    /// Mean estimate over successful replications (NaN when none succeeded).
    pub mean: f64,
    pub bias: f64,
    pub mse: f64,
    pub failure_rate: f64,
    pub replications: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<StudyCell>,
}

impl StudyReport {
    pub fn cell(&self, method: Method, n: usize, parameter: &str) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n == n && c.parameter == parameter)
    }
}

/// Seed of replication `rep` at sample-size index `size_index`.
pub fn replication_seed(master_seed: u64, size_index: usize, rep: usize) -> u64 {
    split2(master_seed, size_index as u64, rep as u64)
}

/// Runs one replication: draws the sample and fits every configured method.
pub fn replicate(cfg: &StudyConfig, size_index: usize, rep: usize) -> Vec<Result<FitResult>> {
    let seed = replication_seed(cfg.master_seed, size_index, rep);
    let n = cfg.sample_sizes[size_index];
    let data = sample(n, &cfg.distribution, seed);
    let optimizer = OptimizerConfig {
        seed,
        ..cfg.optimizer
    };
    cfg.methods
        .iter()
        .map(|&method| {
            fit(&FitRequest {
                sample: data.clone(),
                distribution: cfg.distribution.kind(),
                method,
                optimizer,
            })
        })
        .collect()
}

/// A fit counts toward bias/MSE only if it returned and converged.
fn successful(r: &Result<FitResult>) -> Option<&FitResult> {
    match r {
        Ok(f) if f.converged => Some(f),
        _ => None,
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.sample_sizes.len())
        .flat_map(|c| (0..cfg.replications).map(move |r| (c, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    // indexed collect keeps task order regardless of scheduling
    let results: Vec<Vec<Result<FitResult>>> =
        pool.install(|| tasks.par_iter().map(|&(c, r)| replicate(cfg, c, r)).collect());

    let truth = cfg.distribution.to_vec();
    let names = cfg.distribution.kind().parameter_names();
    let mut cells = Vec::new();
    for (m_idx, &method) in cfg.methods.iter().enumerate() {
        for (c, &n) in cfg.sample_sizes.iter().enumerate() {
            let fits: Vec<Option<&FitResult>> = (0..cfg.replications)
                .map(|r| successful(&results[c * cfg.replications + r][m_idx]))
                .collect();
            let ok: Vec<Vec<f64>> = fits.iter().flatten().map(|f| f.params.to_vec()).collect();
            let successes = ok.len();
            let failure_rate = (cfg.replications - successes) as f64 / cfg.replications as f64;
            for (k, &name) in names.iter().enumerate() {
                let (mut total, mut sum, mut sq) = (0.0, 0.0, 0.0);
                for est in &ok {
                    let e = est[k] - truth[k];
                    total += est[k];
                    sum += e;
                    sq += e * e;
                }
                let k_ok = successes as f64;
                let (mean, bias, mse) = if successes > 0 {
                    (total / k_ok, sum / k_ok, sq / k_ok)
                } else {
                    (f64::NAN, f64::NAN, f64::NAN)
                };
                cells.push(StudyCell {
                    method,
                    n,
                    parameter: name,
                    truth: truth[k],
                    mean,
                    bias,
                    mse,
                    failure_rate,
                    replications: cfg.replications,
                    successes,
                });
            }
        }
    }
    Ok(StudyReport {
        config: cfg.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{TleParams, TlqeParams};

    fn small_config(parallelism: usize) -> StudyConfig {
        StudyConfig {
            distribution: TlqeParams::new(2.0, 1.0, 0.5).unwrap().into(),
            sample_sizes: vec![20, 60],
            replications: 6,
            methods: vec![Method::Ls, Method::Ad, Method::Ml],
            master_seed: 77,
            parallelism,
            optimizer: OptimizerConfig {
                starts: 2,
                ..OptimizerConfig::default()
            },
        }
    }

    #[test]
    fn scheduling_independent() {
        let a = run_study(&small_config(1)).unwrap();
        let b = run_study(&small_config(4)).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn cells_are_coherent() {
        let report = run_study(&small_config(2)).unwrap();
        assert_eq!(report.cells.len(), 3 * 2 * 3);
        for c in &report.cells {
            assert!((0.0..=1.0).contains(&c.failure_rate));
            let excluded = c.replications - c.successes;
            assert_eq!(excluded as f64, c.failure_rate * c.replications as f64);
            if c.successes > 0 {
                assert!(c.mse >= c.bias * c.bias - 1e-12);
            }
        }
    }

    #[test]
    fn single_replication_equals_direct_fit() {
        let cfg = StudyConfig {
            distribution: TleParams::new(2.0, 1.0).unwrap().into(),
            sample_sizes: vec![300],
            replications: 1,
            methods: vec![Method::Cvm],
            master_seed: 5,
            parallelism: 1,
            optimizer: OptimizerConfig::default(),
        };
        let report = run_study(&cfg).unwrap();
        let seed = replication_seed(5, 0, 0);
        let direct = fit(&FitRequest {
            sample: sample(300, &cfg.distribution, seed),
            distribution: cfg.distribution.kind(),
            method: Method::Cvm,
            optimizer: OptimizerConfig {
                seed,
                ..OptimizerConfig::default()
            },
        })
        .unwrap();
        let alpha = report.cell(Method::Cvm, 300, "alpha").unwrap();
        assert_eq!(alpha.mean, direct.params.alpha());
        let lambda = report.cell(Method::Cvm, 300, "lambda").unwrap();
        assert_eq!(lambda.mean, direct.params.lambda());
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small_config(1);
        cfg.replications = 0;
        assert!(run_study(&cfg).is_err());
        let mut cfg = small_config(1);
        cfg.sample_sizes = vec![2];
        assert!(run_study(&cfg).is_err());
    }

    #[test]
    fn config_json_omits_parallelism() {
        let json = serde_json::to_string(&small_config(8)).unwrap();
        assert!(!json.contains("parallelism"));
        let back: StudyConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.parallelism, 1);
    }
}
