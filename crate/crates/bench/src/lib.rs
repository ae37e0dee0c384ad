//! Shared workloads for the criterion benchmarks.

use tlfit::{distributions, DistParams, SortedSample, TleParams, TlqeParams};

pub fn tle_truth() -> DistParams {
    TleParams::new(2.0, 1.0).unwrap().into()
}

pub fn tlqe_truth(q: f64) -> DistParams {
    TlqeParams::new(2.0, 1.0, q).unwrap().into()
}

/// A reproducible sample of size `n` from `dist`.
pub fn workload(dist: &DistParams, n: usize) -> SortedSample {
    distributions::sample(n, dist, 0x5eed)
}
