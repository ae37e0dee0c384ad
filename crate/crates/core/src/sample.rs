use serde::Serialize;

use crate::error::{Error, Result};

/// Observations sorted ascending: the order statistics `x_(1) <= ... <= x_(n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sorts `values`; rejects an empty sample and negative or non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidObservation { index, value });
        }
        values.sort_by(f64::total_cmp);
        // -0.0 sorts before 0.0 under total_cmp but compares equal; normalize it
        for v in values.iter_mut() {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(SortedSample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn median(&self) -> f64 {
        let n = self.values.len();
        if n % 2 == 1 {
            self.values[n / 2]
        } else {
            0.5 * (self.values[n / 2 - 1] + self.values[n / 2])
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Divides every observation by `c > 0`.
    pub fn scaled(&self, c: f64) -> SortedSample {
        SortedSample {
            values: self.values.iter().map(|v| v / c).collect(),
        }
    }
}
