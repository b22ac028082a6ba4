use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretisation of the torus `[0, λ)`.
///
/// Fourier modes are indexed by integers `n` with `|n| <= mode_bound`; mode
/// `n` carries the frequency `ξ = n / λ` (cycles per unit length). The
/// physical grid has `samples` equispaced nodes `x_p = p λ / samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    period: f64,
    mode_bound: usize,
    samples: usize,
}

impl TorusGrid {
    pub fn new(period: f64, mode_bound: usize, samples: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "torus period must be positive, got {period}"
            )));
        }
        if samples < 2 * mode_bound + 1 {
            return Err(Error::InvalidParameter(format!(
                "{samples} samples cannot represent {} modes",
                2 * mode_bound + 1
            )));
        }
        Ok(Self {
            period,
            mode_bound,
            samples,
        })
    }

    /// Grid with the minimal sample count `2K + 1`.
    pub fn minimal(period: f64, mode_bound: usize) -> Result<Self> {
        Self::new(period, mode_bound, 2 * mode_bound + 1)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mode_bound(&self) -> usize {
        self.mode_bound
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn num_modes(&self) -> usize {
        2 * self.mode_bound + 1
    }

    pub fn frequency(&self, n: i64) -> f64 {
        n as f64 / self.period
    }

    /// Largest represented frequency `K / λ`.
    pub fn max_frequency(&self) -> f64 {
        self.mode_bound as f64 / self.period
    }

    pub fn modes(&self) -> impl DoubleEndedIterator<Item = i64> + Clone {
        let k = self.mode_bound as i64;
        -k..=k
    }

    pub fn contains_mode(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.mode_bound
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.period / self.samples as f64;
        (0..self.samples).map(|p| p as f64 * h).collect()
    }

    /// Same torus with a different mode bound; the sample count grows if needed.
    pub fn with_mode_bound(&self, mode_bound: usize) -> Self {
        Self {
            period: self.period,
            mode_bound,
            samples: self.samples.max(2 * mode_bound + 1),
        }
    }

    pub fn with_samples(&self, samples: usize) -> Result<Self> {
        Self::new(self.period, self.mode_bound, samples)
    }

    pub(crate) fn same_torus(&self, other: &Self) -> bool {
        self.period == other.period
    }
}
