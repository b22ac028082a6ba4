//! Reproducible random real initial data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::lattice::{forward_transform, sobolev_norm, SpectralField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    /// `|û(n)| = amplitude · |n|^{-decay}` for `n ≠ 0`, uniform random phases, zero mean.
    PowerLaw { amplitude: f64, decay: f64 },
    /// `û(n)` uniform in a box of half-width `amplitude · λ · e^{-|n|/width}`.
    Smooth { amplitude: f64, width: f64 },
    /// Power-law data scaled to `‖u‖_{H^s} = norm`.
    RandomHs { norm: f64, s: f64, decay: f64 },
    /// `amplitude · sech²((x - λ/2)/width)` sampled on the grid.
    Bump { amplitude: f64, width: f64 },
}

impl DataSpec {
    pub fn generate(&self, grid: TorusGrid, seed: u64) -> Result<SpectralField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half: Vec<Complex64> = match *self {
            DataSpec::RandomHs { norm, s, decay } => {
                if !(norm >= 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter("random-hs data needs norm >= 0 and finite s".into()));
                }
                let raw = DataSpec::PowerLaw { amplitude: 1.0, decay }.generate(grid, seed)?;
                let current = sobolev_norm(&raw, s);
                return Ok(if current > 0.0 { raw.scale(norm / current) } else { raw });
            }
            DataSpec::Bump { amplitude, width } => {
                if !(width > 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter("bump data needs a positive width".into()));
                }
                let c = 0.5 * grid.period();
                let values: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .map(|&x| amplitude / ((x - c) / width).cosh().powi(2))
                    .collect();
                return forward_transform(&values, &grid);
            }
            DataSpec::PowerLaw { amplitude, decay } => {
                if !(amplitude.is_finite() && decay.is_finite()) {
                    return Err(Error::InvalidParameter("power-law data needs finite parameters".into()));
                }
                (0..=grid.mode_bound())
                    .map(|n| {
                        let phase: f64 = rng.gen_range(0.0..TAU);
                        if n == 0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::from_polar(amplitude * (n as f64).powf(-decay), phase)
                        }
                    })
                    .collect()
            }
            DataSpec::Smooth { amplitude, width } => {
                if !(amplitude > 0.0 && width > 0.0) {
                    return Err(Error::InvalidParameter("smooth data needs positive amplitude and width".into()));
                }
                (0..=grid.mode_bound())
                    .map(|n| {
                        let a = amplitude * grid.period() * (-(n as f64) / width).exp();
                        let re = rng.gen_range(-a..a);
                        let im = if n == 0 { 0.0 } else { rng.gen_range(-a..a) };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
        };
        SpectralField::from_half_spectrum(grid, &half)
    }
}

/// Real field with `û(n) = re + i·im` for each listed `n >= 0`; negative modes by conjugation.
pub fn field_from_coefficients(grid: TorusGrid, entries: &[(i64, f64, f64)]) -> Result<SpectralField> {
    let mut half = vec![Complex64::new(0.0, 0.0); grid.mode_bound() + 1];
    for &(n, re, im) in entries {
        if n < 0 || n as usize > grid.mode_bound() {
            return Err(Error::InvalidParameter(format!("mode {n} outside 0..={}", grid.mode_bound())));
        }
        if n == 0 && im != 0.0 {
            return Err(Error::InvalidParameter("the zero mode of real data must be real".into()));
        }
        half[n as usize] = Complex64::new(re, im);
    }
    SpectralField::from_half_spectrum(grid, &half)
}
