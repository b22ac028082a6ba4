//! Discrete realisations of the torus Fourier transform and the operations
//! built on it: inversion, dealiased products, Sobolev norms, projections and
//! fractional derivatives.
//!
//! Forward: `f̂(n/λ) = (λ/P) Σ_p f(x_p) e^{-2πi pn/P}`.
//! Inverse: `f(x_p) = (1/λ) Σ_n f̂(n/λ) e^{2πi pn/P}`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Tolerance on the imaginary part left over by a real inverse transform,
/// relative to the field's sup norm.
pub const IMAG_RESIDUE_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Smallest integer `>= min` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

#[inline]
pub(crate) fn wrap(n: i64, len: usize) -> usize {
    n.rem_euclid(len as i64) as usize
}

/// Transform real samples on the physical grid into Fourier coefficients.
pub fn forward_transform(samples: &[f64], grid: &TorusGrid) -> Result<SpectralField> {
    if samples.len() != grid.samples() {
        return Err(Error::Dimension {
            expected: grid.samples(),
            found: samples.len(),
        });
    }
    let values: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut field = analyze(&values, grid)?;
    // Exact symmetrisation removes rounding noise from the FFT.
    let k = grid.mode_bound() as i64;
    for n in 0..=k {
        let c = (field.coeff(n) + field.coeff(-n).conj()) * 0.5;
        field.set_real_mode(n, c);
    }
    Ok(field.mark_real(true))
}

/// Evaluate a real field at the physical nodes of its grid.
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    inverse_transform_on(field, field.grid().samples())
}

/// Evaluate a real field on `samples` equispaced nodes of its torus.
pub fn inverse_transform_on(field: &SpectralField, samples: usize) -> Result<Vec<f64>> {
    let defect = field.hermitian_defect();
    if defect > super::field::HERMITIAN_TOL {
        return Err(Error::Symmetry { defect });
    }
    let values = synthesize(field, samples)?;
    let sup = values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let residue = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL * sup.max(f64::MIN_POSITIVE) && residue > 0.0 {
        return Err(Error::ImaginaryResidue {
            residue,
            magnitude: sup,
        });
    }
    Ok(values.into_iter().map(|v| v.re).collect())
}

/// Complex values `(1/λ) Σ_n c_n e^{2πi pn/P}` on `samples` nodes.
pub fn synthesize(field: &SpectralField, samples: usize) -> Result<Vec<Complex64>> {
    let k = field.mode_bound();
    if samples < 2 * k + 1 {
        return Err(Error::Aliasing {
            required: 2 * k + 1,
            available: samples,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); samples];
    let inv_period = 1.0 / field.period();
    for (n, c) in field.modes() {
        buf[wrap(n, samples)] = c * inv_period;
    }
    plan_inverse(samples).process(&mut buf);
    Ok(buf)
}

/// Fourier coefficients, for `|n| <= K` of `grid`, of complex samples taken
/// on `values.len()` equispaced nodes of the same torus.
pub fn analyze(values: &[Complex64], grid: &TorusGrid) -> Result<SpectralField> {
    let p = values.len();
    let k = grid.mode_bound();
    if p < 2 * k + 1 {
        return Err(Error::Aliasing {
            required: 2 * k + 1,
            available: p,
        });
    }
    let mut buf = values.to_vec();
    plan_forward(p).process(&mut buf);
    let scale = grid.period() / p as f64;
    let coeffs = grid.modes().map(|n| buf[wrap(n, p)] * scale).collect();
    SpectralField::from_coeffs(*grid, coeffs, false)
}

/// Physical-space sample count that makes a product of fields with total
/// mode reach `total` exact on output modes `|n| <= out`.
pub fn alias_free_samples(total: usize, out: usize) -> usize {
    fft_friendly_size(total + out + 1)
}

/// Output size of a convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionBound {
    /// Keep all modes `|n| <= K_f + K_g`.
    Full,
    /// Keep only modes `|n| <= K`.
    Truncate(usize),
}

/// `(fg)^(ξ) = (1/λ) Σ_{ξ₁} f̂(ξ - ξ₁) ĝ(ξ₁)`, computed on a padded grid.
pub fn convolve(f: &SpectralField, g: &SpectralField, bound: ConvolutionBound) -> Result<SpectralField> {
    if !f.grid().same_torus(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let total = f.mode_bound() + g.mode_bound();
    let out = match bound {
        ConvolutionBound::Full => total,
        ConvolutionBound::Truncate(k) => k,
    };
    let p = alias_free_samples(total, out.min(total));
    let a = synthesize(f, p)?;
    let b = synthesize(g, p)?;
    let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let grid = TorusGrid::minimal(f.period(), out)?;
    let res = analyze(&prod, &grid)?;
    Ok(if f.is_real() && g.is_real() {
        symmetrize(res)
    } else {
        res
    })
}

/// Dealiased `f^power`, returned with mode bound `out`.
pub fn power(f: &SpectralField, power: usize, out: usize) -> Result<SpectralField> {
    if power == 0 {
        let grid = TorusGrid::minimal(f.period(), out)?;
        let mut one = SpectralField::zeros(grid);
        one.set_real_mode(0, Complex64::new(f.period(), 0.0));
        return Ok(one);
    }
    let total = power * f.mode_bound();
    let p = alias_free_samples(total, out.min(total));
    let vals = synthesize(f, p)?;
    let prod: Vec<Complex64> = vals.iter().map(|v| v.powu(power as u32)).collect();
    let grid = TorusGrid::minimal(f.period(), out)?;
    let res = analyze(&prod, &grid)?;
    Ok(if f.is_real() { symmetrize(res) } else { res })
}

fn symmetrize(mut field: SpectralField) -> SpectralField {
    let k = field.mode_bound() as i64;
    for n in 0..=k {
        let c = (field.coeff(n) + field.coeff(-n).conj()) * 0.5;
        field.set_real_mode(n, c);
    }
    field.mark_real(true)
}

/// Japanese bracket `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `‖f‖_{H^s} = ((1/λ) Σ ⟨ξ⟩^{2s} |f̂(ξ)|²)^{1/2}` with `ξ = n/λ` in cycles.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = f
        .modes()
        .map(|(n, c)| japanese(g.frequency(n)).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (sum / f.period()).sqrt()
}

/// Homogeneous variant with weight `|ξ|^{2s}`; the zero mode counts only for `s = 0`.
pub fn homogeneous_sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = f
        .modes()
        .map(|(n, c)| {
            let w = if n == 0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                g.frequency(n).abs().powf(2.0 * s)
            };
            w * c.norm_sqr()
        })
        .sum();
    (sum / f.period()).sqrt()
}

/// Fourier projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Remove the zero mode.
    MeanZero,
    /// Keep `|ξ| ∈ [N, 2N)`.
    Dyadic(f64),
    /// Keep `|ξ| ∈ [lo, hi)`; `hi` may be infinite.
    Band { lo: f64, hi: f64 },
}

pub fn project(kind: Projection, f: &SpectralField) -> Result<SpectralField> {
    let keep: Box<dyn Fn(i64, f64) -> bool> = match kind {
        Projection::MeanZero => Box::new(|n, _| n != 0),
        Projection::Dyadic(n0) => {
            if !(n0 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "dyadic scale must be positive, got {n0}"
                )));
            }
            Box::new(move |_, xi: f64| xi.abs() >= n0 && xi.abs() < 2.0 * n0)
        }
        Projection::Band { lo, hi } => {
            if !(lo >= 0.0 && hi >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "band bounds must be nonnegative, got [{lo}, {hi})"
                )));
            }
            Box::new(move |_, xi: f64| xi.abs() >= lo && xi.abs() < hi)
        }
    };
    let g = *f.grid();
    let coeffs = f
        .modes()
        .map(|(n, c)| {
            if keep(n, g.frequency(n)) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(SpectralField::from_coeffs(g, coeffs, false)?.mark_real(f.is_real()))
}

/// Multiply by `|2πξ|^order` (homogeneous) or `⟨2πξ⟩^order`.
pub fn fractional_derivative(order: f64, homogeneous: bool, f: &SpectralField) -> Result<SpectralField> {
    if homogeneous && order < 0.0 && f.coeff(0) != Complex64::new(0.0, 0.0) {
        return Err(Error::Singularity(format!(
            "|D|^{order} applied to a field with nonzero mean"
        )));
    }
    Ok(f.apply_even_real_symbol(|xi| {
        let w = 2.0 * PI * xi;
        if homogeneous {
            if xi == 0.0 {
                if order == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                w.abs().powf(order)
            }
        } else {
            japanese(w).powf(order)
        }
    }))
}

/// `∂_x f`, symbol `2πiξ`.
pub fn derivative(f: &SpectralField) -> SpectralField {
    f.apply_symbol(|xi| Complex64::new(0.0, 2.0 * PI * xi), true)
}

/// `‖f‖_{L^q}` by quadrature on `samples` nodes (exact for even integer `q`
/// once `samples >= q K + 1`).
pub fn lq_norm(f: &SpectralField, q: f64, samples: usize) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    let vals = synthesize(f, samples)?;
    let h = f.period() / samples as f64;
    if q.is_infinite() {
        return Ok(vals.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let sum: f64 = vals.iter().map(|v| v.norm().powf(q)).sum();
    Ok((sum * h).powf(1.0 / q))
}

/// `∫_0^λ f dx` of the product of real fields, exact (alias-free).
pub fn integrate_product(fields: &[&SpectralField]) -> Result<Complex64> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
    for f in fields {
        if !f.grid().same_torus(first.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    let total: usize = fields.iter().map(|f| f.mode_bound()).sum();
    let p = alias_free_samples(total, 0);
    let mut acc = vec![Complex64::new(1.0, 0.0); p];
    for f in fields {
        for (a, v) in acc.iter_mut().zip(synthesize(f, p)?) {
            *a *= v;
        }
    }
    let h = first.period() / p as f64;
    Ok(acc.iter().sum::<Complex64>() * h)
}
