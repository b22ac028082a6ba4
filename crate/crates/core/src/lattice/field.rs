use num_complex::Complex64;

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian-symmetry check on real fields.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Fourier coefficients `f̂(n/λ)`, `|n| <= K`, of a function on the `λ`-torus.
///
/// Coefficients follow the unnormalised transform
/// `f̂(ξ) = ∫_0^λ e^{-2πixξ} f(x) dx`, so a constant function `c` has
/// `f̂(0) = cλ` and Plancherel reads `∫|f|² = (1/λ) Σ |f̂|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.num_modes()],
            real: true,
        }
    }

    /// Build from coefficients ordered `n = -K..=K`. When `real` is set the
    /// coefficients must satisfy `c(-n) = conj c(n)`.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::Dimension {
                expected: grid.num_modes(),
                found: coeffs.len(),
            });
        }
        let field = Self { grid, coeffs, real };
        if real {
            let defect = field.hermitian_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::Symmetry { defect });
            }
        }
        Ok(field)
    }

    /// Real field from the nonnegative half `c(0), c(1), ..., c(K)`; the
    /// negative modes are filled by conjugation and `c(0)` loses its
    /// imaginary part.
    pub fn from_half_spectrum(grid: TorusGrid, half: &[Complex64]) -> Result<Self> {
        let k = grid.mode_bound();
        if half.len() != k + 1 {
            return Err(Error::Dimension {
                expected: k + 1,
                found: half.len(),
            });
        }
        let mut field = Self::zeros(grid);
        field.coeffs[k] = Complex64::new(half[0].re, 0.0);
        for (n, c) in half.iter().enumerate().skip(1) {
            field.coeffs[k + n] = *c;
            field.coeffs[k - n] = c.conj();
        }
        Ok(field)
    }

    /// Complex field with a single nonzero coefficient.
    pub fn single_mode(grid: TorusGrid, n: i64, value: Complex64) -> Result<Self> {
        if !grid.contains_mode(n) {
            return Err(Error::InvalidParameter(format!(
                "mode {n} outside bound {}",
                grid.mode_bound()
            )));
        }
        let mut field = Self::zeros(grid);
        field.real = n == 0 && value.im == 0.0;
        field.coeffs[(n + grid.mode_bound() as i64) as usize] = value;
        Ok(field)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn period(&self) -> f64 {
        self.grid.period()
    }

    pub fn mode_bound(&self) -> usize {
        self.grid.mode_bound()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    #[inline]
    fn index(&self, n: i64) -> usize {
        (n + self.grid.mode_bound() as i64) as usize
    }

    /// Coefficient of mode `n`; zero outside the mode bound.
    #[inline]
    pub fn coeff(&self, n: i64) -> Complex64 {
        if self.grid.contains_mode(n) {
            self.coeffs[self.index(n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Iterator over `(n, f̂(n/λ))`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.grid.modes().zip(self.coeffs.iter().copied())
    }

    /// Set the pair `n, -n` so that the field stays real.
    pub fn set_real_mode(&mut self, n: i64, value: Complex64) {
        assert!(self.grid.contains_mode(n), "mode {n} out of range");
        let i = self.index(n);
        let j = self.index(-n);
        if n == 0 {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[i] = value;
            self.coeffs[j] = value.conj();
        }
    }

    /// Largest `|c(-n) - conj c(n)|`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let k = self.grid.mode_bound() as i64;
        (0..=k)
            .map(|n| (self.coeff(-n) - self.coeff(n).conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Replace each coefficient with `symbol(ξ) f̂(ξ)`.
    pub fn apply_symbol<F>(&self, symbol: F, keeps_real: bool) -> Self
    where
        F: Fn(f64) -> Complex64,
    {
        let coeffs = self
            .modes()
            .map(|(n, c)| symbol(self.grid.frequency(n)) * c)
            .collect();
        Self {
            grid: self.grid,
            coeffs,
            real: self.real && keeps_real,
        }
    }

    /// Multiply by a real symbol that is even in `ξ` (keeps real fields real).
    pub fn apply_even_real_symbol<F>(&self, symbol: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        self.apply_symbol(|xi| Complex64::new(symbol(xi), 0.0), true)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            real: self.real,
        }
    }

    /// Multiply every coefficient by a complex constant.
    pub fn scale_complex(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            real: self.real && factor.im == 0.0,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            real: self.real && other.real,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Zero-pad or truncate to a new mode bound on the same torus.
    pub fn with_mode_bound(&self, mode_bound: usize) -> Self {
        let grid = self.grid.with_mode_bound(mode_bound);
        let mut out = Self::zeros(grid);
        out.real = self.real;
        for n in grid.modes() {
            let i = out.index(n);
            out.coeffs[i] = self.coeff(n);
        }
        out
    }

    /// Same coefficients on a grid with a different physical sample count.
    pub fn with_grid(&self, grid: TorusGrid) -> Result<Self> {
        if !grid.same_torus(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let mut out = self.with_mode_bound(grid.mode_bound());
        out.grid = grid;
        Ok(out)
    }

    /// `L²` norm through Plancherel, `((1/λ) Σ |f̂|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.period()).sqrt()
    }

    /// Pairing `∫ f conj(g) dx = (1/λ) Σ f̂ conj(ĝ)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !self.grid.same_torus(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let k = self.mode_bound().min(other.mode_bound()) as i64;
        let sum: Complex64 = (-k..=k).map(|n| self.coeff(n) * other.coeff(n).conj()).sum();
        Ok(sum / self.period())
    }

    /// Mean value `(1/λ) ∫ f`.
    pub fn mean(&self) -> f64 {
        self.coeff(0).re / self.period()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn mark_real(mut self, real: bool) -> Self {
        self.real = real;
        self
    }
}
