use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::transform::sobolev_norm;
use crate::lattice::SpectralField;

/// Parameters of the I-method symbol `m_{N,s}` together with the numerical
/// constants that stand in for `≫`, `∼` and `≳`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierParams {
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    pub k: u32,
    /// `a ≫ b` means `a > cmp_large · b`.
    pub cmp_large: f64,
    /// `a ∼ b` means `max(a, b) <= cmp_sim · min(a, b)`.
    pub cmp_sim: f64,
    /// `|ξ| ≳ N` means `|ξ| >= cmp_gtrsim_n · N`.
    #[serde(rename = "cmp_gtrsim_N")]
    pub cmp_gtrsim_n: f64,
}

impl MultiplierParams {
    pub const DEFAULT_LARGE: f64 = 10.0;
    pub const DEFAULT_SIM: f64 = 10.0;
    pub const DEFAULT_GTRSIM: f64 = 1.0;

    /// Parameters with the default comparison constants.
    pub fn new(n: f64, s: f64, k: u32) -> Result<Self> {
        Self {
            n,
            s,
            k,
            cmp_large: Self::DEFAULT_LARGE,
            cmp_sim: Self::DEFAULT_SIM,
            cmp_gtrsim_n: Self::DEFAULT_GTRSIM,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(Error::InvalidParameter(format!("N must be >= 1, got {}", self.n)));
        }
        if !(0.5..1.0).contains(&self.s) {
            return Err(Error::InvalidParameter(format!(
                "s must lie in [1/2, 1), got {}",
                self.s
            )));
        }
        if !(self.k == 3 || self.k == 4) {
            return Err(Error::InvalidParameter(format!("k must be 3 or 4, got {}", self.k)));
        }
        if !(self.cmp_large > 1.0 && self.cmp_sim > 1.0) {
            return Err(Error::InvalidParameter(
                "cmp_large and cmp_sim must exceed 1".into(),
            ));
        }
        if !(self.cmp_gtrsim_n > 0.0 && self.cmp_gtrsim_n <= 1.0) {
            return Err(Error::InvalidParameter(
                "cmp_gtrsim_N must lie in (0, 1]".into(),
            ));
        }
        Ok(self)
    }

    /// Same parameters with a different threshold `N`.
    pub fn with_n(&self, n: f64) -> Result<Self> {
        Self { n, ..*self }.validated()
    }

    pub fn arity(&self) -> usize {
        self.k as usize + 2
    }

    #[inline]
    pub fn much_greater(&self, a: f64, b: f64) -> bool {
        a > self.cmp_large * b
    }

    #[inline]
    pub fn comparable(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        hi <= self.cmp_sim * lo
    }

    #[inline]
    pub fn at_least_n(&self, a: f64) -> bool {
        a >= self.cmp_gtrsim_n * self.n
    }
}

/// Quintic smoothstep `6t⁵ - 15t⁴ + 10t³` clamped to `[0, 1]`.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// `g(t) = t · smoothstep(t)` and its first two derivatives on `[0, 1]`;
/// `log m = -(1-s) log 2 · g(t)` with `t = log₂(|ξ|/N)`.
#[inline]
fn bridge_exponent(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (t, 1.0, 0.0)
    } else {
        let t2 = t * t;
        let t3 = t2 * t;
        let g = t3 * t * (10.0 + t * (-15.0 + 6.0 * t));
        let g1 = t3 * (40.0 + t * (-75.0 + 36.0 * t));
        let g2 = t2 * (120.0 + t * (-300.0 + 180.0 * t));
        (g, g1, g2)
    }
}

/// `m_{N,s}(ξ)`: `1` for `|ξ| <= N`, `(N/|ξ|)^{1-s}` for `|ξ| >= 2N`, and
/// `(N/|ξ|)^{(1-s) S(t)}` in between, `S` the quintic smoothstep in
/// `t = log₂(|ξ|/N)`.
pub fn m_value(xi: f64, p: &MultiplierParams) -> f64 {
    let a = xi.abs();
    if a <= p.n {
        return 1.0;
    }
    if a >= 2.0 * p.n {
        return (p.n / a).powf(1.0 - p.s);
    }
    let t = (a / p.n).log2();
    (-(1.0 - p.s) * LN_2 * bridge_exponent(t).0).exp()
}

/// `f(ξ) = m(ξ)² ξ³`.
pub fn cubic_symbol(xi: f64, p: &MultiplierParams) -> f64 {
    let m = m_value(xi, p);
    m * m * xi * xi * xi
}

/// Analytic second derivative of `f(ξ) = m(ξ)² ξ³`; odd in `ξ`.
pub fn cubic_symbol_second_derivative(xi: f64, p: &MultiplierParams) -> f64 {
    let a = xi.abs();
    if a <= p.n {
        return 6.0 * xi;
    }
    let t = (a / p.n).log2();
    let (_, g1, g2) = bridge_exponent(t);
    // φ = log f as a function of log|ξ|.
    let d1 = 3.0 - 2.0 * (1.0 - p.s) * g1;
    let d2 = -2.0 * (1.0 - p.s) * g2 / LN_2;
    let f = cubic_symbol(a, p);
    xi.signum() * f / (a * a) * (d2 + d1 * d1 - d1)
}

/// `(If)^(ξ) = m(ξ) f̂(ξ)`.
pub fn i_apply(f: &SpectralField, p: &MultiplierParams) -> SpectralField {
    f.apply_even_real_symbol(|xi| m_value(xi, p))
}

/// Ratios in the norm comparison `‖f‖_{H^s} ≲ ‖If‖_{H¹} ≲ N^{1-s} ‖f‖_{H^s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormComparison {
    /// `‖f‖_{H^s} / ‖If‖_{H¹}`.
    pub lower_ratio: f64,
    /// `‖If‖_{H¹} / (N^{1-s} ‖f‖_{H^s})`.
    pub upper_ratio: f64,
}

pub fn norm_comparison(f: &SpectralField, p: &MultiplierParams) -> Result<NormComparison> {
    let hs = sobolev_norm(f, p.s);
    let h1 = sobolev_norm(&i_apply(f, p), 1.0);
    if hs == 0.0 {
        return Err(Error::UndefinedRatio("zero field".into()));
    }
    Ok(NormComparison {
        lower_ratio: hs / h1,
        upper_ratio: h1 / (p.n.powf(1.0 - p.s) * hs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGrid;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: f64, s: f64) -> MultiplierParams {
        MultiplierParams::new(n, s, 3).unwrap()
    }

    #[test]
    fn printed_branches() {
        let p = params(16.0, 0.5);
        assert_eq!(m_value(8.0, &p), 1.0);
        assert_eq!(m_value(-16.0, &p), 1.0);
        assert_relative_eq!(m_value(64.0, &p), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m_value(32.0, &p), (0.5f64).sqrt(), epsilon = 1e-15);
        let q = params(5.0, 0.7);
        assert_relative_eq!(m_value(-20.0, &q), 5f64.powf(0.3) * 20f64.powf(-0.3), epsilon = 1e-15);
    }

    #[test]
    fn validation() {
        assert!(MultiplierParams::new(0.5, 0.5, 3).is_err());
        assert!(MultiplierParams::new(4.0, 1.0, 3).is_err());
        assert!(MultiplierParams::new(4.0, 0.6, 5).is_err());
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        for &s in &[0.5, 0.6, 0.9] {
            let p = params(10.0, s);
            for &x in &[3.0, 10.5, 13.0, 17.0, 19.5, 25.0, 80.0] {
                let h = 2e-4 * x;
                let fd = (cubic_symbol(x + h, &p) - 2.0 * cubic_symbol(x, &p)
                    + cubic_symbol(x - h, &p))
                    / (h * h);
                let an = cubic_symbol_second_derivative(x, &p);
                assert_relative_eq!(fd, an, max_relative = 1e-5);
                assert_relative_eq!(cubic_symbol_second_derivative(-x, &p), -an);
            }
        }
    }

    #[test]
    fn second_derivative_continuous_at_junctions() {
        let p = params(7.0, 0.55);
        for &x in &[7.0, 14.0] {
            let l = cubic_symbol_second_derivative(x * (1.0 - 1e-9), &p);
            let r = cubic_symbol_second_derivative(x * (1.0 + 1e-9), &p);
            assert_relative_eq!(l, r, max_relative = 1e-6);
        }
    }

    #[test]
    fn second_difference_converges_quadratically() {
        // C² symbol: centred second differences converge at rate h².
        let p = params(4.0, 0.5);
        let x = 6.3;
        let exact = cubic_symbol_second_derivative(x, &p);
        let err = |h: f64| {
            ((cubic_symbol(x + h, &p) - 2.0 * cubic_symbol(x, &p) + cubic_symbol(x - h, &p))
                / (h * h)
                - exact)
                .abs()
        };
        let rate = (err(0.02) / err(0.01)).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn identity_below_threshold() {
        let grid = TorusGrid::minimal(2.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let half: Vec<Complex64> = (0..=8)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = SpectralField::from_half_spectrum(grid, &half).unwrap();
        assert_eq!(i_apply(&f, &params(4.0, 0.5)), f);
        let single = SpectralField::single_mode(grid, 8, Complex64::new(1.0, 0.0)).unwrap();
        let p = params(1.0, 0.6);
        assert_relative_eq!(i_apply(&single, &p).coeff(8).re, 0.25f64.powf(0.4), epsilon = 1e-15);
    }

    #[test]
    fn sandwich_holds_on_random_fields() {
        let grid = TorusGrid::minimal(3.0, 96).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half: Vec<Complex64> = (0..=96)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = SpectralField::from_half_spectrum(grid, &half).unwrap();
            for &n in &[1.0, 4.0, 16.0] {
                let c = norm_comparison(&f, &params(n, 0.5 + 0.02 * seed as f64)).unwrap();
                assert!(c.lower_ratio <= 4.0 && c.upper_ratio <= 4.0, "{c:?}");
            }
        }
    }

    #[test]
    fn weighted_symbol_monotonicity() {
        // m²|ξ| is nondecreasing once 2(1-s)·max g' <= 1 (s ≳ 0.72), and
        // within a bounded factor below that.
        let grid: Vec<f64> = (0..4000).map(|i| 0.5 * 1.001f64.powi(i)).collect();
        for &s in &[0.75, 0.8, 0.95] {
            let p = params(3.0, s);
            for w in grid.windows(2) {
                let a = m_value(w[0], &p).powi(2) * w[0];
                let b = m_value(w[1], &p).powi(2) * w[1];
                assert!(b >= a * (1.0 - 1e-14), "s={s} at {}", w[0]);
            }
        }
        let p = params(3.0, 0.5);
        let vals: Vec<f64> = grid.iter().map(|&x| m_value(x, &p).powi(2) * x).collect();
        let mut running: f64 = 0.0;
        let mut worst: f64 = 1.0;
        for v in vals {
            running = running.max(v);
            worst = worst.max(running / v);
        }
        assert!(worst < 1.25, "quasi-monotonicity factor {worst}");
    }

    proptest! {
        #[test]
        fn even_bounded_nonincreasing(x in 0.0f64..500.0, dx in 0.0f64..50.0, n in 1.0f64..64.0, s in 0.5f64..0.99) {
            let p = params(n, s);
            let a = m_value(x, &p);
            prop_assert_eq!(a, m_value(-x, &p));
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(m_value(x + dx, &p) <= a);
        }
    }
}
