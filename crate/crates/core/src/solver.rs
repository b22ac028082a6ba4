//! Pseudospectral integrator for `∂_t u + ∂_x³ u = μ ∂_x(u^{k+1})` on the
//! `λ`-torus, the free propagator, the scaling map and the gauge transform.
//!
//! On the Fourier side `û_t = i(2πξ)³ û + 2πiξ μ (u^{k+1})^`, so the free
//! flow multiplies each coefficient by `e^{i(2πξ)³t}`. The integrator runs
//! classical RK4 on the interaction variable `v = e^{-i(2πξ)³t} û` (Lawson's
//! integrating-factor scheme) with the linear phases evaluated at absolute
//! times; the flux `u^{k+1}` is formed on a zero-padded physical grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::transform::{fft_friendly_size, plan_forward, plan_inverse, wrap};
use crate::lattice::{SpectralField, TorusGrid};

/// `e^{i(2πξ)³t}`.
#[inline]
pub fn dispersion_phase(xi: f64, t: f64) -> Complex64 {
    let w = 2.0 * PI * xi;
    Complex64::from_polar(1.0, w * w * w * t)
}

/// `S_λ(t)φ`, the solution of `u_t + u_xxx = 0` with `u(0) = φ`.
pub fn free_propagator(phi: &SpectralField, t: f64) -> SpectralField {
    phi.apply_symbol(|xi| dispersion_phase(xi, t), true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub grid: TorusGrid,
    pub k: u32,
    pub dt: f64,
    pub t_end: f64,
    /// Ratio of padded physical samples to `2K + 1`; at least `(k+2)/2`.
    pub dealias_pad: f64,
    pub record_every: usize,
    /// Coefficient `μ` of the nonlinearity; `+1` is defocusing, `0` the free flow.
    pub mu: f64,
}

impl SolverConfig {
    pub fn new(grid: TorusGrid, k: u32, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            k,
            dt,
            t_end,
            dealias_pad: (k as f64 + 2.0) / 2.0,
            record_every: 1,
            mu: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k == 3 || self.k == 4) {
            return Err(Error::InvalidParameter(format!("k must be 3 or 4, got {}", self.k)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        let min_pad = (self.k as f64 + 2.0) / 2.0;
        if !(self.dealias_pad >= min_pad) {
            return Err(Error::InvalidParameter(format!(
                "dealias_pad {} is below (k+2)/2 = {min_pad}",
                self.dealias_pad
            )));
        }
        let samples = self.padded_samples();
        let required = (self.k as usize + 2) * self.grid.mode_bound() + 1;
        if samples < required {
            return Err(Error::Aliasing {
                required,
                available: samples,
            });
        }
        Ok(())
    }

    /// Physical samples used for the nonlinearity.
    pub fn padded_samples(&self) -> usize {
        let modes = self.grid.num_modes() as f64;
        fft_friendly_size((self.dealias_pad * modes).ceil() as usize)
    }

    /// Step count and the step actually used, `t_end / steps`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }

    /// Transport bound `0.5 / ((2πK/λ) sup|u|^k (k+1))`.
    pub fn cfl_limit(&self, sup: f64) -> f64 {
        let c = 2.0 * PI * self.grid.max_frequency() * sup.powi(self.k as i32) * (self.k as f64 + 1.0);
        if c == 0.0 {
            f64::INFINITY
        } else {
            0.5 / c
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub field: SpectralField,
    /// `∫_0^t ∫_T u^k dx ds`.
    pub gauge_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUp {
    pub last_valid_time: f64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub samples: Vec<Sample>,
    /// Step size after adjusting to land on `t_end`.
    pub dt: f64,
    pub steps: usize,
    /// Largest `|H(t) - H(0)| / |H(0)|` over all steps (absolute when `H(0) = 0`).
    pub hamiltonian_drift: f64,
    /// Largest `|∫u(t) - ∫u(0)|`.
    pub mass_drift: f64,
    pub cfl_warnings: usize,
    pub blowup: Option<BlowUp>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }
}

struct StageStats {
    /// `∫ u^k`.
    gauge_rate: f64,
    /// `μ/(k+2) ∫ u^{k+2}`.
    potential: f64,
    sup: f64,
}

/// Evaluates `N(û) = μ 2πiξ P_K (u^{k+1})^` on a padded grid.
struct Nonlinearity {
    k: u32,
    mu: f64,
    period: f64,
    kb: usize,
    samples: usize,
    deriv: Vec<f64>,
    buf: Vec<Complex64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Nonlinearity {
    fn new(cfg: &SolverConfig) -> Self {
        let samples = cfg.padded_samples();
        let kb = cfg.grid.mode_bound();
        Self {
            k: cfg.k,
            mu: cfg.mu,
            period: cfg.grid.period(),
            kb,
            samples,
            deriv: cfg.grid.modes().map(|n| 2.0 * PI * cfg.grid.frequency(n)).collect(),
            buf: vec![Complex64::new(0.0, 0.0); samples],
            fwd: plan_forward(samples),
            inv: plan_inverse(samples),
        }
    }

    fn eval(&mut self, uhat: &[Complex64], out: &mut [Complex64]) -> StageStats {
        let k = self.kb as i64;
        self.buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        let inv_p = 1.0 / self.period;
        for (i, c) in uhat.iter().enumerate() {
            self.buf[wrap(i as i64 - k, self.samples)] = c * inv_p;
        }
        self.inv.process(&mut self.buf);
        let h = self.period / self.samples as f64;
        let (mut gauge, mut pot, mut sup) = (0.0, 0.0, 0.0f64);
        for b in self.buf.iter_mut() {
            let u = b.re;
            let pk = u.powi(self.k as i32);
            let w = pk * u;
            gauge += pk;
            pot += w * u;
            sup = sup.max(u.abs());
            *b = Complex64::new(w, 0.0);
        }
        self.fwd.process(&mut self.buf);
        for n in 0..=k {
            let c = (self.buf[wrap(n, self.samples)] + self.buf[wrap(-n, self.samples)].conj()) * (0.5 * h);
            let i = (n + k) as usize;
            let v = Complex64::new(0.0, self.mu * self.deriv[i]) * c;
            out[i] = v;
            out[(k - n) as usize] = v.conj();
        }
        StageStats {
            gauge_rate: gauge * h,
            potential: self.mu * pot * h / (self.k as f64 + 2.0),
            sup,
        }
    }
}

fn quadratic_part(uhat: &[Complex64], deriv: &[f64], period: f64) -> f64 {
    0.5 * uhat
        .iter()
        .zip(deriv)
        .map(|(c, d)| d * d * c.norm_sqr())
        .sum::<f64>()
        / period
}

/// Integrate from `φ` over `[0, t_end]`.
pub fn integrate(config: &SolverConfig, phi: &SpectralField) -> Result<Trajectory> {
    config.validate()?;
    if !phi.is_real() {
        return Err(Error::Precondition("initial data must be real".into()));
    }
    if phi.period() != config.grid.period() || phi.mode_bound() > config.grid.mode_bound() {
        return Err(Error::GridMismatch);
    }
    let grid = config.grid;
    let phi = phi.with_mode_bound(grid.mode_bound());
    let field_grid = *phi.grid();
    let (steps, h) = config.steps();
    let xi: Vec<f64> = grid.modes().map(|n| grid.frequency(n)).collect();
    let len = xi.len();
    let mut rhs = Nonlinearity::new(config);
    let phases = |t: f64| -> Vec<Complex64> { xi.iter().map(|&x| dispersion_phase(x, t)).collect() };

    let to_field = |v: &[Complex64], t: f64| -> Result<SpectralField> {
        let ph = phases(t);
        let coeffs: Vec<Complex64> = v.iter().zip(&ph).map(|(a, b)| a * b).collect();
        SpectralField::from_coeffs(field_grid, coeffs, true)
    };

    let mut v: Vec<Complex64> = phi.coeffs().to_vec();
    let mass0 = v[grid.mode_bound()].re;
    let mut gauge = 0.0;
    let mut samples = vec![Sample {
        time: 0.0,
        field: phi.clone(),
        gauge_integral: 0.0,
    }];
    let mut scratch = vec![Complex64::new(0.0, 0.0); len];
    let mut stage = vec![Complex64::new(0.0, 0.0); len];
    let mut k1 = vec![Complex64::new(0.0, 0.0); len];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut h0 = None;
    let mut ham_drift = 0.0f64;
    let mut mass_drift = 0.0f64;
    let mut cfl_warnings = 0;
    let mut blowup = None;

    // F(t, w) = e^{-Lt} N(e^{Lt} w); returns the stage statistics.
    let mut eval = |t: f64, w: &[Complex64], out: &mut [Complex64], uhat: &mut [Complex64]| -> StageStats {
        let ph = phases(t);
        for i in 0..len {
            uhat[i] = w[i] * ph[i];
        }
        let stats = rhs.eval(uhat, out);
        for i in 0..len {
            out[i] *= ph[i].conj();
        }
        stats
    };

    let deriv: Vec<f64> = xi.iter().map(|x| 2.0 * PI * x).collect();
    let period = grid.period();
    let mut warned = false;
    for step in 0..steps {
        let t = step as f64 * h;
        let tm = (step as f64 + 0.5) * h;
        let tn = (step + 1) as f64 * h;

        let s1 = eval(t, &v, &mut k1, &mut scratch);
        let energy = quadratic_part(&scratch, &deriv, period) + s1.potential;
        let e0 = *h0.get_or_insert(energy);
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        ham_drift = ham_drift.max((energy - e0).abs() / scale);
        if h > config.cfl_limit(s1.sup) {
            cfl_warnings += 1;
            if !warned {
                log::warn!(
                    "dt = {h} exceeds the transport bound {} at t = {t}",
                    config.cfl_limit(s1.sup)
                );
                warned = true;
            }
        }

        for i in 0..len {
            stage[i] = v[i] + k1[i] * (0.5 * h);
        }
        let s2 = eval(tm, &stage, &mut k2, &mut scratch);
        for i in 0..len {
            stage[i] = v[i] + k2[i] * (0.5 * h);
        }
        let s3 = eval(tm, &stage, &mut k3, &mut scratch);
        for i in 0..len {
            stage[i] = v[i] + k3[i] * h;
        }
        let s4 = eval(tn, &stage, &mut k4, &mut scratch);

        let mut next = v.clone();
        for i in 0..len {
            next[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let next_gauge =
            gauge + h / 6.0 * (s1.gauge_rate + 2.0 * (s2.gauge_rate + s3.gauge_rate) + s4.gauge_rate);
        if !next.iter().all(|c| c.re.is_finite() && c.im.is_finite()) || !next_gauge.is_finite() {
            log::warn!("non-finite state at t = {tn}; stopping at t = {t}");
            blowup = Some(BlowUp {
                last_valid_time: t,
                step,
            });
            if samples.last().map(|s| s.time) != Some(t) {
                samples.push(Sample {
                    time: t,
                    field: to_field(&v, t)?,
                    gauge_integral: gauge,
                });
            }
            break;
        }
        v = next;
        gauge = next_gauge;
        mass_drift = mass_drift.max((v[grid.mode_bound()].re - mass0).abs());
        if (step + 1) % config.record_every == 0 || step + 1 == steps {
            samples.push(Sample {
                time: tn,
                field: to_field(&v, tn)?,
                gauge_integral: gauge,
            });
        }
    }
    Ok(Trajectory {
        config: *config,
        samples,
        dt: h,
        steps,
        hamiltonian_drift: ham_drift,
        mass_drift,
        cfl_warnings,
        blowup,
    })
}

/// `φ_λ(x) = λ^{-2/k} φ(x/λ)` for `φ` on the unit torus and integer `λ`.
///
/// `φ̂_λ(n/λ) = λ^{1-2/k} φ̂(n)`: the mode index is kept and the frequency
/// shrinks by `λ`.
pub fn rescale(phi: &SpectralField, lambda: f64, k: u32) -> Result<SpectralField> {
    if phi.period() != 1.0 {
        return Err(Error::Precondition(format!(
            "rescaling expects data on the unit torus, got period {}",
            phi.period()
        )));
    }
    if !(lambda >= 1.0 && lambda.fract() == 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ must be a positive integer, got {lambda}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let factor = lambda.powf(1.0 - 2.0 / k as f64);
    let grid = TorusGrid::new(lambda, phi.mode_bound(), phi.grid().samples())?;
    SpectralField::from_coeffs(grid, phi.coeffs().iter().map(|c| c * factor).collect(), phi.is_real())
}

/// Inverse of [`rescale`]: back to the unit torus.
pub fn unrescale(phi: &SpectralField, k: u32) -> Result<SpectralField> {
    let lambda = phi.period();
    if !(lambda >= 1.0 && lambda.fract() == 0.0) {
        return Err(Error::InvalidParameter(format!("λ must be a positive integer, got {lambda}")));
    }
    let factor = lambda.powf(2.0 / k as f64 - 1.0);
    let grid = TorusGrid::new(1.0, phi.mode_bound(), phi.grid().samples())?;
    SpectralField::from_coeffs(grid, phi.coeffs().iter().map(|c| c * factor).collect(), phi.is_real())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaChoice {
    /// `(1-s)/(2/k + s - 1/2)`.
    pub exponent: f64,
    /// `N^exponent`.
    pub value: f64,
    /// Nearest integer, at least 1, used by [`rescale`].
    pub rounded: u64,
}

/// Scaling parameter `λ ∼ N^{(1-s)/(2/k + s - 1/2)}` that normalises `E(Iφ_λ)`.
pub fn lambda_of_n(n: f64, s: f64, k: u32) -> Result<LambdaChoice> {
    if !(0.5..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s must lie in [1/2, 1), got {s}")));
    }
    if !(k == 3 || k == 4) {
        return Err(Error::InvalidParameter(format!("k must be 3 or 4, got {k}")));
    }
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::InvalidParameter(format!("N must be >= 1, got {n}")));
    }
    let denom = 2.0 / k as f64 + s - 0.5;
    assert!(denom > 0.0);
    let exponent = (1.0 - s) / denom;
    let value = n.powf(exponent);
    Ok(LambdaChoice {
        exponent,
        value,
        rounded: value.round().max(1.0) as u64,
    })
}

/// `Gu(t, x) = u(t, x + ∫_0^t ∫_T u^k)`, realised as the phase `e^{2πiξ·shift}`.
pub fn gauge_transform(traj: &Trajectory) -> Trajectory {
    let samples = traj
        .samples
        .iter()
        .map(|s| {
            let shift = s.gauge_integral;
            Sample {
                time: s.time,
                field: s
                    .field
                    .apply_symbol(|xi| Complex64::from_polar(1.0, 2.0 * PI * xi * shift), true),
                gauge_integral: s.gauge_integral,
            }
        })
        .collect();
    Trajectory {
        samples,
        ..traj.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::transform::{homogeneous_sobolev_norm, lq_norm};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: TorusGrid, amp: f64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = grid.mode_bound();
        let half: Vec<Complex64> = (0..=k)
            .map(|n| {
                let a = amp * grid.period() / (1.0 + n as f64).powi(2);
                Complex64::new(rng.gen_range(-a..a), if n == 0 { 0.0 } else { rng.gen_range(-a..a) })
            })
            .collect();
        SpectralField::from_half_spectrum(grid, &half).unwrap()
    }

    #[test]
    fn propagator_group_law_and_unitarity() {
        let grid = TorusGrid::minimal(3.0, 12).unwrap();
        let phi = random_field(grid, 1.0, 1);
        assert_eq!(free_propagator(&phi, 0.0), phi);
        let back = free_propagator(&free_propagator(&phi, 0.37), -0.37);
        for (a, b) in back.coeffs().iter().zip(phi.coeffs()) {
            assert!((a - b).norm() < 1e-13 * phi.max_abs_coeff());
        }
        assert_relative_eq!(free_propagator(&phi, 1.3).l2_norm(), phi.l2_norm(), max_relative = 1e-13);
        let single = SpectralField::single_mode(grid, 5, Complex64::new(1.0, 0.0)).unwrap();
        let out = free_propagator(&single, 0.01);
        let w = 2.0 * PI * 5.0 / 3.0;
        let expect = Complex64::new(0.0, w * w * w * 0.01).exp();
        assert!((out.coeff(5) - expect).norm() < 1e-15);
    }

    #[test]
    fn linear_limit_matches_propagator() {
        let grid = TorusGrid::minimal(4.0, 10).unwrap();
        let phi = random_field(grid, 1.0, 2);
        let mut cfg = SolverConfig::new(grid, 3, 1e-3, 0.05);
        cfg.mu = 0.0;
        cfg.record_every = 10;
        let traj = integrate(&cfg, &phi).unwrap();
        for s in &traj.samples {
            let exact = free_propagator(&phi, s.time);
            for (a, b) in s.field.coeffs().iter().zip(exact.coeffs()) {
                assert!((a - b).norm() <= 1e-12 * phi.max_abs_coeff());
            }
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = TorusGrid::minimal(2.0, 8).unwrap();
        let traj = integrate(&SolverConfig::new(grid, 4, 1e-2, 0.1), &SpectralField::zeros(grid)).unwrap();
        assert!(traj.samples.iter().all(|s| s.field.max_abs_coeff() == 0.0 && s.gauge_integral == 0.0));
    }

    #[test]
    fn mass_is_conserved() {
        let grid = TorusGrid::minimal(8.0, 16).unwrap();
        let phi = random_field(grid, 0.8, 3);
        let traj = integrate(&SolverConfig::new(grid, 3, 2e-3, 0.2), &phi).unwrap();
        assert!(traj.mass_drift <= 1e-12 * phi.coeff(0).norm().max(1.0));
        assert!(traj.blowup.is_none());
    }

    #[test]
    fn pad_below_minimum_is_rejected() {
        let grid = TorusGrid::minimal(1.0, 8).unwrap();
        let mut cfg = SolverConfig::new(grid, 4, 1e-3, 0.1);
        cfg.dealias_pad = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rescaling_identities() {
        let grid = TorusGrid::minimal(1.0, 6).unwrap();
        let phi = random_field(grid, 1.0, 4);
        assert_eq!(rescale(&phi, 1.0, 3).unwrap().coeffs(), phi.coeffs());
        for lambda in [2.0, 3.0, 8.0] {
            let k = 3;
            let p = rescale(&phi, lambda, k).unwrap();
            let e = -2.0 / k as f64;
            let l2 = lq_norm(&p, 2.0, 64).unwrap() / lq_norm(&phi, 2.0, 64).unwrap();
            assert_relative_eq!(l2, lambda.powf(0.5 + e), max_relative = 1e-12);
            let l4 = lq_norm(&p, 4.0, 64).unwrap() / lq_norm(&phi, 4.0, 64).unwrap();
            assert_relative_eq!(l4, lambda.powf(0.25 + e), max_relative = 1e-12);
            let h = homogeneous_sobolev_norm(&p, 0.7) / homogeneous_sobolev_norm(&phi, 0.7);
            assert_relative_eq!(h, lambda.powf(0.5 + e - 0.7), max_relative = 1e-12);
            let back = unrescale(&p, k).unwrap();
            for (a, b) in back.coeffs().iter().zip(phi.coeffs()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
        assert!(rescale(&phi, 2.5, 3).is_err());
    }

    #[test]
    fn lambda_exponents() {
        assert_relative_eq!(lambda_of_n(64.0, 0.5, 4).unwrap().exponent, 1.0, max_relative = 1e-15);
        assert_relative_eq!(lambda_of_n(64.0, 0.5, 3).unwrap().exponent, 0.75, max_relative = 1e-15);
        assert_eq!(lambda_of_n(64.0, 0.5, 4).unwrap().rounded, 64);
        assert!(lambda_of_n(1e6, 0.999_999, 3).unwrap().value < 1.0001);
        assert!(lambda_of_n(8.0, 1.0, 3).is_err());
    }

    #[test]
    fn gauge_keeps_hyperplane_products() {
        let grid = TorusGrid::minimal(2.0, 8).unwrap();
        let phi = random_field(grid, 1.0, 5);
        let mut cfg = SolverConfig::new(grid, 3, 1e-3, 0.02);
        cfg.record_every = 5;
        let traj = integrate(&cfg, &phi).unwrap();
        let g = gauge_transform(&traj);
        let s = g.last();
        assert!(s.gauge_integral != 0.0);
        let u = &traj.last().field;
        for t in [[3i64, -1, -2], [5, 2, -7], [8, -8, 0]] {
            let a: Complex64 = t.iter().map(|&n| u.coeff(n)).product();
            let b: Complex64 = t.iter().map(|&n| s.field.coeff(n)).product();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
        }
        assert_relative_eq!(s.field.l2_norm(), u.l2_norm(), max_relative = 1e-14);
    }
}
