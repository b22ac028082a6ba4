//! Energies of the I-method and the multipliers of their time derivatives.
//!
//! The flow `u_t = -u_xxx + μ ∂_x(u^{k+1})` conserves
//! `E(u) = ∫ ½ u_x² + μ u^{k+2}/(k+2)`. Writing `f(ξ) = m(ξ)² ξ³`, along the
//! flow
//!
//! `d/dt E(Iu) = μ κ₁ Λ_{k+2}[M_{k+2} - i(k+2) σ_{k+2} α] + μ² κ₂ Λ_{2k+2}[M_{2k+2}]`
//!
//! with `κ₁ = -(2π)³/(k+2)` and `κ₂ = 2π` (one factor `2π` per derivative).
//! The second modified energy adds the real correction
//!
//! `μ Λ_{k+2}[χ_Ω (Σ f(ξ_j) - ∏ m(ξ_j) α) / ((k+2) α)]`,
//!
//! whose linear-flow derivative cancels the part of the first term on `Ω`.
//! Every functional is evaluated with `û` directly: on the hyperplane the
//! interaction phases multiply to one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::transform::{alias_free_samples, derivative, integrate_product, inverse_transform_on, power, sobolev_norm};
use crate::lattice::{symmetric_functional, symmetric_with_tail, SpectralField, SumOptions};
use crate::multiplier::resonance::{omega_flags, rearrange_entries, Entry};
use crate::multiplier::symbol::{cubic_symbol, i_apply, m_value, MultiplierParams};
use crate::solver::Trajectory;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Imaginary residues above this fraction of the magnitude abort.
pub const RESIDUE_ABORT: f64 = 1e-6;

/// Residues above this fraction are logged.
pub const RESIDUE_WARN: f64 = 1e-9;

/// `κ₁ = -(2π)³/(k+2)`.
pub fn linear_constant(k: u32) -> f64 {
    -(2.0 * PI).powi(3) / (k as f64 + 2.0)
}

/// `κ₂ = 2π`.
pub const NONLINEAR_CONSTANT: f64 = 2.0 * PI;

/// `N^{-3+ε} + N^{-2+ε} λ^{-1/2}`.
pub fn increment_bound(n: f64, lambda: f64, eps: f64) -> f64 {
    n.powf(-3.0 + eps) + n.powf(-2.0 + eps) / lambda.sqrt()
}

fn real_part(z: Complex64, magnitude: f64, what: &str) -> Result<f64> {
    let scale = magnitude.max(z.norm());
    if scale == 0.0 {
        return Ok(z.re);
    }
    let rel = z.im.abs() / scale;
    if rel > RESIDUE_ABORT {
        return Err(Error::ImaginaryResidue {
            residue: z.im.abs(),
            magnitude: scale,
        });
    }
    if rel > RESIDUE_WARN {
        log::warn!("{what}: imaginary residue {:e} relative to {scale:e}", z.im.abs());
    } else {
        log::debug!("{what}: imaginary residue {:e}", z.im.abs());
    }
    Ok(z.re)
}

fn require_real(u: &SpectralField) -> Result<()> {
    if !u.is_real() {
        return Err(Error::Precondition("energies need a real field".into()));
    }
    Ok(())
}

/// `E(u)` with quadrature on `samples` physical nodes; exact once
/// `samples > (k+2) K`.
pub fn hamiltonian_on(u: &SpectralField, k: u32, mu: f64, samples: usize) -> Result<f64> {
    require_real(u)?;
    let required = (k as usize + 2) * u.mode_bound() + 1;
    if samples < required {
        return Err(Error::Aliasing {
            required,
            available: samples,
        });
    }
    let vals = inverse_transform_on(u, samples)?;
    let dx = inverse_transform_on(&derivative(u), samples)?;
    let h = u.period() / samples as f64;
    let quad: f64 = 0.5 * h * dx.iter().map(|v| v * v).sum::<f64>();
    let pot: f64 = h * vals.iter().map(|v| v.powi(k as i32 + 2)).sum::<f64>();
    Ok(quad + mu * pot / (k as f64 + 2.0))
}

/// `E(u) = ∫ ½ u_x² + u^{k+2}/(k+2)` (defocusing sign).
pub fn hamiltonian(u: &SpectralField, k: u32) -> Result<f64> {
    hamiltonian_on(u, k, 1.0, alias_free_samples((k as usize + 2) * u.mode_bound(), 0))
}

/// `½ ∫ u_x²` by Parseval.
pub fn quadratic_energy(u: &SpectralField) -> f64 {
    let g = u.grid();
    0.5 * u
        .modes()
        .map(|(n, c)| (2.0 * PI * g.frequency(n)).powi(2) * c.norm_sqr())
        .sum::<f64>()
        / u.period()
}

/// `E(Iu)`.
pub fn e_of_iu(u: &SpectralField, p: &MultiplierParams) -> Result<f64> {
    hamiltonian(&i_apply(u, p), p.k)
}

/// Symbol values tabulated on the modes `|n| <= R`.
struct SymbolTable {
    offset: i64,
    x: Vec<f64>,
    m: Vec<f64>,
    f: Vec<f64>,
    cube: Vec<f64>,
    period3: f64,
    arity: usize,
}

/// Classification of a point of `Γ_{k+2}` with the correction numerator.
struct Split {
    /// `Σ f(ξ_j) - ∏ m(ξ_j) α = Σ ξ_j³ (m_j² - ∏ m)`.
    numerator: f64,
    in_omega: bool,
    alpha: f64,
}

impl SymbolTable {
    fn new(reach: usize, period: f64, p: &MultiplierParams) -> Self {
        let r = reach as i64;
        let x: Vec<f64> = (-r..=r).map(|n| n as f64 / period).collect();
        Self {
            offset: r,
            m: x.iter().map(|&v| m_value(v, p)).collect(),
            f: x.iter().map(|&v| cubic_symbol(v, p)).collect(),
            cube: x.iter().map(|&v| v * v * v).collect(),
            x,
            period3: period.powi(3),
            arity: p.arity(),
        }
    }

    #[inline]
    fn at(&self, n: i64) -> usize {
        (n + self.offset) as usize
    }

    #[inline]
    fn m(&self, n: i64) -> f64 {
        self.m[self.at(n)]
    }

    fn split(&self, idx: &[i64], p: &MultiplierParams) -> Split {
        let len = idx.len();
        let mut e = [Entry::default(); 8];
        let mut a: i128 = 0;
        let mut mp = 1.0;
        for (j, &n) in idx.iter().enumerate() {
            let i = self.at(n);
            e[j] = Entry {
                n,
                x: self.x[i],
                f: self.f[i],
            };
            let c = n as i128;
            a += c * c * c;
            mp *= self.m[i];
        }
        let numerator: f64 = idx
            .iter()
            .map(|&n| {
                let i = self.at(n);
                self.cube[i] * (self.m[i] * self.m[i] - mp)
            })
            .sum();
        let alpha = a as f64 / self.period3;
        if a == 0 {
            return Split {
                numerator,
                in_omega: false,
                alpha,
            };
        }
        rearrange_entries(&mut e[..len]);
        let in_omega = omega_flags(&e[..len], p).o.iter().any(|&b| b);
        Split {
            numerator,
            in_omega,
            alpha,
        }
    }

    /// `χ_Ω (Σ f - ∏ m α) / ((k+2) α)`.
    fn correction(&self, idx: &[i64], p: &MultiplierParams) -> f64 {
        let s = self.split(idx, p);
        if s.in_omega {
            s.numerator / (self.arity as f64 * s.alpha)
        } else {
            0.0
        }
    }
}

/// The correction multiplier of `E_I²` at a point of `Γ_{k+2}`.
pub fn correction_multiplier(modes: &[i64], period: f64, p: &MultiplierParams) -> Result<f64> {
    if modes.len() != p.arity() {
        return Err(Error::Arity {
            expected: p.arity(),
            found: modes.len(),
        });
    }
    let sum: i64 = modes.iter().sum();
    if sum != 0 {
        return Err(Error::NotOnHyperplane { sum });
    }
    let reach = modes.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
    Ok(SymbolTable::new(reach, period, p).correction(modes, p))
}

/// Raw values of the two functionals in `d/dt E(Iu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementTerms {
    /// `Λ_{k+2}[M_{k+2} - i(k+2) σ_{k+2} α_{k+2}]`.
    pub de1: Complex64,
    /// `Λ_{2k+2}[M_{2k+2}]` with the inner multiplier `σ_{k+2}`.
    pub de2: Complex64,
}

impl IncrementTerms {
    /// `μ κ₁ dE1`.
    pub fn linear_rate(&self, k: u32, mu: f64) -> f64 {
        mu * linear_constant(k) * self.de1.re
    }

    /// `μ² κ₂ dE2`.
    pub fn nonlinear_rate(&self, mu: f64) -> f64 {
        mu * mu * NONLINEAR_CONSTANT * self.de2.re
    }

    /// `d/dt E(Iu)`.
    pub fn time_derivative(&self, k: u32, mu: f64) -> f64 {
        self.linear_rate(k, mu) + self.nonlinear_rate(mu)
    }
}

/// Pieces of `d/dt E_I²` after the cancellation on `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedIncrement {
    /// `μ κ₁ Λ_{k+2}[χ_{Ω^c} (M_{k+2} - i(k+2) σ α)]`.
    pub resonant: f64,
    /// `μ² κ₂ Λ_{2k+2}[M_{2k+2}]`.
    pub nonlinear: f64,
    /// Nonlinear-flow derivative of the correction term.
    pub correction: f64,
}

impl ModifiedIncrement {
    pub fn total(&self) -> f64 {
        self.resonant + self.nonlinear + self.correction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub hamiltonian: f64,
    pub e_iu: f64,
    pub e_i2: f64,
    /// `|E_I² - E(Iu)|`.
    pub gap: f64,
    pub h1_norm_iu: f64,
    pub time: f64,
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub hamiltonian: f64,
    #[serde(rename = "e_Iu")]
    pub e_iu: f64,
    #[serde(rename = "e_I2")]
    pub e_i2: f64,
    pub gap: f64,
    #[serde(rename = "h1_Iu")]
    pub h1_iu: f64,
    pub mass: f64,
    /// `μ κ₁ dE1`.
    #[serde(rename = "dE1_re")]
    pub de1_re: f64,
    /// `μ² κ₂ dE2`.
    #[serde(rename = "dE2_re")]
    pub de2_re: f64,
}

/// Energy functionals for fixed multiplier parameters and sign `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub params: MultiplierParams,
    pub mu: f64,
    pub opts: SumOptions,
}

impl EnergyModel {
    pub fn new(params: MultiplierParams) -> Self {
        Self {
            params,
            mu: 1.0,
            opts: SumOptions::default(),
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_options(mut self, opts: SumOptions) -> Self {
        self.opts = opts;
        self
    }

    fn k(&self) -> u32 {
        self.params.k
    }

    fn table(&self, u: &SpectralField, reach: usize) -> SymbolTable {
        SymbolTable::new(reach, u.period(), &self.params)
    }

    /// Crude bound on `|Λ_n[m; u,…,u]|` per unit multiplier: `λ (Σ|û|/λ)^n`.
    fn lambda_scale(u: &SpectralField, arity: usize) -> f64 {
        let sup: f64 = u.modes().map(|(_, c)| c.norm()).sum::<f64>() / u.period();
        u.period() * sup.powi(arity as i32)
    }

    pub fn hamiltonian(&self, u: &SpectralField) -> Result<f64> {
        let k = self.k();
        hamiltonian_on(u, k, self.mu, alias_free_samples((k as usize + 2) * u.mode_bound(), 0))
    }

    pub fn e_of_iu(&self, u: &SpectralField) -> Result<f64> {
        self.hamiltonian(&i_apply(u, &self.params))
    }

    /// `μ Λ_{k+2}[χ_Ω (Σ f - ∏ m α)/((k+2) α)]`.
    pub fn correction(&self, u: &SpectralField) -> Result<f64> {
        require_real(u)?;
        if self.mu == 0.0 {
            return Ok(0.0);
        }
        let p = self.params;
        let table = self.table(u, u.mode_bound());
        let z = symmetric_functional(
            |idx| Complex64::new(table.correction(idx, &p), 0.0),
            u,
            p.arity(),
            self.opts,
        )?;
        let scale = Self::lambda_scale(u, p.arity());
        Ok(self.mu * real_part(z, scale, "E_I² correction")?)
    }

    /// `E_I² = E(Iu) + μ Λ_{k+2}[χ_Ω (Σ f - ∏ m α)/((k+2) α)]`.
    pub fn second_modified_energy(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.e_of_iu(u)? + self.correction(u)?)
    }

    /// `dE1` and `dE2`; `dE2` is computed as `Λ_{k+2}[i ∏_{j≤k+1} m_j m(η) η; u,…,u, u^{k+1}]`,
    /// which is `Λ_{2k+2}[M_{2k+2}]` with the last `k+1` frequencies summed to `η`.
    pub fn increment_terms(&self, u: &SpectralField) -> Result<IncrementTerms> {
        require_real(u)?;
        let p = self.params;
        let k = p.k as usize;
        let reach = (k + 1) * u.mode_bound();
        let table = self.table(u, reach);
        let de1 = symmetric_functional(
            |idx| I * table.split(idx, &p).numerator,
            u,
            p.arity(),
            self.opts,
        )?;
        let w = power(u, k + 1, reach)?;
        let de2 = symmetric_with_tail(
            |idx| {
                let prod: f64 = idx[..k + 1].iter().map(|&n| table.m(n)).product();
                let t = idx[k + 1];
                I * (prod * table.m(t) * table.x[table.at(t)])
            },
            u,
            k + 1,
            &w,
            self.opts,
        )?;
        let xmax = u.grid().max_frequency().max(1.0);
        let s1 = Self::lambda_scale(u, p.arity()) * xmax.powi(3);
        let s2 = Self::lambda_scale(u, 2 * k + 2) * xmax;
        Ok(IncrementTerms {
            de1: Complex64::new(real_part(de1, s1, "dE1")?, 0.0),
            de2: Complex64::new(real_part(de2, s2, "dE2")?, 0.0),
        })
    }

    /// `d/dt E_I²` split into the resonant remainder, the `Λ_{2k+2}` term and
    /// the nonlinear derivative of the correction.
    pub fn modified_increment(&self, u: &SpectralField) -> Result<ModifiedIncrement> {
        require_real(u)?;
        let p = self.params;
        let k = p.k as usize;
        let mu = self.mu;
        let reach = (k + 1) * u.mode_bound();
        let table = self.table(u, reach);
        let terms = self.increment_terms(u)?;
        let resonant = symmetric_functional(
            |idx| {
                let s = table.split(idx, &p);
                if s.in_omega {
                    Complex64::new(0.0, 0.0)
                } else {
                    I * s.numerator
                }
            },
            u,
            p.arity(),
            self.opts,
        )?;
        let w = power(u, k + 1, reach)?;
        // (k+2) μ Λ[B; u,…,u, μ ∂_x u^{k+1}] with B symmetric.
        let corr = symmetric_with_tail(
            |idx| {
                let t = idx[k + 1];
                Complex64::new(0.0, 2.0 * PI * table.x[table.at(t)] * table.correction(idx, &p))
            },
            u,
            k + 1,
            &w,
            self.opts,
        )?;
        let xmax = u.grid().max_frequency().max(1.0);
        let s1 = Self::lambda_scale(u, p.arity()) * xmax.powi(3);
        let s2 = Self::lambda_scale(u, 2 * k + 2) * xmax;
        Ok(ModifiedIncrement {
            resonant: mu * linear_constant(p.k) * real_part(resonant, s1, "resonant dE1")?,
            nonlinear: terms.nonlinear_rate(mu),
            correction: mu * mu * (k as f64 + 2.0) * real_part(corr, s2, "correction derivative")?,
        })
    }

    /// `u_t = -u_xxx + μ ∂_x(u^{k+1})` at a band-limited `u`, on modes `|n| <= (k+1)K`.
    pub fn time_derivative_field(&self, u: &SpectralField) -> Result<SpectralField> {
        let k = self.k() as usize;
        let reach = (k + 1) * u.mode_bound();
        let lin = u
            .with_mode_bound(reach)
            .apply_symbol(|xi| Complex64::new(0.0, (2.0 * PI * xi).powi(3)), true);
        let flux = derivative(&power(u, k + 1, reach)?).scale(self.mu);
        lin.add(&flux)
    }

    /// `d/dt E(Iu)` by the chain rule through the spectral ODE:
    /// `∫ (Iu)_x (Iu_t)_x + μ ∫ (Iu)^{k+1} I u_t`, all products alias-free.
    pub fn chain_rule_derivative(&self, u: &SpectralField) -> Result<f64> {
        require_real(u)?;
        let k = self.k() as usize;
        let ut = self.time_derivative_field(u)?;
        let iu = i_apply(u, &self.params).with_mode_bound(ut.mode_bound());
        let iut = i_apply(&ut, &self.params);
        let quad = integrate_product(&[&derivative(&iu), &derivative(&iut)])?;
        let mut fields: Vec<&SpectralField> = vec![&iu; k + 1];
        fields.push(&iut);
        let pot = integrate_product(&fields)?;
        Ok(quad.re + self.mu * pot.re)
    }

    /// `d/dt E_I²` by the chain rule: the `E(Iu)` part as in
    /// [`Self::chain_rule_derivative`] plus `(k+2) μ Λ_{k+2}[B; u,…,u, u_t]`.
    pub fn chain_rule_modified_derivative(&self, u: &SpectralField) -> Result<f64> {
        let base = self.chain_rule_derivative(u)?;
        if self.mu == 0.0 {
            return Ok(base);
        }
        let p = self.params;
        let k = p.k as usize;
        let ut = self.time_derivative_field(u)?;
        let table = self.table(u, ut.mode_bound());
        let z = symmetric_with_tail(
            |idx| Complex64::new(table.correction(idx, &p), 0.0),
            u,
            k + 1,
            &ut,
            self.opts,
        )?;
        Ok(base + self.mu * (k as f64 + 2.0) * z.re)
    }

    pub fn report(&self, u: &SpectralField, time: f64) -> Result<EnergyReport> {
        let e_iu = self.e_of_iu(u)?;
        let e_i2 = e_iu + self.correction(u)?;
        Ok(EnergyReport {
            hamiltonian: self.hamiltonian(u)?,
            e_iu,
            e_i2,
            gap: (e_i2 - e_iu).abs(),
            h1_norm_iu: sobolev_norm(&i_apply(u, &self.params), 1.0),
            time,
        })
    }

    pub fn diagnostics(&self, u: &SpectralField, time: f64) -> Result<DiagnosticsRow> {
        let r = self.report(u, time)?;
        let inc = self.increment_terms(u)?;
        Ok(DiagnosticsRow {
            t: time,
            hamiltonian: r.hamiltonian,
            e_iu: r.e_iu,
            e_i2: r.e_i2,
            gap: r.gap,
            h1_iu: r.h1_norm_iu,
            mass: u.mean() * u.period(),
            de1_re: inc.linear_rate(self.k(), self.mu),
            de2_re: inc.nonlinear_rate(self.mu),
        })
    }
}

/// `E_I²` with `μ = +1` and the default size limit.
pub fn second_modified_energy(u: &SpectralField, p: &MultiplierParams) -> Result<f64> {
    EnergyModel::new(*p).second_modified_energy(u)
}

/// `dE1`, `dE2` with `μ = +1` and the default size limit.
pub fn increment_terms(u: &SpectralField, p: &MultiplierParams) -> Result<IncrementTerms> {
    EnergyModel::new(*p).increment_terms(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowIncrement {
    pub t0: f64,
    pub t1: f64,
    /// `|E_I²(t₁) - E_I²(t₀)|`.
    pub increment: f64,
    /// `increment / K`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostConservation {
    #[serde(rename = "N")]
    pub n: f64,
    pub lambda: f64,
    pub eps: f64,
    /// `K = N^{-3+ε} + N^{-2+ε} λ^{-1/2}`.
    pub k_bound: f64,
    pub energies: Vec<f64>,
    pub windows: Vec<WindowIncrement>,
    pub max_increment: f64,
}

/// `E_I²` at every sample of `traj` and its increments over consecutive samples.
pub fn almost_conservation_run(traj: &Trajectory, model: &EnergyModel, eps: f64) -> Result<AlmostConservation> {
    let energies: Vec<f64> = traj
        .samples
        .par_iter()
        .map(|s| model.second_modified_energy(&s.field))
        .collect::<Result<_>>()?;
    let lambda = traj.config.grid.period();
    let n = model.params.n;
    let k_bound = increment_bound(n, lambda, eps);
    let windows: Vec<WindowIncrement> = traj
        .samples
        .windows(2)
        .zip(energies.windows(2))
        .map(|(s, e)| {
            let inc = (e[1] - e[0]).abs();
            WindowIncrement {
                t0: s[0].time,
                t1: s[1].time,
                increment: inc,
                ratio: inc / k_bound,
            }
        })
        .collect();
    let max_increment = windows.iter().map(|w| w.increment).fold(0.0, f64::max);
    Ok(AlmostConservation {
        n,
        lambda,
        eps,
        k_bound,
        energies,
        windows,
        max_increment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGrid;
    use crate::multiplier::resonance::{classify, m_2k2, InnerMultiplier};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: TorusGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half: Vec<Complex64> = (0..=grid.mode_bound())
            .map(|n| {
                let a = grid.period() / (1.0 + n as f64);
                Complex64::new(rng.gen_range(-a..a), if n == 0 { 0.0 } else { rng.gen_range(-a..a) })
            })
            .collect();
        SpectralField::from_half_spectrum(grid, &half).unwrap()
    }

    #[test]
    fn hamiltonian_closed_forms() {
        let grid = TorusGrid::minimal(3.0, 4).unwrap();
        let mut c = SpectralField::zeros(grid);
        c.set_real_mode(0, Complex64::new(0.7 * 3.0, 0.0));
        assert_relative_eq!(hamiltonian(&c, 3).unwrap(), 3.0 * 0.7f64.powi(5) / 5.0, max_relative = 1e-14);
        // A sin(2πx/λ): ½∫u_x² = A²π²/λ.
        let a = 0.3;
        let mut s = SpectralField::zeros(grid);
        s.set_real_mode(1, Complex64::new(0.0, -a * 3.0 / 2.0));
        assert_relative_eq!(quadratic_energy(&s), a * a * PI * PI / 3.0, max_relative = 1e-14);
        let h = hamiltonian_on(&s, 4, 0.0, 64).unwrap();
        assert_relative_eq!(h, quadratic_energy(&s), max_relative = 1e-12);
        assert!(matches!(hamiltonian_on(&s, 4, 1.0, 20), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn parseval_matches_physical_quadrature() {
        let u = random_field(TorusGrid::minimal(2.5, 9).unwrap(), 1);
        let h = hamiltonian_on(&u, 3, 0.0, 97).unwrap();
        assert_relative_eq!(h, quadratic_energy(&u), max_relative = 1e-10);
    }

    #[test]
    fn identity_regime() {
        let u = random_field(TorusGrid::minimal(2.0, 6).unwrap(), 2);
        let p = MultiplierParams::new(100.0, 0.5, 3).unwrap();
        assert_eq!(e_of_iu(&u, &p).unwrap(), hamiltonian(&u, 3).unwrap());
        assert_eq!(second_modified_energy(&u, &p).unwrap(), e_of_iu(&u, &p).unwrap());
        let z = SpectralField::zeros(*u.grid());
        assert_eq!(second_modified_energy(&z, &p).unwrap(), 0.0);
        let t = increment_terms(&z, &p).unwrap();
        assert_eq!((t.de1.norm(), t.de2.norm()), (0.0, 0.0));
    }

    #[test]
    fn single_high_mode_energy() {
        // u = 2A cos(2πnx/λ): E(Iu) = m² · ½∫u_x² + m^{k+2} ∫u^{k+2}/(k+2).
        let lambda = 1.0;
        let grid = TorusGrid::minimal(lambda, 40).unwrap();
        let a = 0.2;
        let n = 30;
        let mut u = SpectralField::zeros(grid);
        u.set_real_mode(n, Complex64::new(a * lambda, 0.0));
        let p = MultiplierParams::new(8.0, 0.5, 4).unwrap();
        let m = m_value(n as f64, &p);
        let quad = 0.5 * (2.0 * PI * n as f64).powi(2) * 2.0 * a * a * lambda;
        // ∫ (2A cos)^6 = 64 A^6 · (5/16) λ.
        let pot = 64.0 * a.powi(6) * 5.0 / 16.0 * lambda / 6.0;
        assert_relative_eq!(e_of_iu(&u, &p).unwrap(), m * m * quad + m.powi(6) * pot, max_relative = 1e-12);
    }

    #[test]
    fn correction_multiplier_pointwise() {
        let p = MultiplierParams::new(4.0, 0.5, 3).unwrap();
        let t = [2000i64, -1700, -151, -149, 0];
        assert!(classify(&t, 1.0, &p).unwrap().in_omega);
        let f: f64 = t.iter().map(|&n| cubic_symbol(n as f64, &p)).sum();
        let mp: f64 = t.iter().map(|&n| m_value(n as f64, &p)).product();
        let a: f64 = t.iter().map(|&n| (n as f64).powi(3)).sum();
        let expect = (f - mp * a) / (5.0 * a);
        assert_relative_eq!(correction_multiplier(&t, 1.0, &p).unwrap(), expect, max_relative = 1e-9);
        assert_eq!(correction_multiplier(&[50, -50, 0, 0, 0], 1.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn tail_form_of_de2_matches_dense_m2k2() {
        let grid = TorusGrid::minimal(1.0, 3).unwrap();
        let u = random_field(grid, 3);
        let p = MultiplierParams::new(1.0, 0.5, 3).unwrap();
        let dense = symmetric_functional(
            |idx| m_2k2(idx, 1.0, &p, InnerMultiplier::Sigma).unwrap(),
            &u,
            8,
            SumOptions::unlimited(),
        )
        .unwrap();
        let t = EnergyModel::new(p).increment_terms(&u).unwrap();
        assert_relative_eq!(t.de2.re, dense.re, max_relative = 1e-10);
        assert!(dense.im.abs() < 1e-10 * dense.re.abs());
    }

    #[test]
    fn chain_rule_matches_multiplier_form() {
        let grid = TorusGrid::minimal(1.5, 6).unwrap();
        let u = random_field(grid, 4);
        for (n, mu) in [(1.0, 1.0), (1.5, -1.0), (50.0, 1.0)] {
            let model = EnergyModel::new(MultiplierParams::new(n, 0.55, 3).unwrap()).with_mu(mu);
            let oracle = model.chain_rule_derivative(&u).unwrap();
            let terms = model.increment_terms(&u).unwrap();
            // Natural size of the rates; both sides vanish when m ≡ 1.
            let reference = quadratic_energy(&u) * (2.0 * PI * grid.max_frequency()).powi(3);
            let scale = (terms.linear_rate(3, mu).abs() + terms.nonlinear_rate(mu).abs()).max(reference);
            assert!(
                (terms.time_derivative(3, mu) - oracle).abs() <= 1e-9 * scale,
                "N={n}: {} vs {oracle}",
                terms.time_derivative(3, mu)
            );
        }
    }

    #[test]
    fn modified_energy_derivative_cancels_on_omega() {
        let grid = TorusGrid::minimal(1.0, 5).unwrap();
        let u = random_field(grid, 5);
        let model = EnergyModel::new(MultiplierParams::new(1.0, 0.5, 3).unwrap());
        let oracle = model.chain_rule_modified_derivative(&u).unwrap();
        let parts = model.modified_increment(&u).unwrap();
        let scale = parts.resonant.abs() + parts.nonlinear.abs() + parts.correction.abs();
        assert!((parts.total() - oracle).abs() <= 1e-9 * scale, "{parts:?} vs {oracle}");
        assert!(parts.correction != 0.0);
    }

    #[test]
    fn second_energy_is_real_and_parallel_safe() {
        let grid = TorusGrid::minimal(1.0, 6).unwrap();
        let u = random_field(grid, 6);
        let model = EnergyModel::new(MultiplierParams::new(1.0, 0.5, 3).unwrap());
        let a = model.second_modified_energy(&u).unwrap();
        let b = model.second_modified_energy(&u).unwrap();
        assert_eq!(a, b);
        assert!(a != model.e_of_iu(&u).unwrap());
    }
}
