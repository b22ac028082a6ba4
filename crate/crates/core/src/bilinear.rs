//! Bilinear Strichartz machinery on the `λ`-torus: the counting set
//! `A_{ξ,τ}`, the constant `C(M,λ)`, the frequency-restricted product `I_M`,
//! measured bilinear ratios and discrete `X_{s,b}` / `Y^s` estimators.
//!
//! Time frequencies are angular: the free flow `e^{i(2πξ)³t}` sits on the
//! shell `τ = (2πξ)³` and `τ`-integrals carry the measure `dτ/2π`, so that
//! `‖f‖_{X_{0,0}} = ‖f‖_{L²_{xt}}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::transform::japanese;
use crate::lattice::{SpectralField, TorusGrid};
use crate::solver::{dispersion_phase, free_propagator};

/// `C(M, λ)`: `1` for `M <= 1`, `(1/M + 1/λ)^{1/2}` otherwise.
pub fn c_constant(m: f64, lambda: f64) -> f64 {
    if m <= 1.0 {
        1.0
    } else {
        (1.0 / m + 1.0 / lambda).sqrt()
    }
}

/// `h(x) = e^{-1/x}` for `x > 0`.
fn h(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: `η = 1` on `[-1, 1]`, `0` off `(-2, 2)`, and
/// `η(t) = h(2-|t|) / (h(2-|t|) + h(|t|-1))` in between.
pub fn eta(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let p = h(2.0 - a);
        p / (p + h(a - 1.0))
    }
}

/// Length of the support of `η`.
pub const ETA_SUPPORT: f64 = 4.0;

/// Beyond this angular frequency `|∫ η⁴ e^{iωt}|` is below `1e-16 ∫ η⁴`.
pub const PSI_CUTOFF: f64 = 1000.0;

/// Effective bandwidth of `η⁴` used to size the trapezoid rule.
const PSI_BANDWIDTH: f64 = 800.0;

/// `Ψ(ω) = ∫ η(t)⁴ cos(ωt) dt` by the trapezoid rule on `[-2, 2]` with at least
/// `base` intervals, refined so that no alias of `ω` falls inside the
/// bandwidth of `η⁴`.
pub fn psi(omega: f64, base: usize) -> f64 {
    let need = (ETA_SUPPORT * (omega.abs() + PSI_BANDWIDTH) / (2.0 * PI)).ceil() as usize;
    let q = base.max(need).next_power_of_two();
    let dt = ETA_SUPPORT / q as f64;
    // The integrand vanishes at both ends.
    let sum: f64 = (1..q)
        .map(|j| {
            let t = -2.0 + j as f64 * dt;
            eta(t).powi(4) * (omega * t).cos()
        })
        .sum();
    sum * dt
}

/// A query for `A_{ξ,τ} = {ξ₁ ∈ Z/λ : |ξ₁² - ξ₂²| >= M, |τ - ξ₁³ - ξ₂³| <= width}`, `ξ₂ = ξ - ξ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingSetQuery {
    /// Mode index of `ξ`.
    pub xi: i64,
    pub tau: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub lambda: f64,
    pub width: f64,
}

impl CountingSetQuery {
    pub fn new(xi: i64, tau: f64, m: f64, lambda: f64) -> Self {
        Self {
            xi,
            tau,
            m,
            lambda,
            width: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.width > 0.0 && self.lambda > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid counting query {self:?}")));
        }
        Ok(())
    }

    /// Mode-index range containing every member: `ξ₁ - ξ/2 = d/(2λ)` with
    /// `d² <= 4λ² (a + width/(3|ξ|))`, `a = (τ - ξ³/4)/(3ξ)`.
    pub fn member_window(&self) -> Option<(i64, i64)> {
        if self.xi == 0 {
            return None;
        }
        let xi = self.xi as f64 / self.lambda;
        let a = (self.tau - xi.powi(3) / 4.0) / (3.0 * xi);
        let top = a + self.width / (3.0 * xi.abs());
        if top < 0.0 {
            return None;
        }
        let dmax = (2.0 * self.lambda * top.sqrt()).ceil() as i64 + 2;
        Some(((self.xi - dmax).div_euclid(2) - 1, (self.xi + dmax).div_euclid(2) + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSet {
    /// Mode indices `n₁` of the members, increasing.
    pub members: Vec<i64>,
    /// Members found through `(ξ₁ - ξ/2)² = a + O(width/|ξ|)`; `None` for `ξ = 0`.
    pub reformulated: Option<Vec<i64>>,
    /// Candidates decided in exact rational arithmetic because a float test
    /// fell within rounding distance of its boundary.
    pub exact_fallbacks: usize,
}

impl CountingSet {
    pub fn agree(&self) -> bool {
        self.reformulated.as_ref().is_none_or(|r| r == &self.members)
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

fn int(x: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Returns `Some(decision)` when `|lhs - rhs|` clearly exceeds rounding, `None` otherwise.
fn clear_le(lhs: f64, rhs: f64) -> Option<bool> {
    let margin = 1e-9 * (lhs.abs() + rhs.abs());
    if lhs <= rhs - margin {
        Some(true)
    } else if lhs >= rhs + margin {
        Some(false)
    } else {
        None
    }
}

struct Membership {
    direct: bool,
    reformulated: Option<bool>,
    exact: bool,
}

fn decide(q: &CountingSetQuery, n1: i64) -> Membership {
    let n = q.xi as i128;
    let a1 = n1 as i128;
    let a2 = n - a1;
    let d = 2 * a1 - n;
    let lam = q.lambda;
    // |ξ₁² - ξ₂²| = |n d| / λ².
    let sep = (n * d).abs();
    let cubes = a1 * a1 * a1 + a2 * a2 * a2;
    let sep_f = sep as f64 / (lam * lam);
    let dir_f = (q.tau - cubes as f64 / lam.powi(3)).abs();
    let c1 = clear_le(q.m, sep_f);
    let c2 = clear_le(dir_f, q.width);
    let reform = if n == 0 {
        None
    } else {
        let xi = n as f64 / lam;
        let a = (q.tau - xi.powi(3) / 4.0) / (3.0 * xi);
        let lhs = (d as f64 / (2.0 * lam)).powi(2);
        Some(clear_le((lhs - a).abs(), q.width / (3.0 * xi.abs())))
    };
    if let (Some(s), Some(c)) = (c1, c2) {
        if let Some(Some(r)) = reform {
            return Membership {
                direct: s && c,
                reformulated: Some(s && r),
                exact: false,
            };
        }
        if reform.is_none() {
            return Membership {
                direct: s && c,
                reformulated: None,
                exact: false,
            };
        }
    }
    // Exact rational evaluation of both characterisations.
    let (lam_r, tau_r, w_r, m_r) = (rat(lam), rat(q.tau), rat(q.width), rat(q.m));
    let lam2 = &lam_r * &lam_r;
    let lam3 = &lam2 * &lam_r;
    let s = int(sep) / &lam2 >= m_r;
    let c = (&tau_r - int(cubes) / &lam3).abs() <= w_r;
    let reformulated = if n == 0 {
        None
    } else {
        let xi = int(n) / &lam_r;
        let three = int(3);
        let a = (&tau_r - &xi * &xi * &xi / int(4)) / (&three * &xi);
        let half = int(d) / (int(2) * &lam_r);
        let r = ((&half * &half) - a).abs() <= &w_r / (three * xi.abs());
        Some(s && r)
    };
    Membership {
        direct: s && c,
        reformulated,
        exact: true,
    }
}

fn counting_range(q: &CountingSetQuery, lo: i64, hi: i64) -> CountingSet {
    let mut members = Vec::new();
    let mut reform = if q.xi == 0 { None } else { Some(Vec::new()) };
    let mut exact = 0;
    for n1 in lo..=hi {
        let d = decide(q, n1);
        exact += d.exact as usize;
        if d.direct {
            members.push(n1);
        }
        if let (Some(v), Some(true)) = (reform.as_mut(), d.reformulated) {
            v.push(n1);
        }
    }
    CountingSet {
        members,
        reformulated: reform,
        exact_fallbacks: exact,
    }
}

/// Enumerate `A_{ξ,τ}` over `|n₁| <= search_bound`.
pub fn counting_set(q: &CountingSetQuery, search_bound: i64) -> Result<CountingSet> {
    q.validate()?;
    Ok(counting_range(q, -search_bound.abs(), search_bound.abs()))
}

/// Search bound covering [`CountingSetQuery::member_window`].
pub fn sufficient_search_bound(q: &CountingSetQuery) -> i64 {
    q.member_window().map_or(0, |(lo, hi)| lo.abs().max(hi.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSweep {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub width: f64,
    pub queries: usize,
    pub max_card: usize,
    /// `max #A / (λ/M + 1)`.
    pub max_card_ratio: f64,
    pub mismatches: usize,
    pub exact_fallbacks: usize,
    pub seed: u64,
}

/// Random queries with `|ξ| <= 32` and `τ` within `2·width` of
/// `ξ₁³ + ξ₂³` for a random `ξ₁` with `|ξ₁| <= 64`, enumerated exhaustively.
pub fn counting_sweep(lambda: f64, m: f64, width: f64, queries: usize, seed: u64) -> Result<CountingSweep> {
    const CHUNK: usize = 512;
    let reach = (32.0 * lambda).round() as i64;
    let chunks = queries.div_ceil(CHUNK);
    let parts: Vec<Result<(usize, f64, usize, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let count = CHUNK.min(queries - c * CHUNK);
            let (mut card, mut ratio, mut mism, mut exact) = (0, 0.0f64, 0, 0);
            for _ in 0..count {
                let n = rng.gen_range(-reach..=reach);
                let n1 = rng.gen_range(-2 * reach..=2 * reach);
                let base = ((n1 as f64).powi(3) + ((n - n1) as f64).powi(3)) / lambda.powi(3);
                let tau = base + rng.gen_range(-2.0 * width..2.0 * width);
                let q = CountingSetQuery {
                    xi: n,
                    tau,
                    m,
                    lambda,
                    width,
                };
                let set = counting_set(&q, sufficient_search_bound(&q))?;
                exact += set.exact_fallbacks;
                if !set.agree() {
                    mism += 1;
                }
                card = card.max(set.members.len());
                ratio = ratio.max(set.members.len() as f64 / (lambda / m + 1.0));
            }
            Ok((card, ratio, mism, exact))
        })
        .collect();
    let mut out = CountingSweep {
        lambda,
        m,
        width,
        queries,
        max_card: 0,
        max_card_ratio: 0.0,
        mismatches: 0,
        exact_fallbacks: 0,
        seed,
    };
    for p in parts {
        let (c, r, mm, e) = p?;
        out.max_card = out.max_card.max(c);
        out.max_card_ratio = out.max_card_ratio.max(r);
        out.mismatches += mm;
        out.exact_fallbacks += e;
    }
    Ok(out)
}

#[inline]
fn separated(n1: i64, n2: i64, m: f64, lambda: f64) -> bool {
    let (a, b) = (n1 as i128, n2 as i128);
    ((a * a - b * b).abs() as f64) / (lambda * lambda) >= m
}

/// `I_M(f, g)^(ξ) = (1/λ) Σ_{ξ₁ + ξ₂ = ξ, |ξ₁² - ξ₂²| >= M} f̂(ξ₁) ĝ(ξ₂)`, on modes `|n| <= K_f + K_g`.
pub fn apply_im(f: &SpectralField, g: &SpectralField, m: f64) -> Result<SpectralField> {
    if f.period() != g.period() {
        return Err(Error::GridMismatch);
    }
    let lambda = f.period();
    let kb = f.mode_bound() + g.mode_bound();
    let grid = TorusGrid::minimal(lambda, kb)?;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.num_modes()];
    let sg: Vec<(i64, Complex64)> = g.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect();
    for (n1, a) in f.modes().filter(|(_, c)| c.norm_sqr() > 0.0) {
        for &(n2, b) in &sg {
            if separated(n1, n2, m, lambda) {
                out[(n1 + n2 + kb as i64) as usize] += a * b;
            }
        }
    }
    let inv = 1.0 / lambda;
    out.iter_mut().for_each(|c| *c *= inv);
    SpectralField::from_coeffs(grid, out, false)
}

/// Time quadrature for `‖η² I_M(S_λφ₁, S_λφ₂)‖_{L²_{xt}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "points")]
pub enum TimeQuadrature {
    /// Expand `|Σ c_p e^{iω_p t}|²` and integrate `η⁴ e^{i(ω_p - ω_q)t}` for each
    /// frequency difference with a trapezoid rule of at least the given size,
    /// refined per frequency so that it is alias-free.
    AliasFree(usize),
    /// Plain trapezoid in `t` on `[-2, 2]` with the given number of intervals.
    Trapezoid(usize),
}

impl TimeQuadrature {
    pub fn points(&self) -> usize {
        match *self {
            TimeQuadrature::AliasFree(q) | TimeQuadrature::Trapezoid(q) => q,
        }
    }

    pub fn doubled(&self) -> Self {
        match *self {
            TimeQuadrature::AliasFree(q) => TimeQuadrature::AliasFree(2 * q),
            TimeQuadrature::Trapezoid(q) => TimeQuadrature::Trapezoid(2 * q),
        }
    }
}

impl Default for TimeQuadrature {
    fn default() -> Self {
        TimeQuadrature::AliasFree(256)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BilinearMeasurement {
    pub numerator: f64,
    pub c_constant: f64,
    pub ratio: f64,
    pub quadrature_points: usize,
}

/// `‖η² I_M(S_λ φ₁, S_λ φ₂)‖²_{L²_{xt}}`.
pub fn bilinear_l2_squared(phi1: &SpectralField, phi2: &SpectralField, m: f64, quad: TimeQuadrature) -> Result<f64> {
    if phi1.period() != phi2.period() {
        return Err(Error::GridMismatch);
    }
    let lambda = phi1.period();
    match quad {
        TimeQuadrature::Trapezoid(q) => {
            let dt = ETA_SUPPORT / q as f64;
            let mut total = 0.0;
            for j in 1..q {
                let t = -2.0 + j as f64 * dt;
                let w = eta(t).powi(4);
                if w == 0.0 {
                    continue;
                }
                let prod = apply_im(&free_propagator(phi1, t), &free_propagator(phi2, t), m)?;
                total += w * prod.l2_norm().powi(2);
            }
            Ok(total * dt)
        }
        TimeQuadrature::AliasFree(q) => {
            let s1: Vec<(i64, Complex64)> = phi1.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect();
            let s2: Vec<(i64, Complex64)> = phi2.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect();
            // Output mode -> list of (n₁³ + n₂³, coefficient).
            let mut by_mode: HashMap<i64, Vec<(i128, Complex64)>> = HashMap::new();
            for &(n1, a) in &s1 {
                for &(n2, b) in &s2 {
                    if separated(n1, n2, m, lambda) {
                        let (x, y) = (n1 as i128, n2 as i128);
                        by_mode.entry(n1 + n2).or_default().push((x * x * x + y * y * y, a * b / lambda));
                    }
                }
            }
            let scale = (2.0 * PI / lambda).powi(3);
            let cut = (PSI_CUTOFF / scale).floor() as i128;
            let mut keys: Vec<i64> = by_mode.keys().copied().collect();
            keys.sort_unstable();
            let mut memo: HashMap<i128, f64> = HashMap::new();
            let mut total = 0.0;
            for key in keys {
                let mut v = by_mode.remove(&key).unwrap_or_default();
                v.sort_by_key(|e| e.0);
                let mut merged: Vec<(i128, Complex64)> = Vec::with_capacity(v.len());
                for (j, c) in v {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += c,
                        _ => merged.push((j, c)),
                    }
                }
                let mut acc = 0.0;
                for i in 0..merged.len() {
                    let (ji, ci) = merged[i];
                    let p0 = *memo.entry(0).or_insert_with(|| psi(0.0, q));
                    acc += ci.norm_sqr() * p0;
                    for &(jj, cj) in &merged[i + 1..] {
                        let dj = jj - ji;
                        if dj > cut {
                            break;
                        }
                        let p = *memo.entry(dj).or_insert_with(|| psi(scale * dj as f64, q));
                        acc += 2.0 * (ci * cj.conj()).re * p;
                    }
                }
                total += acc;
            }
            Ok(total / lambda)
        }
    }
}

/// `‖η² I_M(S_λφ₁, S_λφ₂)‖_{L²_{xt}} / (C(M,λ) ‖φ₁‖_{L²} ‖φ₂‖_{L²})`.
pub fn bilinear_ratio(phi1: &SpectralField, phi2: &SpectralField, m: f64, quad: TimeQuadrature) -> Result<BilinearMeasurement> {
    let lambda = phi1.period();
    let denom = phi1.l2_norm() * phi2.l2_norm();
    if denom == 0.0 {
        return Err(Error::UndefinedRatio("a datum vanishes".into()));
    }
    let numerator = bilinear_l2_squared(phi1, phi2, m, quad)?.max(0.0).sqrt();
    let c = c_constant(m, lambda);
    Ok(BilinearMeasurement {
        numerator,
        c_constant: c,
        ratio: numerator / (c * denom),
        quadrature_points: quad.points(),
    })
}

/// Random datum with `support` modes drawn from `|n| <= reach`.
pub fn random_sparse_field(lambda: f64, reach: usize, support: usize, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
    let grid = TorusGrid::minimal(lambda, reach)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.num_modes()];
    for _ in 0..support {
        let n = rng.gen_range(-(reach as i64)..=reach as i64);
        coeffs[(n + reach as i64) as usize] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    SpectralField::from_coeffs(grid, coeffs, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearSweep {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub samples: usize,
    pub max_ratio: f64,
    /// The same maximum with the quadrature size doubled.
    pub max_ratio_refined: f64,
    /// Largest relative change of a single ratio under doubling.
    pub max_refinement_change: f64,
    pub quadrature_points: usize,
    pub seed: u64,
}

/// Ratios over random pairs of sparse data with 8 modes each in
/// `|ξ| <= max(64, 2√M)`, so that separated pairs exist for every `M`.
pub fn bilinear_sweep(lambda: f64, m: f64, samples: usize, quad: TimeQuadrature, seed: u64) -> Result<BilinearSweep> {
    const CHUNK: usize = 64;
    let reach = (64f64.max(2.0 * m.sqrt()) * lambda).round() as usize;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<(f64, f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut a, mut b, mut ch) = (0.0f64, 0.0f64, 0.0f64);
            for _ in 0..count {
                let p1 = random_sparse_field(lambda, reach, 8, &mut rng)?;
                let p2 = random_sparse_field(lambda, reach, 8, &mut rng)?;
                let r1 = bilinear_ratio(&p1, &p2, m, quad)?.ratio;
                let r2 = bilinear_ratio(&p1, &p2, m, quad.doubled())?.ratio;
                a = a.max(r1);
                b = b.max(r2);
                if r1 > 0.0 {
                    ch = ch.max((r2 - r1).abs() / r1);
                }
            }
            Ok((a, b, ch))
        })
        .collect();
    let mut out = BilinearSweep {
        lambda,
        m,
        samples,
        max_ratio: 0.0,
        max_ratio_refined: 0.0,
        max_refinement_change: 0.0,
        quadrature_points: quad.points(),
        seed,
    };
    for p in parts {
        let (a, b, c) = p?;
        out.max_ratio = out.max_ratio.max(a);
        out.max_ratio_refined = out.max_ratio_refined.max(b);
        out.max_refinement_change = out.max_refinement_change.max(c);
    }
    Ok(out)
}

/// Space-time samples `u(t_j)`, `t_j = -T/2 + jT/count`, already multiplied by `η(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: TorusGrid,
    window: f64,
    values: Vec<SpectralField>,
}

/// Minimal window: four widths of the support of `η`.
pub const MIN_WINDOW: f64 = 4.0 * ETA_SUPPORT;

impl SpaceTimeField {
    /// Sample `η(t) F(t)` on `count` uniform times of a window of length `window`.
    pub fn from_fn<F>(grid: TorusGrid, window: f64, count: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> SpectralField + Sync,
    {
        if count < 16 {
            return Err(Error::Resolution(format!("{count} time samples; at least 16 are needed")));
        }
        if !(window >= MIN_WINDOW) {
            return Err(Error::Resolution(format!(
                "window {window} is shorter than {MIN_WINDOW} (four η-widths)"
            )));
        }
        let dt = window / count as f64;
        let values: Vec<SpectralField> = (0..count)
            .into_par_iter()
            .map(|j| {
                let t = -0.5 * window + j as f64 * dt;
                let v = f(t);
                v.scale(eta(t))
            })
            .collect();
        if values.iter().any(|v| v.period() != grid.period() || v.mode_bound() != grid.mode_bound()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, window, values })
    }

    /// `η(t) S_λ(t) φ`.
    pub fn free(phi: &SpectralField, window: f64, count: usize) -> Result<Self> {
        Self::from_fn(*phi.grid(), window, count, |t| free_propagator(phi, t))
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.window / self.values.len() as f64;
        (0..self.values.len()).map(|j| -0.5 * self.window + j as f64 * dt).collect()
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    /// `‖u‖_{L²_{xt}}` by the trapezoid rule in time.
    pub fn l2_norm(&self) -> f64 {
        let dt = self.window / self.values.len() as f64;
        (self.values.iter().map(|v| v.l2_norm().powi(2)).sum::<f64>() * dt).sqrt()
    }

    /// For each mode, the time transform of the modulated samples
    /// `e^{-i(2πξ)³t} û(t, ξ)`, as `(ξ, [(σ_m, G_m)])` with `τ = (2πξ)³ + σ`.
    fn modulated_spectra(&self) -> Vec<(f64, Vec<(f64, Complex64)>)> {
        let count = self.values.len();
        let dt = self.window / count as f64;
        let times = self.times();
        let fft = crate::lattice::transform::plan_forward(count);
        self.grid
            .modes()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|n| {
                let xi = self.grid.frequency(n);
                let mut buf: Vec<Complex64> = self
                    .values
                    .iter()
                    .zip(&times)
                    .map(|(v, &t)| v.coeff(n) * dispersion_phase(xi, t).conj())
                    .collect();
                fft.process(&mut buf);
                let t0 = times[0];
                let spec = (0..count)
                    .map(|m| {
                        let k = if m < count.div_ceil(2) { m as i64 } else { m as i64 - count as i64 };
                        let sigma = 2.0 * PI * k as f64 / self.window;
                        // Account for the time origin t₀ ≠ 0.
                        (sigma, buf[m] * dt * Complex64::from_polar(1.0, -sigma * t0))
                    })
                    .collect();
                (xi, spec)
            })
            .collect()
    }

    /// Discrete `‖u‖_{X_{s,b}} = ((1/λ) Σ_ξ ⟨ξ⟩^{2s} ∫ ⟨τ - (2πξ)³⟩^{2b} |ũ(τ,ξ)|² dτ/2π)^{1/2}`.
    pub fn bourgain_norm(&self, s: f64, b: f64) -> f64 {
        let lam = self.grid.period();
        let total: f64 = self
            .modulated_spectra()
            .iter()
            .map(|(xi, spec)| {
                let inner: f64 = spec.iter().map(|(sig, g)| japanese(*sig).powf(2.0 * b) * g.norm_sqr()).sum();
                japanese(*xi).powf(2.0 * s) * inner / self.window
            })
            .sum();
        (total / lam).sqrt()
    }

    /// `‖u‖_{Y^s} = ‖u‖_{X_{s,1/2}} + ((1/λ) Σ_ξ ⟨ξ⟩^{2s} (∫ |ũ(τ,ξ)| dτ/2π)²)^{1/2}`.
    pub fn y_norm(&self, s: f64) -> f64 {
        let lam = self.grid.period();
        let l1: f64 = self
            .modulated_spectra()
            .iter()
            .map(|(xi, spec)| {
                let inner: f64 = spec.iter().map(|(_, g)| g.norm()).sum::<f64>() / self.window;
                japanese(*xi).powf(2.0 * s) * inner * inner
            })
            .sum();
        self.bourgain_norm(s, 0.5) + (l1 / lam).sqrt()
    }
}

/// `‖η S_λ φ‖_{L⁴_{xt}} / ‖η S_λ φ‖_{X_{0,b}}`; the `L⁴` norm is the alias-free
/// `‖η² I_0(S_λφ, S_λφ)‖_{L²_{xt}}^{1/2}`.
pub fn strichartz_l4_ratio(phi: &SpectralField, b: f64, window: f64, count: usize) -> Result<f64> {
    let l4 = bilinear_l2_squared(phi, phi, 0.0, TimeQuadrature::default())?.max(0.0).powf(0.25);
    let x = SpaceTimeField::free(phi, window, count)?.bourgain_norm(0.0, b);
    if x == 0.0 {
        return Err(Error::UndefinedRatio("zero datum".into()));
    }
    Ok(l4 / x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzSweep {
    pub lambda: f64,
    pub b: f64,
    pub samples: usize,
    pub max_ratio: f64,
    pub window: f64,
    pub time_samples: usize,
    pub seed: u64,
}

/// `L⁴_{xt} / X_{0,b}` ratios of `η S_λ φ` over random data with 6 modes in `|ξ| <= 16`.
pub fn strichartz_sweep(lambda: f64, b: f64, samples: usize, seed: u64) -> Result<StrichartzSweep> {
    const WINDOW: f64 = MIN_WINDOW;
    const COUNT: usize = 256;
    let reach = (16.0 * lambda).round() as usize;
    let ratios: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64 + 1);
            let phi = random_sparse_field(lambda, reach, 6, &mut rng)?;
            strichartz_l4_ratio(&phi, b, WINDOW, COUNT)
        })
        .collect();
    let mut max_ratio = 0.0f64;
    for r in ratios {
        max_ratio = max_ratio.max(r?);
    }
    Ok(StrichartzSweep {
        lambda,
        b,
        samples,
        max_ratio,
        window: WINDOW,
        time_samples: COUNT,
        seed,
    })
}
