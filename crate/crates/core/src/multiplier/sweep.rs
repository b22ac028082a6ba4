//! Sampling sweeps that estimate the constants in the multiplier bounds.
//!
//! Each lemma compares a left-hand side `L(t)` with a right-hand side `R(t)`
//! on the tuples that satisfy its side conditions, and records
//! `max L/R`. Tuples with `R = 0` are skipped when `L = 0` and counted as
//! violations otherwise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::resonance::{classify, m_2k2, rearrange, InnerMultiplier};
use super::symbol::{m_value, MultiplierParams};
use crate::error::{Error, Result};

/// Relative size below which a cancelling sum of symbol values counts as zero.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Lemma {
    /// `|M_{k+2}| ≲ |α_{k+2}|` on `Ω`.
    #[serde(rename = "nonres")]
    Nonres,
    /// `|M_{k+2}| ≲ m(ξ₁*)² |ξ₁*| |ξ₃*|²` off `Ω`.
    #[serde(rename = "mk2_1")]
    Mk2One,
    /// `|M_{k+2}| ≲ |ξ₃*| |ξ₄*| |ξ₅*|` off `Ω` when `|ξ₁*| ∼ |ξ₂*| ≳ N ≫ |ξ₃*| ∼ |ξ₄*|`.
    #[serde(rename = "mk2_2")]
    Mk2Two,
    /// `|M_{k+2}| ≲ m(ξ₁*)² |ξ₁*|² |ξ₅*|` off `Ω` when `|ξ₄*| ≫ |ξ₅*|`.
    #[serde(rename = "mk2_3")]
    Mk2Three,
    /// `|M̄_{2k+2}| ≲ |ξ₁*|` on `Γ_{2k+2}`.
    #[serde(rename = "m2k2_1")]
    M2k2One,
    /// `|M̄_{2k+2}| ≲ |ξ₃*|` when `|ξ₁*| ∼ |ξ₂*| ≳ N ≫ |ξ₃*| ∼ |ξ₄*|`.
    #[serde(rename = "m2k2_2")]
    M2k2Two,
}

impl Lemma {
    pub const ALL: [Lemma; 6] = [
        Lemma::Nonres,
        Lemma::Mk2One,
        Lemma::Mk2Two,
        Lemma::Mk2Three,
        Lemma::M2k2One,
        Lemma::M2k2Two,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Lemma::Nonres => "nonres",
            Lemma::Mk2One => "mk2_1",
            Lemma::Mk2Two => "mk2_2",
            Lemma::Mk2Three => "mk2_3",
            Lemma::M2k2One => "m2k2_1",
            Lemma::M2k2Two => "m2k2_2",
        }
    }

    /// Length of the tuples the lemma is stated for.
    pub fn arity(&self, k: u32) -> usize {
        match self {
            Lemma::M2k2One | Lemma::M2k2Two => 2 * k as usize + 2,
            _ => k as usize + 2,
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown lemma '{s}'")))
    }
}

/// Source of tuples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Every tuple with `|n_j| <= bound`.
    Exhaustive { bound: i64 },
    /// `count` draws from the mixed random families.
    Random { count: usize, seed: u64 },
}

/// Lattice and frequency range of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepDomain {
    /// Period `λ` of the sampling lattice `Z/λ`.
    pub lattice_period: f64,
    /// Largest sampled frequency in units of `N`.
    pub frequency_factor: f64,
}

impl Default for SweepDomain {
    /// A period of 256 resolves the `|ξ₁*| ∼ |ξ₂*| ≳ N` regime with `ξ₁ + ξ₂ ≠ 0`
    /// already at `N = 8`; coarser lattices hide it for small `N`.
    fn default() -> Self {
        Self {
            lattice_period: 256.0,
            frequency_factor: 16.0,
        }
    }
}

/// Histogram of `log₁₀(L/R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    /// Ratios equal to zero.
    pub zero: u64,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    const LO: f64 = -8.0;
    const WIDTH: f64 = 0.25;
    const BINS: usize = 48;

    fn new() -> Self {
        Self {
            lo: Self::LO,
            width: Self::WIDTH,
            counts: vec![0; Self::BINS],
            zero: 0,
            below: 0,
            above: 0,
        }
    }

    fn add(&mut self, ratio: f64) {
        if ratio == 0.0 {
            self.zero += 1;
            return;
        }
        let b = ((ratio.log10() - self.lo) / self.width).floor();
        if b < 0.0 {
            self.below += 1;
        } else if b as usize >= self.counts.len() {
            self.above += 1;
        } else {
            self.counts[b as usize] += 1;
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.zero += other.zero;
        self.below += other.below;
        self.above += other.above;
    }
}

/// Outcome of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub lemma: Lemma,
    pub params: MultiplierParams,
    pub domain: SweepDomain,
    pub sampler: Sampler,
    /// Tuples drawn or enumerated.
    pub samples: u64,
    /// Tuples satisfying the side conditions with `R > 0`.
    pub checked: u64,
    /// Tuples with `R = 0` and `L = 0`.
    pub skipped: u64,
    /// Tuples with `R = 0` and `L ≠ 0`.
    pub rhs_zero_lhs_nonzero: u64,
    /// Members of some `Ω_j` with `α = 0` that were moved out of `Ω`.
    pub alpha_zero_reclassified: u64,
    pub max_ratio: f64,
    pub argmax: Vec<i64>,
    pub histogram: Histogram,
    pub seed: Option<u64>,
    /// No tuple satisfied the side conditions.
    pub empty: bool,
}

impl SweepReport {
    /// Largest ratio, or infinity when some tuple had `R = 0 < L`.
    pub fn effective_max(&self) -> f64 {
        if self.rhs_zero_lhs_nonzero > 0 {
            f64::INFINITY
        } else {
            self.max_ratio
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    NotApplicable,
    Compare { lhs: f64, rhs: f64, zero_scale: f64 },
}

struct Partial {
    samples: u64,
    checked: u64,
    skipped: u64,
    violations: u64,
    reclassified: u64,
    max_ratio: f64,
    argmax: Vec<i64>,
    histogram: Histogram,
}

impl Partial {
    fn new() -> Self {
        Self {
            samples: 0,
            checked: 0,
            skipped: 0,
            violations: 0,
            reclassified: 0,
            max_ratio: 0.0,
            argmax: Vec::new(),
            histogram: Histogram::new(),
        }
    }

    fn record(&mut self, t: &[i64], o: Outcome) {
        let Outcome::Compare { lhs, rhs, zero_scale } = o else {
            return;
        };
        let lhs_zero = lhs <= ZERO_TOL * zero_scale;
        if rhs == 0.0 {
            if lhs_zero {
                self.skipped += 1;
            } else {
                if self.violations == 0 {
                    self.argmax = t.to_vec();
                }
                self.violations += 1;
            }
            return;
        }
        self.checked += 1;
        let ratio = if lhs_zero { 0.0 } else { lhs / rhs };
        self.histogram.add(ratio);
        if self.violations == 0 && (self.argmax.is_empty() || ratio > self.max_ratio) {
            self.argmax = t.to_vec();
        }
        self.max_ratio = self.max_ratio.max(ratio);
    }

    fn merge(&mut self, o: Partial) {
        self.samples += o.samples;
        self.checked += o.checked;
        self.skipped += o.skipped;
        self.reclassified += o.reclassified;
        self.histogram.merge(&o.histogram);
        let take = if self.violations == 0 && o.violations > 0 {
            true
        } else if self.violations == 0 {
            o.max_ratio > self.max_ratio || (self.argmax.is_empty() && !o.argmax.is_empty())
        } else {
            false
        };
        if take {
            self.argmax = o.argmax;
        }
        self.violations += o.violations;
        self.max_ratio = self.max_ratio.max(o.max_ratio);
    }
}

fn abs_rearranged(t: &[i64], period: f64) -> Vec<f64> {
    rearrange(t).iter().map(|&n| (n as f64 / period).abs()).collect()
}

fn two_large_condition(a: &[f64], p: &MultiplierParams) -> bool {
    p.comparable(a[0], a[1]) && p.at_least_n(a[1]) && p.much_greater(p.n, a[2]) && p.comparable(a[2], a[3])
}

/// Evaluate one lemma on one tuple. Returns the number of `α = 0`
/// reclassifications encountered alongside the outcome.
fn evaluate(lemma: Lemma, t: &[i64], period: f64, p: &MultiplierParams) -> Result<(Outcome, bool)> {
    match lemma {
        Lemma::Nonres | Lemma::Mk2One | Lemma::Mk2Two | Lemma::Mk2Three => {
            let c = classify(t, period, p)?;
            let terms: Vec<f64> = t
                .iter()
                .map(|&n| {
                    let x = n as f64 / period;
                    m_value(x, p).powi(2) * x * x * x
                })
                .collect();
            let lhs = neumaier(&terms).abs();
            let scale: f64 = terms.iter().map(|v| v.abs()).sum();
            let x = &c.rearranged;
            let a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            let applicable = match lemma {
                Lemma::Nonres => c.in_omega,
                Lemma::Mk2One => !c.in_omega,
                Lemma::Mk2Two => !c.in_omega && two_large_condition(&a, p),
                _ => !c.in_omega && p.much_greater(a[3], a[4]),
            };
            if !applicable {
                return Ok((Outcome::NotApplicable, c.alpha_zero_reclassified));
            }
            let m1 = m_value(x[0], p).powi(2);
            let rhs = match lemma {
                Lemma::Nonres => c.alpha.abs(),
                Lemma::Mk2One => m1 * a[0] * a[2] * a[2],
                Lemma::Mk2Two => a[2] * a[3] * a[4],
                _ => m1 * a[0] * a[0] * a[4],
            };
            Ok((
                Outcome::Compare {
                    lhs,
                    rhs,
                    zero_scale: scale,
                },
                c.alpha_zero_reclassified,
            ))
        }
        Lemma::M2k2One | Lemma::M2k2Two => {
            let a = abs_rearranged(t, period);
            let applicable = lemma == Lemma::M2k2One || two_large_condition(&a, p);
            if !applicable {
                return Ok((Outcome::NotApplicable, false));
            }
            let lhs = m_2k2(t, period, p, InnerMultiplier::SigmaTilde)?.norm();
            let rhs = if lemma == Lemma::M2k2One { a[0] } else { a[2] };
            Ok((
                Outcome::Compare {
                    lhs,
                    rhs,
                    zero_scale: 0.0,
                },
                false,
            ))
        }
    }
}

/// Compensated summation.
fn neumaier(v: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Draw a tuple of length `n` on `Γ_n` from one of four families:
/// uniform; two large entries plus small ones; four large plus small;
/// pairwise nearly cancelling entries.
pub fn draw_tuple(rng: &mut ChaCha8Rng, n: usize, nl: f64, bound: i64, p: &MultiplierParams) -> Vec<i64> {
    let mut t = vec![0i64; n];
    let small_bound = |rng: &mut ChaCha8Rng| -> i64 {
        let s = nl * 10f64.powf(rng.gen_range(-2.5..-1.0));
        (s.round() as i64).max(1)
    };
    let large = |rng: &mut ChaCha8Rng, lo: f64| -> i64 {
        let lo = lo.max(1.0);
        let hi = (bound as f64).max(lo * 1.0001);
        let v = (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp().round() as i64;
        if rng.gen() {
            v
        } else {
            -v
        }
    };
    match rng.gen_range(0..4) {
        0 => {
            for v in t.iter_mut().take(n - 1) {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        1 => {
            let sb = small_bound(rng);
            for v in t.iter_mut().skip(2) {
                *v = rng.gen_range(-sb..=sb);
            }
            t[0] = large(rng, p.cmp_gtrsim_n * nl);
        }
        2 => {
            let sb = small_bound(rng);
            for v in t.iter_mut().skip(4) {
                *v = rng.gen_range(-sb..=sb);
            }
            let lo = p.cmp_gtrsim_n * nl * 0.25;
            t[0] = large(rng, lo);
            t[1] = large(rng, lo);
            t[2] = large(rng, lo);
            t.swap(3, n - 1);
        }
        _ => {
            let sb = small_bound(rng);
            let mut i = 0;
            while i + 1 < n - 1 {
                let a = large(rng, 1.0);
                t[i] = a;
                t[i + 1] = -a + rng.gen_range(-sb..=sb);
                i += 2;
            }
        }
    }
    t[n - 1] = 0;
    let s: i64 = t.iter().sum();
    t[n - 1] = -s;
    // Shuffle so that positional structure does not leak into the tests.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        t.swap(i, j);
    }
    t
}

const CHUNK: usize = 2048;

/// Run a sweep for one lemma.
pub fn bound_sweep(lemma: Lemma, p: &MultiplierParams, sampler: Sampler, domain: SweepDomain) -> Result<SweepReport> {
    let mut reports = multi_sweep(&[lemma], p, sampler, domain)?;
    Ok(reports.remove(0))
}

/// Run several lemmas of the same arity on a shared tuple stream.
pub fn multi_sweep(
    lemmas: &[Lemma],
    p: &MultiplierParams,
    sampler: Sampler,
    domain: SweepDomain,
) -> Result<Vec<SweepReport>> {
    let p = p.validated()?;
    let n = lemmas
        .first()
        .ok_or_else(|| Error::InvalidParameter("no lemma requested".into()))?
        .arity(p.k);
    if lemmas.iter().any(|l| l.arity(p.k) != n) {
        return Err(Error::InvalidParameter("lemmas of different arity".into()));
    }
    let period = domain.lattice_period;
    if !(period > 0.0 && domain.frequency_factor > 0.0) {
        return Err(Error::InvalidParameter("sweep domain must be positive".into()));
    }
    let nl = p.n * period;
    let bound = (domain.frequency_factor * nl).round() as i64;

    let run_chunk = |tuples: &mut dyn Iterator<Item = Vec<i64>>| -> Result<Vec<Partial>> {
        let mut parts: Vec<Partial> = lemmas.iter().map(|_| Partial::new()).collect();
        for t in tuples {
            for (l, part) in lemmas.iter().zip(parts.iter_mut()) {
                part.samples += 1;
                let (o, reclass) = evaluate(*l, &t, period, &p)?;
                if reclass {
                    part.reclassified += 1;
                }
                part.record(&t, o);
            }
        }
        Ok(parts)
    };

    let chunks: Vec<Vec<Partial>> = match sampler {
        Sampler::Random { count, seed } => (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64 + 1);
                let len = CHUNK.min(count - c * CHUNK);
                let mut it = (0..len).map(|_| draw_tuple(&mut rng, n, nl, bound, &p));
                run_chunk(&mut it)
            })
            .collect::<Result<_>>()?,
        Sampler::Exhaustive { bound: kb } => {
            let width = (2 * kb + 1) as f64;
            let terms = width.powi(n as i32 - 1);
            if terms > crate::lattice::hyperplane::DENSE_TERM_LIMIT {
                return Err(Error::TooLarge {
                    terms,
                    limit: crate::lattice::hyperplane::DENSE_TERM_LIMIT,
                });
            }
            (-kb..=kb)
                .into_par_iter()
                .map(|first| {
                    let mut all = Vec::new();
                    let mut t = vec![0i64; n];
                    t[0] = first;
                    enumerate(&mut t, 1, first, kb, &mut all);
                    run_chunk(&mut all.into_iter())
                })
                .collect::<Result<_>>()?
        }
    };

    let mut merged: Vec<Partial> = lemmas.iter().map(|_| Partial::new()).collect();
    for chunk in chunks {
        for (m, c) in merged.iter_mut().zip(chunk) {
            m.merge(c);
        }
    }
    let seed = match sampler {
        Sampler::Random { seed, .. } => Some(seed),
        Sampler::Exhaustive { .. } => None,
    };
    Ok(lemmas
        .iter()
        .zip(merged)
        .map(|(l, m)| SweepReport {
            lemma: *l,
            params: p,
            domain,
            sampler,
            samples: m.samples,
            checked: m.checked,
            skipped: m.skipped,
            rhs_zero_lhs_nonzero: m.violations,
            alpha_zero_reclassified: m.reclassified,
            max_ratio: m.max_ratio,
            argmax: m.argmax,
            histogram: m.histogram,
            seed,
            empty: m.checked == 0 && m.violations == 0,
        })
        .collect())
}

fn enumerate(t: &mut Vec<i64>, depth: usize, sum: i64, kb: i64, out: &mut Vec<Vec<i64>>) {
    let n = t.len();
    if depth == n - 1 {
        if sum.abs() <= kb {
            t[n - 1] = -sum;
            out.push(t.clone());
        }
        return;
    }
    let rest = (n - 1 - depth) as i64 * kb;
    for v in -kb..=kb {
        if (sum + v).abs() > rest {
            continue;
        }
        t[depth] = v;
        enumerate(t, depth + 1, sum + v, kb, out);
    }
}
