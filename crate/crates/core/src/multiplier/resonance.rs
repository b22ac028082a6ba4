//! The multipliers produced by differentiating `E(Iu)` along the flow and the
//! non-resonance decomposition `Ω = Ω₁ ∪ Ω₂ ∪ Ω₃ ∪ Ω₄` of `Γ_{k+2}`.
//!
//! Tuples are integer mode indices on the `λ`-lattice; `ξ_j = n_j / λ`.

use num_complex::Complex64;
use serde::Serialize;

use super::symbol::{cubic_symbol, m_value, MultiplierParams};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_sum(modes: &[i64]) -> Result<()> {
    let sum: i64 = modes.iter().sum();
    if sum != 0 {
        return Err(Error::NotOnHyperplane { sum });
    }
    Ok(())
}

fn check_arity(modes: &[i64], expected: usize) -> Result<()> {
    if modes.len() != expected {
        return Err(Error::Arity {
            expected,
            found: modes.len(),
        });
    }
    Ok(())
}

/// `Σ n_j³` in exact integer arithmetic.
pub fn alpha_integer(modes: &[i64]) -> Result<i128> {
    check_sum(modes)?;
    modes.iter().try_fold(0i128, |acc, &n| {
        let n = n as i128;
        n.checked_mul(n)
            .and_then(|v| v.checked_mul(n))
            .and_then(|c| acc.checked_add(c))
            .ok_or(Error::Overflow)
    })
}

/// `α = ξ₁³ + ⋯ + ξ_n³`, summed exactly on the integers and scaled by `λ^{-3}`.
pub fn alpha(modes: &[i64], period: f64) -> Result<f64> {
    Ok(alpha_integer(modes)? as f64 / period.powi(3))
}

/// `M_{k+2} = i Σ m(ξ_j)² ξ_j³`.
pub fn m_k2(modes: &[i64], period: f64, p: &MultiplierParams) -> Result<Complex64> {
    check_arity(modes, p.arity())?;
    check_sum(modes)?;
    Ok(I * cubic_sum(modes, period, p))
}

pub(crate) fn cubic_sum(modes: &[i64], period: f64, p: &MultiplierParams) -> f64 {
    modes.iter().map(|&n| cubic_symbol(n as f64 / period, p)).sum()
}

/// `σ_{k+2} = m(ξ₁) ⋯ m(ξ_{k+2}) / (k+2)`.
pub fn sigma_k2(modes: &[i64], period: f64, p: &MultiplierParams) -> Result<f64> {
    check_arity(modes, p.arity())?;
    check_sum(modes)?;
    Ok(m_product(modes, period, p) / p.arity() as f64)
}

pub(crate) fn m_product(modes: &[i64], period: f64, p: &MultiplierParams) -> f64 {
    modes.iter().map(|&n| m_value(n as f64 / period, p)).product()
}

/// Classification of a point of `Γ_{k+2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaMembership {
    pub in_omega1: bool,
    pub in_omega2: bool,
    pub in_omega3: bool,
    pub in_omega4: bool,
    /// Union of the four flags.
    pub in_omega: bool,
    /// A member of some `Ω_j` with `α = 0`, removed from `Ω`.
    pub alpha_zero_reclassified: bool,
    pub alpha: f64,
    /// Decreasing rearrangement `ξ₁*, ξ₂*, …` used for the tests.
    pub rearranged: Vec<f64>,
}

/// A tuple entry with its symbol values cached.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Entry {
    pub n: i64,
    pub x: f64,
    /// `m(ξ)² ξ³`.
    pub f: f64,
}

impl Entry {
    #[inline]
    pub fn new(n: i64, period: f64, p: &MultiplierParams) -> Self {
        let x = n as f64 / period;
        Self {
            n,
            x,
            f: cubic_symbol(x, p),
        }
    }
}

/// Decreasing rearrangement by `|ξ|` that is the same for a tuple, any
/// permutation of it, and its negation. Ties are broken by decreasing value,
/// or by increasing value when that makes the negated sequence
/// lexicographically larger; every membership test is invariant under global
/// negation, so either choice is a valid rearrangement.
pub(crate) fn rearrange_entries(e: &mut [Entry]) {
    let mut up = [Entry::default(); 16];
    let len = e.len();
    e.sort_unstable_by(|a, b| b.n.abs().cmp(&a.n.abs()).then(b.n.cmp(&a.n)));
    up[..len].copy_from_slice(e);
    up[..len].sort_unstable_by(|a, b| b.n.abs().cmp(&a.n.abs()).then(a.n.cmp(&b.n)));
    for i in 0..len {
        let (a, b) = (e[i].n, -up[i].n);
        if a != b {
            if b > a {
                e.copy_from_slice(&up[..len]);
            }
            return;
        }
    }
}

/// Integer rearrangement used by [`classify`].
pub fn rearrange(modes: &[i64]) -> Vec<i64> {
    let mut e: Vec<Entry> = modes
        .iter()
        .map(|&n| Entry {
            n,
            x: n as f64,
            f: 0.0,
        })
        .collect();
    rearrange_entries(&mut e);
    e.iter().map(|v| v.n).collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Flags {
    pub o: [bool; 4],
}

/// Membership tests on an already rearranged tuple of length `k + 2`.
pub(crate) fn omega_flags(x: &[Entry], p: &MultiplierParams) -> Flags {
    let v = |j: usize| x.get(j).map_or(0.0, |e| e.x);
    let fv = |j: usize| x.get(j).map_or(0.0, |e| e.f);
    let a = |j: usize| v(j).abs();

    let o1 = p.much_greater(a(2), a(3));

    let o2 = p.comparable(a(0), a(1))
        && p.at_least_n(a(1))
        && p.much_greater(p.n, a(2))
        && p.comparable(a(2), a(3))
        && {
            let tail: f64 = x[2..].iter().map(|e| e.x * e.x * e.x).sum();
            p.much_greater((v(0).powi(3) + v(1).powi(3)).abs(), tail.abs())
        };

    let o3 = p.much_greater(a(0), a(2)) && p.much_greater((v(0) + v(1)).abs() * a(0), a(2) * a(2));

    let o4 = p.much_greater(a(3), a(4))
        && p.much_greater(
            (v(0) + v(1)).abs() * (v(0) + v(2)).abs() * (v(0) + v(3)).abs(),
            a(4) * a(0) * a(0),
        )
        && p.much_greater(
            (fv(0) + fv(1) + fv(2) + fv(3)).abs(),
            (fv(4) + fv(5)).abs(),
        );
    Flags { o: [o1, o2, o3, o4] }
}

/// Membership of a point of `Γ_{k+2}` in `Ω₁, …, Ω₄`.
pub fn classify(modes: &[i64], period: f64, p: &MultiplierParams) -> Result<OmegaMembership> {
    check_arity(modes, p.arity())?;
    let alpha_val = alpha(modes, period)?;
    let mut e: Vec<Entry> = modes.iter().map(|&n| Entry::new(n, period, p)).collect();
    rearrange_entries(&mut e);
    let f = omega_flags(&e, p);
    let any = f.o.iter().any(|&b| b);
    let reclassified = any && alpha_val == 0.0;
    Ok(OmegaMembership {
        in_omega1: f.o[0],
        in_omega2: f.o[1],
        in_omega3: f.o[2],
        in_omega4: f.o[3],
        in_omega: any && !reclassified,
        alpha_zero_reclassified: reclassified,
        alpha: alpha_val,
        rearranged: e.iter().map(|v| v.x).collect(),
    })
}

/// `σ̃` on cached entries (any order); `alpha_int = Σ n³`.
pub(crate) fn sigma_tilde_entries(e: &mut [Entry], alpha_int: i128, period: f64, p: &MultiplierParams) -> f64 {
    if alpha_int == 0 {
        return 0.0;
    }
    rearrange_entries(e);
    if !omega_flags(e, p).o.iter().any(|&b| b) {
        return 0.0;
    }
    let num: f64 = e.iter().map(|v| v.f).sum();
    // σ̃ = -i · num / α; the imaginary unit is applied by the caller.
    -num / (alpha_int as f64 / period.powi(3))
}

/// `σ̃_{k+2} = -χ_Ω M_{k+2} / α_{k+2}` (zero off `Ω`).
pub fn sigma_tilde(modes: &[i64], period: f64, p: &MultiplierParams) -> Result<Complex64> {
    check_arity(modes, p.arity())?;
    let a = alpha_integer(modes)?;
    let mut e: Vec<Entry> = modes.iter().map(|&n| Entry::new(n, period, p)).collect();
    Ok(I * sigma_tilde_entries(&mut e, a, period, p))
}

/// Inner multiplier used in the block symmetrisation of `M_{2k+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMultiplier {
    /// `σ_{k+2}`: the multiplier arising in `d/dt E(Iu)`.
    Sigma,
    /// `σ̃_{k+2}`: the multiplier of the second modified energy.
    SigmaTilde,
}

/// Subsets of `{0, …, n-1}` of size `r`, as bit masks, in increasing order.
pub fn block_choices(n: usize, r: usize) -> Vec<u32> {
    (0u32..(1 << n)).filter(|m| m.count_ones() as usize == r).collect()
}

/// `i(k+2) [inner(ξ_A, S_A) · S_A]_sym` on `Γ_{2k+2}`, where `A` ranges over the
/// `C(2k+2, k+1)` choices of the first block and `S_A` is the sum of the
/// complementary block.
pub fn m_2k2(
    modes: &[i64],
    period: f64,
    p: &MultiplierParams,
    inner: InnerMultiplier,
) -> Result<Complex64> {
    let k = p.k as usize;
    check_arity(modes, 2 * k + 2)?;
    check_sum(modes)?;
    let entries: Vec<Entry> = modes.iter().map(|&n| Entry::new(n, period, p)).collect();
    let ms: Vec<f64> = modes.iter().map(|&n| m_value(n as f64 / period, p)).collect();
    let cubes: Vec<i128> = modes.iter().map(|&n| (n as i128).pow(3)).collect();
    let choices = block_choices(2 * k + 2, k + 1);
    let mut block = [Entry::default(); 6];
    let mut total = 0.0;
    for &mask in &choices {
        let mut j = 0;
        let mut comp = 0i64;
        let mut mprod = 1.0;
        let mut a: i128 = 0;
        for (i, e) in entries.iter().enumerate() {
            if mask & (1 << i) != 0 {
                block[j] = *e;
                mprod *= ms[i];
                a += cubes[i];
                j += 1;
            } else {
                comp += e.n;
            }
        }
        let c = comp as i128;
        a = a.checked_add(c.checked_mul(c * c).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
        block[k + 1] = Entry::new(comp, period, p);
        let s = comp as f64 / period;
        let value = match inner {
            InnerMultiplier::Sigma => mprod * m_value(s, p) / (k + 2) as f64,
            InnerMultiplier::SigmaTilde => sigma_tilde_entries(&mut block[..k + 2], a, period, p),
        };
        total += value * s;
    }
    let avg = (k + 2) as f64 * total / choices.len() as f64;
    // Σ: i(k+2)[σ S]; Σ̃: i(k+2)[-i B S] = (k+2)[B S].
    Ok(match inner {
        InnerMultiplier::Sigma => I * avg,
        InnerMultiplier::SigmaTilde => Complex64::new(avg, 0.0),
    })
}
