//! Double mean value ratio for `f(ξ) = m(ξ)² ξ³`:
//! `|f(ξ+η+μ) - f(ξ+η) - f(ξ+μ) + f(ξ)| / (|f''(ξ)| |η| |μ|)`.
//!
//! The double difference equals `∫₀^η ∫₀^μ f''(ξ+a+b) db da`. It is evaluated
//! as a one-dimensional integral of `f''` against the trapezoidal density of
//! `a + b`, with Gauss-Legendre panels split at every kink, which avoids the
//! cancellation of the four-point formula when `η, μ ≪ ξ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::symbol::{cubic_symbol, cubic_symbol_second_derivative, MultiplierParams};
use crate::error::{Error, Result};

const GAUSS_ORDER: usize = 12;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Density of `a + b` with `a` uniform over the signed interval `[0, η]` and
/// `b` over `[0, μ]`, unnormalised (lengths, not probabilities).
fn sum_density(c: f64, eta: f64, mu: f64) -> f64 {
    // Length of {a ∈ [0,|η|] : c - s₁a ∈ s₂[0,|μ|]}.
    let (ea, ma) = (eta.abs(), mu.abs());
    let (s1, s2) = (eta.signum(), mu.signum());
    // b' = s₂ (c - s₁ a) ∈ [0, |μ|]  ⇔  s₁ a ∈ [c - s₂|μ|, c] (ordered).
    let (lo, hi) = {
        let e1 = c - s2 * ma;
        let e2 = c;
        let (l, h) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        if s1 >= 0.0 {
            (l, h)
        } else {
            (-h, -l)
        }
    };
    (hi.min(ea) - lo.max(0.0)).max(0.0)
}

/// `f(ξ+η+μ) - f(ξ+η) - f(ξ+μ) + f(ξ)` by quadrature of `f''`.
pub fn double_difference(xi: f64, eta: f64, mu: f64, p: &MultiplierParams) -> f64 {
    if eta == 0.0 || mu == 0.0 {
        return 0.0;
    }
    let sign = eta.signum() * mu.signum();
    let mut breaks = vec![0.0, eta, mu, eta + mu];
    for b in [p.n, 2.0 * p.n, -p.n, -2.0 * p.n, 0.0] {
        breaks.push(b - xi);
    }
    let lo = 0f64.min(eta).min(mu).min(eta + mu);
    let hi = 0f64.max(eta).max(mu).max(eta + mu);
    breaks.retain(|b| *b >= lo && *b <= hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let rule = gauss_legendre(GAUSS_ORDER);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(x, wt) in &rule {
            let c = mid + half * x;
            total += wt * half * cubic_symbol_second_derivative(xi + c, p) * sum_density(c, eta, mu);
        }
    }
    sign * total
}

/// Four-point double difference evaluated directly (cancellation-prone).
pub fn double_difference_direct(xi: f64, eta: f64, mu: f64, p: &MultiplierParams) -> f64 {
    let f = |x: f64| cubic_symbol(x, p);
    f(xi + eta + mu) - f(xi + eta) - f(xi + mu) + f(xi)
}

/// The double mean value ratio. Requires `|η|, |μ| <= |ξ| / cmp_large`.
pub fn dmvt_ratio(xi: f64, eta: f64, mu: f64, p: &MultiplierParams) -> Result<f64> {
    let bound = xi.abs() / p.cmp_large;
    if eta.abs() > bound || mu.abs() > bound {
        return Err(Error::Precondition(format!(
            "|η|, |μ| must not exceed |ξ|/{} (ξ={xi}, η={eta}, μ={mu})",
            p.cmp_large
        )));
    }
    let lhs = double_difference(xi, eta, mu, p).abs();
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let denom = cubic_symbol_second_derivative(xi, p).abs() * eta.abs() * mu.abs();
    if denom == 0.0 {
        return Err(Error::UndefinedRatio(format!("f''({xi}) = 0")));
    }
    Ok(lhs / denom)
}

/// Largest ratio over a random sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmvtSweep {
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    pub samples: usize,
    pub checked: usize,
    /// Points where `f''(ξ) = 0` (or underflows) while the double difference does not.
    pub undefined: usize,
    pub max_ratio: f64,
    pub argmax: [f64; 3],
    pub seed: u64,
}

/// Sample `ξ` log-uniformly in `[N/4, 16N]` with random sign and `η, μ`
/// uniformly in `±|ξ|/cmp_large · u`, `u` log-uniform in `[1e-3, 1]`.
pub fn dmvt_sweep(p: &MultiplierParams, samples: usize, seed: u64) -> DmvtSweep {
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(usize, usize, f64, [f64; 3])> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut checked, mut undefined, mut best, mut arg) = (0, 0, 0.0, [0.0; 3]);
            for _ in 0..count {
                let xi = p.n * 2f64.powf(rng.gen_range(-2.0..4.0)) * if rng.gen() { 1.0 } else { -1.0 };
                let scale = xi.abs() / p.cmp_large;
                let draw = |rng: &mut ChaCha8Rng| {
                    scale * 10f64.powf(rng.gen_range(-3.0..0.0)) * if rng.gen() { 1.0 } else { -1.0 }
                };
                let eta = draw(&mut rng);
                let mu = draw(&mut rng);
                match dmvt_ratio(xi, eta, mu, p) {
                    Ok(r) => {
                        checked += 1;
                        if r > best {
                            best = r;
                            arg = [xi, eta, mu];
                        }
                    }
                    Err(_) => undefined += 1,
                }
            }
            (checked, undefined, best, arg)
        })
        .collect();
    let mut out = DmvtSweep {
        n: p.n,
        s: p.s,
        samples,
        checked: 0,
        undefined: 0,
        max_ratio: 0.0,
        argmax: [0.0; 3],
        seed,
    };
    for (c, u, b, a) in parts {
        out.checked += c;
        out.undefined += u;
        if b > out.max_ratio {
            out.max_ratio = b;
            out.argmax = a;
        }
    }
    out
}
