//! Sums over the hyperplane `Γ_n = {ξ₁ + ⋯ + ξ_n = 0}` of the `λ`-lattice:
//!
//! `Λ_n[m; f₁,…,f_n] = λ^{-(n-1)} Σ_{n₁+⋯+n_n=0} m(n₁,…,n_n) ∏ f̂_j(n_j/λ)`.
//!
//! With `m ≡ 1` this is `∫_0^λ f₁⋯f_n dx`. Multipliers receive integer mode
//! indices; the frequency of index `n` is `n/λ`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::SpectralField;
use super::transform::integrate_product;
use crate::error::{Error, Result};

pub const MIN_ARITY: usize = 2;
pub const MAX_ARITY: usize = 10;

/// Default ceiling on the number of lattice points a dense sum may visit.
pub const DENSE_TERM_LIMIT: f64 = 1e7;

/// A point of `Γ_n`, stored as integer mode indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HyperplanePoint {
    modes: Vec<i64>,
}

impl HyperplanePoint {
    pub fn new(modes: Vec<i64>) -> Result<Self> {
        let sum: i64 = modes.iter().sum();
        if sum != 0 {
            return Err(Error::NotOnHyperplane { sum });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn arity(&self) -> usize {
        self.modes.len()
    }

    pub fn frequencies(&self, period: f64) -> Vec<f64> {
        self.modes.iter().map(|&n| n as f64 / period).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOptions {
    /// Largest admissible number of lattice points.
    pub term_limit: f64,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            term_limit: DENSE_TERM_LIMIT,
        }
    }
}

impl SumOptions {
    pub fn unlimited() -> Self {
        Self {
            term_limit: f64::INFINITY,
        }
    }
}

fn check_fields(fields: &[&SpectralField]) -> Result<f64> {
    let n = fields.len();
    if !(MIN_ARITY..=MAX_ARITY).contains(&n) {
        return Err(Error::Arity {
            expected: MAX_ARITY.min(n.max(MIN_ARITY)),
            found: n,
        });
    }
    let period = fields[0].period();
    if fields.iter().any(|f| f.period() != period) {
        return Err(Error::GridMismatch);
    }
    Ok(period)
}

fn support(f: &SpectralField) -> Vec<(i64, Complex64)> {
    f.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect()
}

/// Dense evaluation of `Λ_n[m; fields]` over the full lattice.
///
/// The first `n - 1` indices run over the nonzero coefficients of their
/// fields and the last is fixed by the hyperplane constraint. Work is split
/// across the first index and reduced in index order, so the result does not
/// depend on the thread count.
pub fn dense_functional<M>(m: M, fields: &[&SpectralField], opts: SumOptions) -> Result<Complex64>
where
    M: Fn(&[i64]) -> Complex64 + Sync,
{
    let period = check_fields(fields)?;
    let n = fields.len();
    let terms: f64 = fields[..n - 1]
        .iter()
        .map(|f| (2 * f.mode_bound() + 1) as f64)
        .product();
    if terms > opts.term_limit {
        return Err(Error::TooLarge {
            terms,
            limit: opts.term_limit,
        });
    }
    let supports: Vec<Vec<(i64, Complex64)>> = fields[..n - 1].iter().map(|f| support(f)).collect();
    let last = fields[n - 1];

    let partials: Vec<Complex64> = supports[0]
        .par_iter()
        .map(|&(n0, c0)| {
            let mut idx = vec![0i64; n];
            idx[0] = n0;
            let mut acc = Complex64::new(0.0, 0.0);
            dense_rec(&m, &supports, last, 1, n0, c0, &mut idx, &mut acc);
            acc
        })
        .collect();
    let total: Complex64 = partials.iter().sum();
    Ok(total * period.powi(-(n as i32 - 1)))
}

#[allow(clippy::too_many_arguments)]
fn dense_rec<M>(
    m: &M,
    supports: &[Vec<(i64, Complex64)>],
    last: &SpectralField,
    depth: usize,
    sum: i64,
    prod: Complex64,
    idx: &mut [i64],
    acc: &mut Complex64,
) where
    M: Fn(&[i64]) -> Complex64,
{
    if depth == supports.len() {
        let nl = -sum;
        let cl = last.coeff(nl);
        if cl.norm_sqr() == 0.0 {
            return;
        }
        idx[depth] = nl;
        *acc += m(idx) * prod * cl;
        return;
    }
    let bound = last.mode_bound() as i64;
    let rest_max: i64 = supports[depth + 1..]
        .iter()
        .map(|s| s.last().map_or(0, |x| x.0.abs().max(s[0].0.abs())))
        .sum();
    for &(nj, cj) in &supports[depth] {
        let s = sum + nj;
        if s.abs() > bound + rest_max {
            continue;
        }
        idx[depth] = nj;
        dense_rec(m, supports, last, depth + 1, s, prod * cj, idx, acc);
    }
}

/// One separable term `coeff · ∏_j a_j(ξ_j)` of a tensor-product multiplier.
pub struct TensorTerm<'a> {
    pub coeff: Complex64,
    pub factors: Vec<Box<dyn Fn(f64) -> Complex64 + Sync + 'a>>,
}

/// `Λ_n` for a multiplier given as a sum of tensor products, evaluated as
/// `Σ_r c_r ∫ ∏_j (a_{r,j}(D) f_j) dx` with alias-free physical products.
pub fn tensor_functional(terms: &[TensorTerm<'_>], fields: &[&SpectralField]) -> Result<Complex64> {
    check_fields(fields)?;
    let mut total = Complex64::new(0.0, 0.0);
    for term in terms {
        if term.factors.len() != fields.len() {
            return Err(Error::Arity {
                expected: fields.len(),
                found: term.factors.len(),
            });
        }
        let filtered: Vec<SpectralField> = fields
            .iter()
            .zip(&term.factors)
            .map(|(f, a)| f.apply_symbol(|xi| a(xi), false))
            .collect();
        let refs: Vec<&SpectralField> = filtered.iter().collect();
        total += term.coeff * integrate_product(&refs)?;
    }
    Ok(total)
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Number of distinct orderings of a sorted multiset.
fn multiset_weight(sorted: &[i64], fact: &[f64]) -> f64 {
    let mut w = fact[sorted.len()];
    let mut run = 1;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            w /= fact[run];
            run = 1;
        }
    }
    w
}

/// `Λ_n[m; u, …, u]` for a multiplier symmetric in all its arguments.
///
/// Only nondecreasing index tuples are visited, each weighted by its number
/// of distinct orderings, which cuts the work by roughly `n!`.
pub fn symmetric_functional<M>(m: M, u: &SpectralField, arity: usize, opts: SumOptions) -> Result<Complex64>
where
    M: Fn(&[i64]) -> Complex64 + Sync,
{
    if !(MIN_ARITY..=MAX_ARITY).contains(&arity) {
        return Err(Error::Arity {
            expected: MAX_ARITY.min(arity.max(MIN_ARITY)),
            found: arity,
        });
    }
    let fact = factorials(arity);
    let width = (2 * u.mode_bound() + 1) as f64;
    let terms = width.powi(arity as i32 - 1) / fact[arity - 1];
    if terms > opts.term_limit {
        return Err(Error::TooLarge {
            terms,
            limit: opts.term_limit,
        });
    }
    let sup = support(u);
    let kmax = sup.last().map_or(0, |x| x.0);
    let r = arity - 1;
    let partials: Vec<Complex64> = (0..sup.len())
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0i64; arity];
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pos = vec![0usize; arity];
            idx[0] = sup[i0].0;
            pos[0] = i0;
            sorted_rec(&sup, r, 1, sup[i0].0, sup[i0].1, &mut idx, &mut pos, &mut |idx, prod| {
                let sum: i64 = idx[..r].iter().sum();
                let nl = -sum;
                if nl < idx[r - 1] || nl > kmax {
                    return;
                }
                let cl = u.coeff(nl);
                if cl.norm_sqr() == 0.0 {
                    return;
                }
                idx[r] = nl;
                acc += m(idx) * prod * cl * multiset_weight(idx, &fact);
            }, &|sum, last, remaining| {
                // The remaining free entries plus the determined one lie in [last, kmax].
                let q = remaining as i64 + 1;
                q * last <= -sum && -sum <= q * kmax
            });
            acc
        })
        .collect();
    let total: Complex64 = partials.iter().sum();
    Ok(total * u.period().powi(-(arity as i32 - 1)))
}

/// `Λ_{r+1}[m; u, …, u, w]` for a multiplier symmetric in its first `r`
/// arguments; the last slot carries the distinct field `w`.
pub fn symmetric_with_tail<M>(
    m: M,
    u: &SpectralField,
    r: usize,
    w: &SpectralField,
    opts: SumOptions,
) -> Result<Complex64>
where
    M: Fn(&[i64]) -> Complex64 + Sync,
{
    let arity = r + 1;
    if !(MIN_ARITY..=MAX_ARITY).contains(&arity) {
        return Err(Error::Arity {
            expected: MAX_ARITY.min(arity.max(MIN_ARITY)),
            found: arity,
        });
    }
    if u.period() != w.period() {
        return Err(Error::GridMismatch);
    }
    let fact = factorials(r);
    let width = (2 * u.mode_bound() + 1) as f64;
    let terms = width.powi(r as i32) / fact[r];
    if terms > opts.term_limit {
        return Err(Error::TooLarge {
            terms,
            limit: opts.term_limit,
        });
    }
    let sup = support(u);
    let kmax = sup.last().map_or(0, |x| x.0);
    let tail = w.mode_bound() as i64;
    let partials: Vec<Complex64> = (0..sup.len())
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0i64; arity];
            let mut pos = vec![0usize; arity];
            let mut acc = Complex64::new(0.0, 0.0);
            idx[0] = sup[i0].0;
            pos[0] = i0;
            sorted_rec(&sup, r, 1, sup[i0].0, sup[i0].1, &mut idx, &mut pos, &mut |idx, prod| {
                let sum: i64 = idx[..r].iter().sum();
                let cl = w.coeff(-sum);
                if cl.norm_sqr() == 0.0 {
                    return;
                }
                idx[r] = -sum;
                acc += m(idx) * prod * cl * multiset_weight(&idx[..r], &fact);
            }, &|sum, last, remaining| {
                let q = remaining as i64;
                sum + q * last <= tail && sum + q * kmax >= -tail
            });
            acc
        })
        .collect();
    let total: Complex64 = partials.iter().sum();
    Ok(total * u.period().powi(-(arity as i32 - 1)))
}

/// Enumerate nondecreasing index tuples of length `len` from `sup`, calling
/// `visit` with the product of their coefficients. `feasible(sum, last,
/// remaining)` prunes partial tuples.
#[allow(clippy::too_many_arguments)]
fn sorted_rec<V, P>(
    sup: &[(i64, Complex64)],
    len: usize,
    depth: usize,
    sum: i64,
    prod: Complex64,
    idx: &mut [i64],
    pos: &mut [usize],
    visit: &mut V,
    feasible: &P,
) where
    V: FnMut(&mut [i64], Complex64),
    P: Fn(i64, i64, usize) -> bool,
{
    if !feasible(sum, idx[depth - 1], len - depth) {
        return;
    }
    if depth == len {
        visit(idx, prod);
        return;
    }
    for i in pos[depth - 1]..sup.len() {
        let (nj, cj) = sup[i];
        idx[depth] = nj;
        pos[depth] = i;
        sorted_rec(sup, len, depth + 1, sum + nj, prod * cj, idx, pos, visit, feasible);
    }
}

/// Dispatch to the cheapest available evaluation of `Λ_n[m; u, …, u]`.
pub fn hyperplane_functional<M>(m: M, fields: &[&SpectralField], opts: SumOptions) -> Result<Complex64>
where
    M: Fn(&[i64]) -> Complex64 + Sync,
{
    dense_functional(m, fields, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid::TorusGrid;
    use crate::lattice::transform::lq_norm;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_real(grid: TorusGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half: Vec<Complex64> = (0..=grid.mode_bound())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_half_spectrum(grid, &half).unwrap()
    }

    fn one(_: &[i64]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn pairing_is_parseval() {
        let grid = TorusGrid::minimal(1.6, 8).unwrap();
        let f = random_real(grid, 1);
        let v = dense_functional(one, &[&f, &f], SumOptions::default()).unwrap();
        assert_relative_eq!(v.re, f.l2_norm().powi(2), max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12 * v.re);
    }

    #[test]
    fn quartic_matches_physical_space() {
        let grid = TorusGrid::minimal(2.3, 8).unwrap();
        let f = random_real(grid, 2);
        let v = dense_functional(one, &[&f, &f, &f, &f], SumOptions::default()).unwrap();
        let l4 = lq_norm(&f, 4.0, 64).unwrap().powi(4);
        assert_relative_eq!(v.re, l4, max_relative = 1e-10);
        let s = symmetric_functional(one, &f, 4, SumOptions::default()).unwrap();
        assert_relative_eq!(s.re, l4, max_relative = 1e-10);
    }

    #[test]
    fn zero_field_gives_zero() {
        let grid = TorusGrid::minimal(1.0, 4).unwrap();
        let f = random_real(grid, 3);
        let z = SpectralField::zeros(grid);
        let v = dense_functional(one, &[&f, &z, &f], SumOptions::default()).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn tensor_path_matches_dense() {
        let grid = TorusGrid::minimal(1.5, 6).unwrap();
        let fs: Vec<SpectralField> = (0..5).map(|s| random_real(grid, 10 + s)).collect();
        let refs: Vec<&SpectralField> = fs.iter().collect();
        let lam = 1.5;
        // m = ξ₁² ξ₂ + 3 (cos ξ₃)
        let m = |ns: &[i64]| {
            let x: Vec<f64> = ns.iter().map(|&n| n as f64 / lam).collect();
            Complex64::new(x[0] * x[0] * x[1] + 3.0 * x[2].cos(), 0.0)
        };
        let dense = dense_functional(m, &refs, SumOptions::default()).unwrap();
        let c1 = |_: f64| Complex64::new(1.0, 0.0);
        let terms = vec![
            TensorTerm {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![
                    Box::new(|x: f64| Complex64::new(x * x, 0.0)),
                    Box::new(|x: f64| Complex64::new(x, 0.0)),
                    Box::new(c1),
                    Box::new(c1),
                    Box::new(c1),
                ],
            },
            TensorTerm {
                coeff: Complex64::new(3.0, 0.0),
                factors: vec![
                    Box::new(c1),
                    Box::new(c1),
                    Box::new(|x: f64| Complex64::new(x.cos(), 0.0)),
                    Box::new(c1),
                    Box::new(c1),
                ],
            },
        ];
        let fast = tensor_functional(&terms, &refs).unwrap();
        assert!((fast - dense).norm() < 1e-9 * dense.norm());
    }

    #[test]
    fn symmetric_paths_match_dense() {
        let grid = TorusGrid::minimal(1.2, 5).unwrap();
        let u = random_real(grid, 21);
        let m = |ns: &[i64]| {
            let s: f64 = ns.iter().map(|&n| (n as f64).powi(2)).sum();
            let p: f64 = ns.iter().map(|&n| 1.0 + (n as f64).abs()).product();
            Complex64::new(s.sqrt() / p, 0.0)
        };
        let refs = vec![&u; 5];
        let dense = dense_functional(m, &refs, SumOptions::default()).unwrap();
        let sym = symmetric_functional(m, &u, 5, SumOptions::default()).unwrap();
        assert!((dense - sym).norm() < 1e-12 * dense.norm());

        let w = random_real(TorusGrid::minimal(1.2, 9).unwrap(), 22);
        let mt = |ns: &[i64]| Complex64::new((ns[3] as f64).cos(), 0.0);
        let mt_sym = |ns: &[i64]| Complex64::new((ns[3] as f64).cos(), 0.0);
        let dense_t = dense_functional(mt, &[&u, &u, &u, &w], SumOptions::default()).unwrap();
        let tail = symmetric_with_tail(mt_sym, &u, 3, &w, SumOptions::default()).unwrap();
        assert!((dense_t - tail).norm() < 1e-12 * dense_t.norm());
    }

    #[test]
    fn limits_are_enforced() {
        let grid = TorusGrid::minimal(1.0, 60).unwrap();
        let f = random_real(grid, 1);
        let r = dense_functional(one, &[&f, &f, &f, &f, &f], SumOptions::default());
        assert!(matches!(r, Err(Error::TooLarge { .. })));
        let r = dense_functional(one, &[&f], SumOptions::default());
        assert!(matches!(r, Err(Error::Arity { .. })));
    }

    #[test]
    fn hyperplane_point_checks_sum() {
        assert!(HyperplanePoint::new(vec![3, 1, -4]).is_ok());
        assert!(matches!(
            HyperplanePoint::new(vec![1, 1]),
            Err(Error::NotOnHyperplane { sum: 2 })
        ));
    }
}
