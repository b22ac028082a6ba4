//! Global continuation bookkeeping in exact rational arithmetic: the
//! regularity threshold, the scaling exponent and the guaranteed existence
//! time of one rescaled iteration.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Serialise as a `"p/q"` string, integers included.
pub fn ratio_string(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn ser_ratio<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&ratio_string(x))
}

/// Parse `"p/q"`, an integer or a finite decimal such as `"0.99"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidParameter(format!("not a rational number: {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p = i64::from_str(p.trim()).map_err(|_| bad())?;
        let q = i64::from_str(q.trim()).map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(r(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = if digits.is_empty() { 0 } else { i64::from_str(&digits).map_err(|_| bad())? };
    let den = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let x = r(num, den);
    Ok(if neg { -x } else { x })
}

/// Which constraint fixes the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// `2 > (5/2)(1-s)/(2/k+s-1/2)`.
    ConditionA,
    /// `3 > 3(1-s)/(2/k+s-1/2)`.
    ConditionB,
    /// The local theory needs `s >= 1/2`.
    LocalTheory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub k: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub threshold: Rational,
    /// `true` when `s = threshold` itself is admissible.
    pub inclusive: bool,
    pub binding: Binding,
    /// Solution `s > ·` of condition A.
    #[serde(serialize_with = "ser_ratio")]
    pub condition_a: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub condition_b: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub local_floor: Rational,
}

impl Threshold {
    pub fn admits(&self, s: Rational) -> bool {
        if self.inclusive {
            s >= self.threshold
        } else {
            s > self.threshold
        }
    }
}

/// `c > p(1-s)/(2/k+s-1/2)` with the denominator positive is `s > (p - c(2/k-1/2))/(c+p)`.
fn solve_condition(c: Rational, p: Rational, k: u32) -> Rational {
    let shift = r(2, k as i64) - r(1, 2);
    (p - c * shift) / (c + p)
}

const CONDITION_A: (i64, i64, i64, i64) = (2, 1, 5, 2);
const CONDITION_B: (i64, i64, i64, i64) = (3, 1, 3, 1);

fn check_k(k: u32) -> Result<()> {
    if k == 3 || k == 4 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("k must be 3 or 4, got {k}")))
    }
}

/// Smallest admissible regularity for global continuation.
pub fn gwp_threshold(k: u32) -> Result<Threshold> {
    check_k(k)?;
    let a = solve_condition(r(CONDITION_A.0, CONDITION_A.1), r(CONDITION_A.2, CONDITION_A.3), k);
    let b = solve_condition(r(CONDITION_B.0, CONDITION_B.1), r(CONDITION_B.2, CONDITION_B.3), k);
    let floor = r(1, 2);
    // Ties resolve to the strict conditions.
    let (threshold, inclusive, binding) = if a >= b && a >= floor {
        (a, false, Binding::ConditionA)
    } else if b >= floor {
        (b, false, Binding::ConditionB)
    } else {
        (floor, true, Binding::LocalTheory)
    };
    Ok(Threshold {
        k,
        threshold,
        inclusive,
        binding,
        condition_a: a,
        condition_b: b,
        local_floor: floor,
    })
}

/// `γ = (1-s)/(2/k+s-1/2)`, with `λ ∼ N^γ`.
pub fn lambda_exponent(s: Rational, k: u32) -> Rational {
    (Rational::from_integer(1) - s) / (r(2, k as i64) + s - r(1, 2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanInput {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub s: Rational,
    pub k: u32,
    pub c0: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub eps: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub eps_prime: Rational,
}

impl PlanInput {
    pub fn new(n: f64, s: Rational, k: u32, c0: f64) -> Self {
        Self {
            n,
            s,
            k,
            c0,
            eps: r(1, 100),
            eps_prime: r(1, 100),
        }
    }
}

/// Values that depend on `N` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanValues {
    pub lambda: f64,
    /// `δ = λ^{-ε}`.
    pub delta: f64,
    /// `K = N^{-3+ε'} + N^{-2+ε'} λ^{-1/2}`.
    pub k_bound: f64,
    /// `C₀ / K`.
    pub iterations: f64,
    /// `C₀ δ λ^{-3} / K`.
    pub existence_time: f64,
}

fn evaluate(input: &PlanInput, n: f64, gamma: f64) -> PlanValues {
    let eps = input.eps.to_f64().unwrap_or(0.0);
    let epsp = input.eps_prime.to_f64().unwrap_or(0.0);
    let lambda = n.powf(gamma);
    let delta = lambda.powf(-eps);
    let k_bound = n.powf(-3.0 + epsp) + n.powf(-2.0 + epsp) * lambda.powf(-0.5);
    PlanValues {
        lambda,
        delta,
        k_bound,
        iterations: input.c0 / k_bound,
        existence_time: input.c0 * delta * lambda.powi(-3) / k_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationPlan {
    pub input: PlanInput,
    #[serde(flatten)]
    pub threshold: Threshold,
    #[serde(serialize_with = "ser_ratio")]
    pub lambda_exponent: Rational,
    /// `δ ∼ λ^{delta_exponent}`.
    #[serde(serialize_with = "ser_ratio")]
    pub delta_exponent: Rational,
    /// Exponent `e` with `existence_time ∼ N^e`:
    /// `min(3-ε', 2-ε'+γ/2) - (3+ε)γ`.
    #[serde(serialize_with = "ser_ratio")]
    pub growth_exponent: Rational,
    pub at_n: PlanValues,
    pub at_2n: PlanValues,
    /// `existence_time(2N) / existence_time(N)`.
    pub growth_ratio: f64,
    pub feasible: bool,
    pub violations: Vec<String>,
}

/// Plan one rescaled iteration of the continuation argument.
pub fn build_plan(input: PlanInput) -> Result<ContinuationPlan> {
    let k = input.k;
    let th = gwp_threshold(k)?;
    if !(input.n.is_finite() && input.n >= 2.0) {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {}", input.n)));
    }
    if !(input.c0.is_finite() && input.c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("C0 must be positive, got {}", input.c0)));
    }
    let s = input.s;
    if s <= Rational::zero() || s >= Rational::from_integer(1) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {}", ratio_string(&s))));
    }
    if input.eps < Rational::zero() || input.eps_prime < Rational::zero() {
        return Err(Error::InvalidParameter("epsilons must be non-negative".into()));
    }
    let gamma = lambda_exponent(s, k);
    let three = Rational::from_integer(3);
    let first = three - input.eps_prime;
    let second = Rational::from_integer(2) - input.eps_prime + gamma / 2;
    let growth = first.min(second) - (three + input.eps) * gamma;

    let mut violations = Vec::new();
    let ga = gamma * r(CONDITION_A.2, CONDITION_A.3);
    if ga >= r(CONDITION_A.0, CONDITION_A.1) {
        violations.push(format!(
            "condition A: 2 > (5/2)(1-s)/(2/k+s-1/2) fails ({} >= 2)",
            ratio_string(&ga)
        ));
    }
    let gb = gamma * three;
    if gb >= three {
        violations.push(format!(
            "condition B: 3 > 3(1-s)/(2/k+s-1/2) fails ({} >= 3)",
            ratio_string(&gb)
        ));
    }
    if s < th.local_floor {
        violations.push(format!("local theory: s >= {} fails", ratio_string(&th.local_floor)));
    }
    if !th.admits(s) && violations.is_empty() {
        violations.push(format!("s below the threshold {}", ratio_string(&th.threshold)));
    }
    if growth <= Rational::zero() && th.admits(s) {
        violations.push(format!(
            "existence time does not grow: exponent {} <= 0 with eps = {}, eps' = {}",
            ratio_string(&growth),
            ratio_string(&input.eps),
            ratio_string(&input.eps_prime)
        ));
    }
    let g = gamma.to_f64().unwrap_or(f64::NAN);
    let at_n = evaluate(&input, input.n, g);
    let at_2n = evaluate(&input, 2.0 * input.n, g);
    let growth_ratio = at_2n.existence_time / at_n.existence_time;
    if growth_ratio <= 1.0 && violations.is_empty() {
        violations.push(format!("existence time does not increase from N to 2N (ratio {growth_ratio})"));
    }
    Ok(ContinuationPlan {
        threshold: th,
        lambda_exponent: gamma,
        delta_exponent: -input.eps,
        growth_exponent: growth,
        at_n,
        at_2n,
        growth_ratio,
        feasible: violations.is_empty(),
        violations,
        input,
    })
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::ConditionA => "condition A",
            Binding::ConditionB => "condition B",
            Binding::LocalTheory => "local theory",
        })
    }
}
