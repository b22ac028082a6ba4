use serde::{Deserialize, Serialize};

use gkdv_core::bilinear::{bilinear_sweep, counting_sweep, strichartz_sweep, StrichartzSweep, TimeQuadrature};

use super::{verdict, Context};
use crate::config::resolve;
use crate::output::{emit_report, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    /// Thickness of the shell `|τ - ξ₁³ - ξ₂³| <= width`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    /// Random data pairs for the bilinear ratio.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    /// Random `(ξ, τ)` queries for the counting bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    queries: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Base size of the time quadrature.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    card_ceiling: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_ceiling: Option<f64>,
    /// Largest relative change of a ratio under quadrature doubling.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement_tolerance: Option<f64>,
    /// Random data for the `L⁴ / X_{0,1/3}` ratio; 0 skips it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    strichartz_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub width: f64,
    pub samples: usize,
    pub queries: usize,
    pub seed: u64,
    pub quadrature_points: usize,
    pub card_ceiling: f64,
    pub ratio_ceiling: f64,
    pub refinement_tolerance: f64,
    pub strichartz_samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            m: 16.0,
            width: 1.0,
            samples: 1000,
            queries: 10_000,
            seed: 1,
            quadrature_points: 256,
            card_ceiling: 10.0,
            ratio_ceiling: 10.0,
            refinement_tolerance: 0.05,
            strichartz_samples: 0,
        }
    }
}

#[derive(Serialize)]
struct Report {
    lambda: f64,
    #[serde(rename = "M")]
    m: f64,
    width: f64,
    samples: usize,
    queries: usize,
    max_card: usize,
    /// `max #A / (λ/M + 1)`.
    max_card_ratio: f64,
    characterisation_mismatches: usize,
    exact_fallbacks: usize,
    max_bilinear_ratio: f64,
    max_bilinear_ratio_refined: f64,
    max_refinement_change: f64,
    quadrature_points: usize,
    strichartz: Option<StrichartzSweep>,
    pass: bool,
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("verify-bilinear", ctx.config, &args)?;
    let counting = counting_sweep(p.lambda, p.m, p.width, p.queries, p.seed)?;
    let quad = TimeQuadrature::AliasFree(p.quadrature_points);
    let bi = bilinear_sweep(p.lambda, p.m, p.samples, quad, p.seed)?;
    let strichartz = if p.strichartz_samples > 0 {
        Some(strichartz_sweep(p.lambda, 1.0 / 3.0, p.strichartz_samples, p.seed)?)
    } else {
        None
    };
    let mut failures = Vec::new();
    if !(counting.max_card_ratio <= p.card_ceiling) {
        failures.push(format!("#A/(λ/M+1) = {} above {}", counting.max_card_ratio, p.card_ceiling));
    }
    if counting.mismatches > 0 {
        failures.push(format!("{} queries where the two characterisations differ", counting.mismatches));
    }
    if !(bi.max_ratio <= p.ratio_ceiling) {
        failures.push(format!("bilinear ratio {} above {}", bi.max_ratio, p.ratio_ceiling));
    }
    if !(bi.max_refinement_change <= p.refinement_tolerance) {
        failures.push(format!("quadrature doubling changed a ratio by {}", bi.max_refinement_change));
    }
    let manifest = RunManifest::new("verify-bilinear", &p, ctx.out)?;
    let report = Report {
        lambda: p.lambda,
        m: p.m,
        width: p.width,
        samples: p.samples,
        queries: p.queries,
        max_card: counting.max_card,
        max_card_ratio: counting.max_card_ratio,
        characterisation_mismatches: counting.mismatches,
        exact_fallbacks: counting.exact_fallbacks,
        max_bilinear_ratio: bi.max_ratio,
        max_bilinear_ratio_refined: bi.max_ratio_refined,
        max_refinement_change: bi.max_refinement_change,
        quadrature_points: p.quadrature_points,
        strichartz,
        pass: failures.is_empty(),
    };
    emit_report(&report, &manifest, ctx.out)?;
    verdict(&failures)
}
