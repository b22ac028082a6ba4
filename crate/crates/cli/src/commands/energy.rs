use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use gkdv_core::data::DataSpec;
use gkdv_core::energy::{linear_constant, quadratic_energy, EnergyModel, NONLINEAR_CONSTANT};
use gkdv_core::lattice::{SumOptions, TorusGrid};
use gkdv_core::multiplier::MultiplierParams;

use super::{verdict, Context};
use crate::config::resolve;
use crate::output::{emit_report, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    /// Mode bound K of the random fields.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Coefficient decay `|û(n)| ∼ |n|^{-decay}` of the random fields.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    identity_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: u32,
    pub modes: usize,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    pub mu: f64,
    pub trials: usize,
    pub seed: u64,
    pub decay: f64,
    pub tolerance: f64,
    pub identity_tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 3,
            modes: 8,
            lambda: 1.0,
            n: 2.0,
            s: 0.5,
            mu: 1.0,
            trials: 5,
            seed: 1,
            decay: 1.0,
            tolerance: 1e-8,
            identity_tolerance: 1e-9,
        }
    }
}

#[derive(Serialize)]
struct Trial {
    seed: u64,
    oracle: f64,
    multiplier_form: f64,
    rel_error: f64,
    modified_oracle: f64,
    modified_multiplier_form: f64,
    modified_rel_error: f64,
    /// `d/dt E(Iu)` with `m ≡ 1`, relative to `½∫u_x² · (2πK/λ)³`.
    identity_value: f64,
}

#[derive(Serialize)]
struct Report {
    kappa1: f64,
    kappa2: f64,
    trials: Vec<Trial>,
    max_rel_error: f64,
    max_modified_rel_error: f64,
    max_identity_value: f64,
    pass: bool,
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("verify-energy", ctx.config, &args)?;
    let grid = TorusGrid::minimal(p.lambda, p.modes)?;
    let opts = SumOptions::unlimited();
    let model = EnergyModel::new(MultiplierParams::new(p.n, p.s, p.k)?).with_mu(p.mu).with_options(opts);
    // Every active frequency lies below N, so m ≡ 1.
    let identity_n = 2.0 * grid.max_frequency() + 1.0;
    let identity = EnergyModel::new(MultiplierParams::new(identity_n, p.s, p.k)?).with_mu(p.mu).with_options(opts);
    let data = DataSpec::PowerLaw { amplitude: p.lambda, decay: p.decay };
    let mut trials = Vec::with_capacity(p.trials);
    for j in 0..p.trials {
        let seed = p.seed.wrapping_add(j as u64);
        let u = data.generate(grid, seed)?;
        let oracle = model.chain_rule_derivative(&u)?;
        let terms = model.increment_terms(&u)?;
        let form = terms.time_derivative(p.k, p.mu);
        let scale = (terms.linear_rate(p.k, p.mu).abs() + terms.nonlinear_rate(p.mu).abs()).max(oracle.abs());
        let modified_oracle = model.chain_rule_modified_derivative(&u)?;
        let parts = model.modified_increment(&u)?;
        let mscale = (parts.resonant.abs() + parts.nonlinear.abs() + parts.correction.abs()).max(modified_oracle.abs());
        let reference = quadratic_energy(&u) * (2.0 * PI * grid.max_frequency()).powi(3);
        let id = identity.increment_terms(&u)?.time_derivative(p.k, p.mu);
        trials.push(Trial {
            seed,
            oracle,
            multiplier_form: form,
            rel_error: if scale > 0.0 { (form - oracle).abs() / scale } else { 0.0 },
            modified_oracle,
            modified_multiplier_form: parts.total(),
            modified_rel_error: if mscale > 0.0 { (parts.total() - modified_oracle).abs() / mscale } else { 0.0 },
            identity_value: if reference > 0.0 { id.abs() / reference } else { id.abs() },
        });
    }
    let max = |f: fn(&Trial) -> f64| trials.iter().map(f).fold(0.0f64, f64::max);
    let max_rel_error = max(|t| t.rel_error);
    let max_modified_rel_error = max(|t| t.modified_rel_error);
    let max_identity_value = max(|t| t.identity_value);
    let mut failures = Vec::new();
    if !(max_rel_error <= p.tolerance) {
        failures.push(format!("d/dt E(Iu) differs from the oracle by {max_rel_error:e}"));
    }
    if !(max_modified_rel_error <= p.tolerance) {
        failures.push(format!("d/dt E_I² differs from the oracle by {max_modified_rel_error:e}"));
    }
    if !(max_identity_value <= p.identity_tolerance) {
        failures.push(format!("m ≡ 1 derivative is {max_identity_value:e}"));
    }
    let manifest = RunManifest::new("verify-energy", &p, ctx.out)?;
    let report = Report {
        kappa1: linear_constant(p.k),
        kappa2: NONLINEAR_CONSTANT,
        trials,
        max_rel_error,
        max_modified_rel_error,
        max_identity_value,
        pass: failures.is_empty(),
    };
    emit_report(&report, &manifest, ctx.out)?;
    verdict(&failures)
}
