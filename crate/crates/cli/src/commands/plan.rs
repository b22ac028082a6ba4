use serde::{Deserialize, Serialize};

use gkdv_core::continuation::{build_plan, gwp_threshold, parse_rational, ContinuationPlan, PlanInput, Threshold};

use super::Context;
use crate::config::resolve;
use crate::output::{emit_report, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    /// Regularity as `p/q` or a decimal; without it only the threshold is reported.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    /// Energy constant `C₀`.
    #[arg(long = "C0")]
    #[serde(rename = "C0", skip_serializing_if = "Option::is_none")]
    c0: Option<f64>,
    /// Measured `E(Iφ_λ)`; sets `C₀ = E/2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<String>,
    #[arg(long = "eps-prime")]
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_prime: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: u32,
    pub s: Option<String>,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub energy: Option<f64>,
    pub eps: String,
    pub eps_prime: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 3,
            s: None,
            n: 1024.0,
            c0: 1.0,
            energy: None,
            eps: "1/100".into(),
            eps_prime: "1/100".into(),
        }
    }
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    threshold: Threshold,
    plan: Option<ContinuationPlan>,
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("plan", ctx.config, &args)?;
    let threshold = gwp_threshold(p.k)?;
    let plan = match &p.s {
        Some(s) => {
            let c0 = p.energy.map_or(p.c0, |e| 0.5 * e);
            let mut input = PlanInput::new(p.n, parse_rational(s)?, p.k, c0);
            input.eps = parse_rational(&p.eps)?;
            input.eps_prime = parse_rational(&p.eps_prime)?;
            Some(build_plan(input)?)
        }
        None => None,
    };
    let manifest = RunManifest::new("plan", &p, ctx.out)?;
    emit_report(&Report { threshold, plan }, &manifest, ctx.out)?;
    Ok(())
}
