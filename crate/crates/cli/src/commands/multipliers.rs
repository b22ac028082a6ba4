use serde::{Deserialize, Serialize};

use gkdv_core::multiplier::{dmvt_sweep, multi_sweep, DmvtSweep, Lemma, MultiplierParams, Sampler, SweepDomain, SweepReport};

use super::{verdict, Context};
use crate::config::resolve;
use crate::output::{emit_report, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// nonres, mk2_1, mk2_2, mk2_3, m2k2_1, m2k2_2, all (the six lemmas) or dmvt.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Period of the sampling lattice.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice_period: Option<f64>,
    /// Largest sampled frequency in units of N.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_factor: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cmp_large: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cmp_sim: Option<f64>,
    #[arg(long = "cmp-gtrsim-N")]
    #[serde(rename = "cmp_gtrsim_N", skip_serializing_if = "Option::is_none")]
    cmp_gtrsim_n: Option<f64>,
    /// Largest acceptable ratio; exceeding it exits with status 1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ceiling: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub lemma: String,
    pub k: u32,
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    pub samples: usize,
    pub seed: u64,
    pub lattice_period: f64,
    pub frequency_factor: f64,
    pub cmp_large: f64,
    pub cmp_sim: f64,
    #[serde(rename = "cmp_gtrsim_N")]
    pub cmp_gtrsim_n: f64,
    pub ceiling: f64,
}

impl Default for Params {
    fn default() -> Self {
        let d = SweepDomain::default();
        Self {
            lemma: "all".into(),
            k: 3,
            n: 16.0,
            s: 0.5,
            samples: 100_000,
            seed: 1,
            lattice_period: d.lattice_period,
            frequency_factor: d.frequency_factor,
            cmp_large: MultiplierParams::DEFAULT_LARGE,
            cmp_sim: MultiplierParams::DEFAULT_SIM,
            cmp_gtrsim_n: MultiplierParams::DEFAULT_GTRSIM,
            ceiling: 1e4,
        }
    }
}

#[derive(Serialize)]
struct Report {
    reports: Vec<SweepReport>,
    dmvt: Option<DmvtSweep>,
    max_ratio: f64,
    ceiling: f64,
    pass: bool,
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("verify-multipliers", ctx.config, &args)?;
    let mut params = MultiplierParams::new(p.n, p.s, p.k)?;
    params.cmp_large = p.cmp_large;
    params.cmp_sim = p.cmp_sim;
    params.cmp_gtrsim_n = p.cmp_gtrsim_n;
    let params = params.validated()?;
    let sampler = Sampler::Random {
        count: p.samples,
        seed: p.seed,
    };
    let domain = SweepDomain {
        lattice_period: p.lattice_period,
        frequency_factor: p.frequency_factor,
    };
    let (groups, with_dmvt): (Vec<Vec<Lemma>>, bool) = match p.lemma.as_str() {
        "all" => (
            vec![
                vec![Lemma::Nonres, Lemma::Mk2One, Lemma::Mk2Two, Lemma::Mk2Three],
                vec![Lemma::M2k2One, Lemma::M2k2Two],
            ],
            false,
        ),
        "dmvt" => (vec![], true),
        name => (vec![vec![name.parse::<Lemma>()?]], false),
    };
    let mut reports = Vec::new();
    for g in groups {
        reports.extend(multi_sweep(&g, &params, sampler, domain)?);
    }
    let dmvt = with_dmvt.then(|| dmvt_sweep(&params, p.samples, p.seed));
    let mut failures = Vec::new();
    let mut max_ratio = 0.0f64;
    for r in &reports {
        let m = r.effective_max();
        max_ratio = max_ratio.max(m);
        if !(m <= p.ceiling) {
            failures.push(format!("{}: max ratio {m:e} above {:e}", r.lemma, p.ceiling));
        }
    }
    if let Some(d) = &dmvt {
        max_ratio = max_ratio.max(d.max_ratio);
        if !(d.max_ratio <= p.ceiling) {
            failures.push(format!("dmvt: max ratio {:e} above {:e}", d.max_ratio, p.ceiling));
        }
    }
    let manifest = RunManifest::new("verify-multipliers", &p, ctx.out)?;
    let report = Report {
        reports,
        dmvt,
        max_ratio,
        ceiling: p.ceiling,
        pass: failures.is_empty(),
    };
    emit_report(&report, &manifest, ctx.out)?;
    verdict(&failures)
}
