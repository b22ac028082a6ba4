use std::fs;
use std::io::Write;

use anyhow::Context as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gkdv_core::data::{field_from_coefficients, DataSpec};
use gkdv_core::energy::{DiagnosticsRow, EnergyModel};
use gkdv_core::lattice::{SpectralField, SumOptions, TorusGrid};
use gkdv_core::multiplier::MultiplierParams;
use gkdv_core::solver::{integrate, lambda_of_n, rescale, SolverConfig};

use super::Context;
use crate::config::resolve;
use crate::output::{to_json, RunManifest};
use crate::CliError;

pub const CSV_HELP: &str = "\
Output: CSV with header
  t, hamiltonian, e_Iu, e_I2, gap, h1_Iu, mass, dE1_re, dE2_re
one row per recorded sample. dE1_re and dE2_re are the linear and nonlinear
parts of d/dt E(Iu). Initial data live on the unit torus and are rescaled to
the λ-torus; λ defaults to the rounded N^{(1-s)/(2/k+s-1/2)}.
Data kinds: random-hs (seeded, H^s norm = --norm), bump (--amplitude, --width),
file (--coefficients: JSON list of [n, re, im] with n >= 0).";

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    /// Integer rescaling factor; derived from N and s when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<u64>,
    /// Mode bound K.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Coefficient of the nonlinearity: 1 defocusing, -1 focusing, 0 free.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dealias_pad: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    record_every: Option<usize>,
    /// random-hs, bump or file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    norm: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<String>,
    /// Cap on lattice points per multilinear sum.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_terms: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: u32,
    pub lambda: Option<u64>,
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    pub seed: u64,
    pub mu: f64,
    pub dealias_pad: Option<f64>,
    pub record_every: Option<usize>,
    pub data: String,
    pub norm: f64,
    pub decay: f64,
    pub amplitude: f64,
    pub width: f64,
    pub coefficients: Option<String>,
    pub max_terms: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 3,
            lambda: None,
            modes: 64,
            dt: 1e-4,
            t_end: 0.1,
            n: 8.0,
            s: 0.5,
            seed: 1,
            mu: 1.0,
            dealias_pad: None,
            record_every: None,
            data: "random-hs".into(),
            norm: 1.0,
            decay: 1.5,
            amplitude: 1.0,
            width: 0.05,
            coefficients: None,
            max_terms: 1e8,
        }
    }
}

/// Resolved values echoed into the manifest next to the parameters.
#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    params: &'a Params,
    lambda_used: u64,
    dt_used: f64,
    steps: usize,
    record_every_used: usize,
}

fn initial_data(p: &Params, grid: TorusGrid) -> Result<SpectralField, CliError> {
    let field = match p.data.as_str() {
        "random-hs" => DataSpec::RandomHs { norm: p.norm, s: p.s, decay: p.decay }.generate(grid, p.seed)?,
        "bump" => DataSpec::Bump { amplitude: p.amplitude, width: p.width }.generate(grid, p.seed)?,
        "file" => {
            let path = p
                .coefficients
                .as_deref()
                .ok_or_else(|| CliError::Usage("--data file needs --coefficients".into()))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            let entries: Vec<(i64, f64, f64)> = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{path} must be a JSON list of [n, re, im]: {e}")))?;
            field_from_coefficients(grid, &entries)?
        }
        other => return Err(CliError::Usage(format!("unknown data kind '{other}'"))),
    };
    Ok(field)
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("simulate", ctx.config, &args)?;
    let lambda = match p.lambda {
        Some(0) => return Err(CliError::Usage("λ must be a positive integer".into())),
        Some(l) => l,
        None => lambda_of_n(p.n, p.s, p.k)?.rounded,
    };
    let phi = rescale(&initial_data(&p, TorusGrid::minimal(1.0, p.modes)?)?, lambda as f64, p.k)?;
    let mut cfg = SolverConfig::new(*phi.grid(), p.k, p.dt, p.t_end);
    cfg.mu = p.mu;
    if let Some(pad) = p.dealias_pad {
        cfg.dealias_pad = pad;
    }
    cfg.validate()?;
    let (steps, dt) = cfg.steps();
    cfg.record_every = p.record_every.unwrap_or((steps / 10).max(1)).max(1);
    let traj = integrate(&cfg, &phi)?;
    if traj.cfl_warnings > 0 {
        log::warn!("{} steps exceeded the nonlinear CFL guard", traj.cfl_warnings);
    }
    let model = EnergyModel::new(MultiplierParams::new(p.n, p.s, p.k)?)
        .with_mu(p.mu)
        .with_options(SumOptions { term_limit: p.max_terms });
    let rows: Vec<DiagnosticsRow> = traj
        .samples
        .par_iter()
        .map(|s| model.diagnostics(&s.field, s.time))
        .collect::<gkdv_core::Result<_>>()?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &rows {
            w.serialize(r).map_err(anyhow::Error::from)?;
        }
        w.flush().map_err(anyhow::Error::from)?;
    }
    let resolved = Resolved {
        params: &p,
        lambda_used: lambda,
        dt_used: dt,
        steps,
        record_every_used: cfg.record_every,
    };
    let manifest = RunManifest::new("simulate", &resolved, ctx.out)?;
    match ctx.out {
        Some(path) => {
            fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?;
            manifest.write_sidecar(path)?;
        }
        None => {
            std::io::stdout().lock().write_all(&buf).map_err(anyhow::Error::from)?;
            eprint!("{}", to_json(&serde_json::to_value(&manifest).map_err(anyhow::Error::from)?));
        }
    }
    if let Some(b) = traj.blowup {
        return Err(CliError::Failed(format!(
            "solution left the representable range at step {} (last valid time {})",
            b.step, b.last_valid_time
        )));
    }
    Ok(())
}
