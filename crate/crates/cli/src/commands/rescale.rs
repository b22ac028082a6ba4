use serde::{Deserialize, Serialize};

use gkdv_core::data::DataSpec;
use gkdv_core::lattice::{homogeneous_sobolev_norm, lq_norm, TorusGrid};
use gkdv_core::solver::{integrate, rescale, unrescale, SolverConfig};

use super::{verdict, Context};
use crate::config::resolve;
use crate::output::{emit_report, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
    /// Comma-separated integer scales.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambdas: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    /// Sobolev index of the homogeneous-norm identity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: u32,
    pub modes: usize,
    pub lambdas: Vec<u64>,
    pub seed: u64,
    pub amplitude: f64,
    pub s: f64,
    pub dt: f64,
    pub t_end: f64,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 3,
            modes: 6,
            lambdas: vec![1, 2, 4, 8, 16],
            seed: 1,
            amplitude: 0.05,
            s: 0.7,
            dt: 1.0 / 512.0,
            t_end: 1.0 / 16.0,
            tolerance: 1e-10,
        }
    }
}

#[derive(Serialize)]
struct Row {
    lambda: u64,
    /// Relative errors of `‖φ_λ‖_{L^q} = λ^{1/q - 2/k} ‖φ‖_{L^q}`.
    l2_error: f64,
    l4_error: f64,
    /// Relative error of `‖φ_λ‖_{Ḣ^s} = λ^{1/2 - 2/k - s} ‖φ‖_{Ḣ^s}`.
    hs_error: f64,
    round_trip_error: f64,
    /// `‖u_λ(λ³T) - (u(T))_λ‖ / ‖(u(T))_λ‖`.
    solution_error: f64,
}

#[derive(Serialize)]
struct Report {
    rows: Vec<Row>,
    max_error: f64,
    pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn run(args: Args, ctx: &Context) -> Result<(), CliError> {
    let p: Params = resolve("rescale-check", ctx.config, &args)?;
    let grid = TorusGrid::minimal(1.0, p.modes)?;
    let phi = DataSpec::Smooth { amplitude: p.amplitude, width: 3.0 }.generate(grid, p.seed)?;
    let samples = 4 * (2 * p.modes + 1);
    let base = integrate(&SolverConfig::new(grid, p.k, p.dt, p.t_end), &phi)?;
    let e = -2.0 / p.k as f64;
    let mut rows = Vec::new();
    for &l in &p.lambdas {
        let lambda = l as f64;
        let scaled = rescale(&phi, lambda, p.k)?;
        let l2 = rel(lq_norm(&scaled, 2.0, samples)?, lambda.powf(0.5 + e) * lq_norm(&phi, 2.0, samples)?);
        let l4 = rel(lq_norm(&scaled, 4.0, samples)?, lambda.powf(0.25 + e) * lq_norm(&phi, 4.0, samples)?);
        let hs = rel(
            homogeneous_sobolev_norm(&scaled, p.s),
            lambda.powf(0.5 + e - p.s) * homogeneous_sobolev_norm(&phi, p.s),
        );
        let back = unrescale(&scaled, p.k)?;
        let round_trip = back.sub(&phi)?.l2_norm() / phi.l2_norm();
        let l3 = lambda.powi(3);
        let traj = integrate(&SolverConfig::new(*scaled.grid(), p.k, p.dt * l3, p.t_end * l3), &scaled)?;
        let expect = rescale(&base.last().field, lambda, p.k)?;
        let solution = traj.last().field.sub(&expect)?.l2_norm() / expect.l2_norm();
        rows.push(Row {
            lambda: l,
            l2_error: l2,
            l4_error: l4,
            hs_error: hs,
            round_trip_error: round_trip,
            solution_error: solution,
        });
    }
    let max_error = rows
        .iter()
        .flat_map(|r| [r.l2_error, r.l4_error, r.hs_error, r.round_trip_error, r.solution_error])
        .fold(0.0f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    let failures: Vec<String> = if max_error <= p.tolerance {
        vec![]
    } else {
        vec![format!("largest identity error {max_error:e} above {:e}", p.tolerance)]
    };
    let manifest = RunManifest::new("rescale-check", &p, ctx.out)?;
    emit_report(&Report { rows, max_error, pass: failures.is_empty() }, &manifest, ctx.out)?;
    verdict(&failures)
}
