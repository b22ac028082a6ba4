//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest harness.

use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use gkdv_core::bilinear::{bilinear_sweep, counting_sweep, TimeQuadrature};
use gkdv_core::data::DataSpec;
use gkdv_core::energy::{almost_conservation_run, EnergyModel};
use gkdv_core::lattice::{SpectralField, SumOptions, TorusGrid};
use gkdv_core::multiplier::{multi_sweep, Lemma, MultiplierParams, Sampler, SweepDomain};
use gkdv_core::solver::{free_propagator, gauge_transform, integrate, SolverConfig};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

const BIN: &str = env!("CARGO_BIN_EXE_gkdv");

fn gkdv(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("GKDV_THREADS", "2")
        .output()
        .expect("gkdv binary runs")
}

fn json_of(out: &Output) -> Result<Value, String> {
    serde_json::from_slice(&out.stdout).map_err(|e| format!("stdout is not JSON: {e}"))
}

/// Least-squares slope of log y against log x.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (k, want, inclusive) in [("3", "1/2", true), ("4", "5/9", false)] {
        let start = Instant::now();
        let out = gkdv(&["plan", "--k", k]);
        let secs = start.elapsed().as_secs_f64();
        let v = json_of(&out)?;
        let got = v["threshold"].as_str().unwrap_or("?").to_string();
        let inc = v["inclusive"].as_bool();
        ok &= out.status.success() && got == want && inc == Some(inclusive) && secs < 1.0;
        notes.push(format!("k={k}: {got} inclusive={inc:?} in {secs:.3}s"));
    }
    check(ok, notes.join("; "))
}

fn criterion_2() -> Outcome {
    let groups = [
        vec![Lemma::Nonres, Lemma::Mk2One, Lemma::Mk2Two, Lemma::Mk2Three],
        vec![Lemma::M2k2One, Lemma::M2k2Two],
    ];
    let ns = [8.0, 16.0, 32.0];
    let mut worst_growth = 0.0f64;
    let mut problems = Vec::new();
    for k in [3u32, 4] {
        // constants[lemma][N index] = max over seeds
        let mut constants: Vec<(String, Vec<f64>)> = Vec::new();
        for (ni, &n) in ns.iter().enumerate() {
            let params = MultiplierParams::new(n, 0.5, k).map_err(|e| e.to_string())?;
            for seed in 1..=5u64 {
                let sampler = Sampler::Random { count: 100_000, seed };
                for g in &groups {
                    let reports = multi_sweep(g, &params, sampler, SweepDomain::default()).map_err(|e| e.to_string())?;
                    for r in reports {
                        let m = r.effective_max();
                        if !m.is_finite() || r.rhs_zero_lhs_nonzero > 0 {
                            problems.push(format!("k={k} N={n} seed={seed} {}: max {m:e}", r.lemma));
                        }
                        let name = r.lemma.to_string();
                        let idx = match constants.iter().position(|(l, _)| *l == name) {
                            Some(i) => i,
                            None => {
                                constants.push((name, vec![0.0; ns.len()]));
                                constants.len() - 1
                            }
                        };
                        let c = &mut constants[idx].1[ni];
                        *c = c.max(m);
                    }
                }
            }
        }
        for (lemma, c) in &constants {
            for w in c.windows(2) {
                let growth = if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 1.0 };
                worst_growth = worst_growth.max(growth);
                if !(growth < 4.0) {
                    problems.push(format!("k={k} {lemma}: constants {c:?}"));
                }
            }
        }
    }
    let detail = format!("largest growth per N-doubling {worst_growth:.3}");
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

const LAMBDAS: [f64; 3] = [1.0, 8.0, 64.0];
const MS: [f64; 6] = [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0];

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for lambda in LAMBDAS {
        for m in MS {
            let c = counting_sweep(lambda, m, 1.0, 10_000, 1).map_err(|e| e.to_string())?;
            worst = worst.max(c.max_card_ratio);
            mismatches += c.mismatches;
        }
    }
    check(
        worst <= 10.0 && mismatches == 0,
        format!("max #A/(λ/M+1) = {worst:.3}, characterisation mismatches {mismatches}"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_change = 0.0f64;
    let mut finite = true;
    for lambda in LAMBDAS {
        for m in MS {
            let b = bilinear_sweep(lambda, m, 1000, TimeQuadrature::default(), 1).map_err(|e| e.to_string())?;
            finite &= b.max_ratio.is_finite() && b.max_ratio_refined.is_finite();
            worst_ratio = worst_ratio.max(b.max_ratio);
            worst_change = worst_change.max(b.max_refinement_change);
        }
    }
    check(
        finite && worst_change < 0.05,
        format!("max ratio {worst_ratio:.4}, largest change under quadrature doubling {worst_change:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for modes in ["4", "8"] {
        let out = gkdv(&["verify-energy", "--k", "3", "--modes", modes, "--trials", "5", "--seed", "1"]);
        let v = json_of(&out)?;
        let rel = v["max_rel_error"].as_f64().unwrap_or(f64::NAN);
        let id = v["max_identity_value"].as_f64().unwrap_or(f64::NAN);
        ok &= out.status.success() && rel <= 1e-8 && id <= 1e-9;
        notes.push(format!("K={modes}: rel {rel:.2e}, m≡1 {id:.2e}"));
    }
    check(ok, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let grid = TorusGrid::minimal(1.0, 128).map_err(|e| e.to_string())?;
    let u = DataSpec::RandomHs { norm: 1.0, s: 0.5, decay: 1.5 }
        .generate(grid, 1)
        .map_err(|e| e.to_string())?;
    let ns = [8.0, 16.0, 32.0, 64.0];
    let mut gaps = Vec::new();
    for n in ns {
        let model = EnergyModel::new(MultiplierParams::new(n, 0.5, 3).map_err(|e| e.to_string())?)
            .with_options(SumOptions::unlimited());
        let e2 = model.second_modified_energy(&u).map_err(|e| e.to_string())?;
        let e1 = model.e_of_iu(&u).map_err(|e| e.to_string())?;
        gaps.push((e2 - e1).abs());
    }
    let slope = loglog_slope(&ns, &gaps);
    check(slope <= -1.8, format!("slope {slope:.3}, gaps {}", sci(&gaps)))
}

fn smooth(lambda: f64, modes: usize, amp: f64, seed: u64) -> Result<SpectralField, String> {
    let grid = TorusGrid::minimal(lambda, modes).map_err(|e| e.to_string())?;
    DataSpec::Smooth { amplitude: amp, width: 3.0 }
        .generate(grid, seed)
        .map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let e = |x: gkdv_core::Error| x.to_string();
    let phi = smooth(4.0, 12, 0.2, 2)?;
    let mass = integrate(&SolverConfig::new(*phi.grid(), 4, 1e-3, 0.2), &phi).map_err(e)?.mass_drift;

    let phi16 = smooth(16.0, 16, 0.2, 11)?;
    let mut drifts = Vec::new();
    for dt in [0.01, 0.005, 0.0025] {
        drifts.push(integrate(&SolverConfig::new(*phi16.grid(), 3, dt, 1.0), &phi16).map_err(e)?.hamiltonian_drift);
    }
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let mut cfg = SolverConfig::new(*phi.grid(), 3, 1e-2, 0.37);
    cfg.mu = 0.0;
    let traj = integrate(&cfg, &phi).map_err(e)?;
    let free = free_propagator(&phi, traj.last().time);
    let free_err = traj.last().field.sub(&free).map_err(e)?.l2_norm() / phi.l2_norm();

    let out = gkdv(&["rescale-check", "--lambdas", "1,2,4,8,16"]);
    let rescale_err = json_of(&out)?["max_error"].as_f64().unwrap_or(f64::NAN);

    let ok = mass <= 1e-12
        && orders.iter().all(|p| (p - 4.0).abs() <= 0.3)
        && free_err <= 1e-12
        && rescale_err <= 1e-10
        && out.status.success();
    check(
        ok,
        format!(
            "mass drift {mass:.1e}; orders {orders:.3?}; free limit {free_err:.1e}; rescaling {rescale_err:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let e = |x: gkdv_core::Error| x.to_string();
    let grid = TorusGrid::minimal(1.0, 128).map_err(e)?;
    let phi = DataSpec::Smooth { amplitude: 0.1, width: 8.0 }.generate(grid, 7).map_err(e)?;
    let window = 1e-4;
    let mut cfg = SolverConfig::new(grid, 3, 2.5e-8, window);
    cfg.record_every = cfg.steps().0;
    let traj = integrate(&cfg, &phi).map_err(e)?;
    let ns = [8.0, 16.0, 32.0, 64.0];
    let mut increments = Vec::new();
    for n in ns {
        let model = EnergyModel::new(MultiplierParams::new(n, 0.5, 3).map_err(e)?).with_options(SumOptions::unlimited());
        increments.push(almost_conservation_run(&traj, &model, 0.1).map_err(e)?.max_increment);
    }
    let monotone = increments.windows(2).all(|w| w[1] < w[0]);
    let slope = loglog_slope(&ns, &increments);
    check(
        monotone && slope <= -1.5,
        format!("slope {slope:.2}, |ΔE_I²| {}, H drift {:.1e}", sci(&increments), traj.hamiltonian_drift),
    )
}

fn criterion_9() -> Outcome {
    let e = |x: gkdv_core::Error| x.to_string();
    let grid = TorusGrid::minimal(1.0, 8).map_err(e)?;
    let phi = DataSpec::Smooth { amplitude: 1.0, width: 3.0 }.generate(grid, 5).map_err(e)?;
    let mut cfg = SolverConfig::new(grid, 3, 1e-4, 0.05);
    cfg.record_every = 50;
    let traj = integrate(&cfg, &phi).map_err(e)?;
    let gauged = gauge_transform(&traj);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bound = grid.mode_bound() as i64;
    let mut worst = 0.0f64;
    let mut shifted = 0.0f64;
    for (a, b) in traj.samples.iter().zip(&gauged.samples) {
        shifted = shifted.max(b.field.sub(&a.field).map_err(e)?.l2_norm());
        for _ in 0..500 {
            let arity = rng.gen_range(2..=6);
            let mut modes: Vec<i64> = (0..arity - 1).map(|_| rng.gen_range(-bound..=bound)).collect();
            let last = -modes.iter().sum::<i64>();
            if last.abs() > bound {
                continue;
            }
            modes.push(last);
            let p: Complex64 = modes.iter().map(|&n| a.field.coeff(n)).product();
            let q: Complex64 = modes.iter().map(|&n| b.field.coeff(n)).product();
            let scale: f64 = modes.iter().map(|&n| a.field.coeff(n).norm()).product();
            if scale > 0.0 {
                worst = worst.max((p - q).norm() / scale);
            }
        }
    }
    check(
        worst <= 1e-12 && shifted > 0.0,
        format!("max relative product change {worst:.1e} over {} samples", traj.samples.len()),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, &[&str]); 6] = [
        ("plan", &["plan", "--k", "3", "--s", "3/5"]),
        ("multipliers", &["verify-multipliers", "--samples", "20000", "--seed", "3"]),
        ("bilinear", &["verify-bilinear", "--lambda", "8", "--M", "64", "--samples", "200", "--queries", "2000", "--seed", "3"]),
        ("energy", &["verify-energy", "--seed", "3"]),
        ("rescale", &["rescale-check", "--lambdas", "1,4", "--seed", "3"]),
        ("simulate", &["simulate", "--modes", "16", "--dt", "1e-4", "--t-end", "0.01", "--N", "4", "--seed", "3"]),
    ];
    let mut differing = Vec::new();
    for (name, args) in runs {
        let mut outputs = Vec::new();
        let path = dir.path().join(format!("{name}.out"));
        for _ in 0..2 {
            let mut full = vec!["--out", path.to_str().unwrap()];
            full.extend_from_slice(args);
            let out = gkdv(&full);
            if !out.status.success() {
                return Err(format!("{name} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
            }
            outputs.push(read(&path)?);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(name);
        }
    }
    check(differing.is_empty(), format!("6 subcommands rerun; differing outputs: {differing:?}"))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "threshold table", criterion_1),
        (2, "multiplier bounds stable under N-doubling", criterion_2),
        (3, "counting bound", criterion_3),
        (4, "bilinear ratio", criterion_4),
        (5, "energy derivative identity", criterion_5),
        (6, "fixed-time bound scaling", criterion_6),
        (7, "solver integrity", criterion_7),
        (8, "almost-conservation trend", criterion_8),
        (9, "gauge invariance of hyperplane products", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {id} ({name}): {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {d} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
