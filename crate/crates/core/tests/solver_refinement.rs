use gkdv_core::data::DataSpec;
use gkdv_core::lattice::TorusGrid;
use gkdv_core::solver::{free_propagator, integrate, rescale, SolverConfig};

fn smooth(lambda: f64, modes: usize, amp: f64, seed: u64) -> gkdv_core::lattice::SpectralField {
    let grid = TorusGrid::minimal(lambda, modes).unwrap();
    DataSpec::Smooth { amplitude: amp, width: 3.0 }.generate(grid, seed).unwrap()
}

fn slope(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

#[test]
fn hamiltonian_drift_is_fourth_order() {
    let phi = smooth(16.0, 16, 0.2, 11);
    let drifts: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| integrate(&SolverConfig::new(*phi.grid(), 3, dt, 1.0), &phi).unwrap().hamiltonian_drift)
        .collect();
    for w in drifts.windows(2) {
        let p = slope(w[0], w[1]);
        assert!((p - 4.0).abs() <= 0.3, "observed order {p} from {drifts:?}");
    }
}

#[test]
fn mass_and_free_limit() {
    let phi = smooth(4.0, 12, 0.2, 2);
    let traj = integrate(&SolverConfig::new(*phi.grid(), 4, 1e-3, 0.2), &phi).unwrap();
    assert!(traj.mass_drift <= 1e-12);
    let mut cfg = SolverConfig::new(*phi.grid(), 3, 1e-2, 0.37);
    cfg.mu = 0.0;
    let traj = integrate(&cfg, &phi).unwrap();
    let exact = free_propagator(&phi, traj.last().time);
    let err = traj.last().field.sub(&exact).unwrap().l2_norm();
    assert!(err <= 1e-12 * phi.l2_norm(), "{err}");
}

#[test]
fn rescaled_solutions_correspond() {
    // u solves on the unit torus; u_λ(x, t) = λ^{-2/k} u(x/λ, t/λ³) on the λ-torus.
    let k = 3;
    let phi = smooth(1.0, 6, 0.05, 3);
    let (dt, t_end) = (1.0 / 512.0, 1.0 / 16.0);
    let base = integrate(&SolverConfig::new(*phi.grid(), k, dt, t_end), &phi).unwrap();
    for lambda in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let scaled = rescale(&phi, lambda, k).unwrap();
        let l3 = lambda * lambda * lambda;
        let traj = integrate(&SolverConfig::new(*scaled.grid(), k, dt * l3, t_end * l3), &scaled).unwrap();
        let expect = rescale(&base.last().field, lambda, k).unwrap();
        let err = traj.last().field.sub(&expect).unwrap().l2_norm() / expect.l2_norm();
        assert!(err <= 1e-10, "λ={lambda}: {err:e}");
    }
}
