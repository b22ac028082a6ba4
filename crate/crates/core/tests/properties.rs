use gkdv_core::bilinear::{apply_im, bilinear_ratio, counting_set, sufficient_search_bound, CountingSetQuery, TimeQuadrature};
use gkdv_core::continuation::{build_plan, PlanInput, Rational};
use gkdv_core::data::DataSpec;
use gkdv_core::energy::{e_of_iu, hamiltonian, EnergyModel};
use gkdv_core::lattice::{lq_norm, project, Projection, SpectralField, TorusGrid};
use gkdv_core::multiplier::MultiplierParams;
use gkdv_core::solver::free_propagator;
use num_complex::Complex64;
use proptest::prelude::*;

fn field(lambda: f64, modes: usize, seed: u64) -> SpectralField {
    let grid = TorusGrid::minimal(lambda, modes).unwrap();
    DataSpec::PowerLaw { amplitude: 1.0, decay: 0.8 }.generate(grid, seed).unwrap()
}

fn complex_field(lambda: f64, modes: usize, seed: u64) -> SpectralField {
    let a = field(lambda, modes, seed);
    let b = field(lambda, modes, seed + 1000);
    a.add(&b.scale_complex(Complex64::new(0.0, 1.0))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(lambda in 1u32..9, modes in 1usize..24, seed in 0u64..1000, extra in 0usize..7) {
        let u = field(lambda as f64, modes, seed);
        let samples = 2 * modes + 1 + extra;
        let phys = lq_norm(&u, 2.0, samples).unwrap();
        prop_assert!((phys / u.l2_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projections_self_adjoint(seed in 0u64..1000, lo in 0.0f64..3.0, width in 0.1f64..4.0) {
        let f = complex_field(2.0, 10, seed);
        let g = complex_field(2.0, 10, seed + 1);
        for kind in [Projection::MeanZero, Projection::Dyadic(lo + 0.1), Projection::Band { lo, hi: lo + width }] {
            let a = project(kind, &f).unwrap().inner(&g).unwrap();
            let b = f.inner(&project(kind, &g).unwrap()).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn free_flow_unitary(seed in 0u64..1000, t in -5.0f64..5.0) {
        let u = complex_field(3.0, 12, seed);
        prop_assert!((free_propagator(&u, t).l2_norm() / u.l2_norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn restricted_product_is_bilinear(seed in 0u64..1000, m in 0.0f64..40.0, c in -2.0f64..2.0) {
        let (f, g, h) = (complex_field(1.0, 8, seed), complex_field(1.0, 8, seed + 7), complex_field(1.0, 8, seed + 9));
        let lhs = apply_im(&f.add(&h.scale(c)).unwrap(), &g, m).unwrap();
        let rhs = apply_im(&f, &g, m).unwrap().add(&apply_im(&h, &g, m).unwrap().scale(c)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * (1.0 + lhs.l2_norm()));
        let lhs = apply_im(&g, &f.add(&h).unwrap(), m).unwrap();
        let rhs = apply_im(&g, &f, m).unwrap().add(&apply_im(&g, &h, m).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * (1.0 + lhs.l2_norm()));
    }

    #[test]
    fn counting_characterisations_agree(
        lambda in prop::sample::select(vec![1.0, 2.0, 8.0, 64.0]),
        xi in -200i64..200,
        n1 in -400i64..400,
        offset in -2.0f64..2.0,
        m in 0.5f64..500.0,
    ) {
        let l3 = lambda * lambda * lambda;
        let tau = ((n1 as f64).powi(3) + ((xi - n1) as f64).powi(3)) / l3 + offset;
        let q = CountingSetQuery::new(xi, tau, m, lambda);
        let s = counting_set(&q, sufficient_search_bound(&q)).unwrap();
        prop_assert!(s.agree());
        // Nothing is missed outside the candidate window.
        let wide = counting_set(&q, sufficient_search_bound(&q) + 50).unwrap();
        prop_assert_eq!(wide.members, s.members);
    }

    #[test]
    fn bilinear_ratio_phase_invariant(seed in 0u64..500, theta in 0.0f64..6.3, m in 0.0f64..64.0) {
        let a = complex_field(1.0, 12, seed);
        let b = complex_field(1.0, 12, seed + 3);
        let r = bilinear_ratio(&a, &b, m, TimeQuadrature::default()).unwrap().ratio;
        let rot = a.scale_complex(Complex64::from_polar(1.0, theta));
        let r2 = bilinear_ratio(&rot, &b, m, TimeQuadrature::default()).unwrap().ratio;
        prop_assert!((r - r2).abs() <= 1e-12 * r.max(1e-300));
    }

    #[test]
    fn feasibility_monotone_in_s(k in 3u32..5, a in 50i64..99, b in 50i64..99, logn in 1u32..20) {
        let n = 2f64.powi(logn as i32);
        let (lo, hi) = (a.min(b), a.max(b));
        let p_lo = build_plan(PlanInput::new(n, Rational::new(lo, 100), k, 1.0)).unwrap();
        let p_hi = build_plan(PlanInput::new(n, Rational::new(hi, 100), k, 1.0)).unwrap();
        prop_assert!(!p_lo.feasible || p_hi.feasible);
    }

    #[test]
    fn feasible_plans_extend_time(k in 3u32..5, a in 50i64..100, logn in 10u32..30) {
        let p = build_plan(PlanInput::new(2f64.powi(logn as i32), Rational::new(a, 100), k, 1.0)).unwrap();
        if p.feasible {
            prop_assert!(p.growth_ratio > 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identity_multiplier_energy(seed in 0u64..1000, k in 3u32..5) {
        // All modes below N, so m ≡ 1.
        let u = field(1.0, 6, seed);
        let p = MultiplierParams::new(8.0, 0.6, k).unwrap();
        prop_assert_eq!(e_of_iu(&u, &p).unwrap(), hamiltonian(&u, k).unwrap());
    }

    #[test]
    fn modified_energy_is_real(seed in 0u64..1000, n in 1.0f64..4.0) {
        let u = field(1.0, 5, seed);
        let model = EnergyModel::new(MultiplierParams::new(n, 0.55, 3).unwrap());
        prop_assert!(model.second_modified_energy(&u).unwrap().is_finite());
    }
}
