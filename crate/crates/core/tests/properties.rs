//! Property tests for norms, weights, constants and sampling.

use bsde_core::brownian::sample_brownian;
use bsde_core::catalog::{build_model, catalog_names, Params};
use bsde_core::certificate::probe_lipschitz;
use bsde_core::constants::{kappa, kh_beta_threshold_bracket, min_beta2};
use bsde_core::grid::make_grid;
use bsde_core::norms::{weighted_h2_norm, weighted_m2_norm};
use bsde_core::regression::RegressionBasis;
use bsde_core::solver::solve_direct;
use bsde_core::weights::{eval_weight, AlphaProcess, Variant, WeightProcess};
use ndarray::{Array2, Array3};
use proptest::prelude::*;

fn weight_from(alpha: Vec<f64>, m: usize, n: usize) -> WeightProcess {
    let values = Array2::from_shape_fn((m, n), |(p, i)| alpha[(p * n + i) % alpha.len()]);
    eval_weight(&AlphaProcess::from_values(Variant::A1, values).unwrap(), &make_grid(1.0, n - 1).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn norms_are_monotone_in_the_process(
        phi in prop::collection::vec(-5.0f64..5.0, 24),
        scale in prop::collection::vec(1.0f64..3.0, 24),
        alpha in prop::collection::vec(0.1f64..4.0, 24),
    ) {
        let (m, n) = (4, 6);
        let grid = make_grid(1.0, n - 1).unwrap();
        let w = weight_from(alpha, m, n);
        let small = Array3::from_shape_vec((m, n, 1), phi.clone()).unwrap();
        let large = Array3::from_shape_fn((m, n, 1), |(p, i, _)| phi[p * n + i] * scale[p * n + i]);
        prop_assert!(weighted_m2_norm(small.view(), &w, &grid).unwrap() <= weighted_m2_norm(large.view(), &w, &grid).unwrap());
        prop_assert!(weighted_h2_norm(small.view(), &w, &grid).unwrap() <= weighted_h2_norm(large.view(), &w, &grid).unwrap());
    }

    #[test]
    fn norms_are_monotone_in_the_weight(
        phi in prop::collection::vec(-5.0f64..5.0, 24),
        alpha in prop::collection::vec(0.1f64..4.0, 24),
        extra in prop::collection::vec(0.0f64..2.0, 24),
    ) {
        let (m, n) = (4, 6);
        let grid = make_grid(1.0, n - 1).unwrap();
        let lower = weight_from(alpha.clone(), m, n);
        let upper = weight_from(alpha.iter().zip(&extra).map(|(a, b)| a + b).collect(), m, n);
        let x = Array3::from_shape_vec((m, n, 1), phi).unwrap();
        prop_assert!(weighted_m2_norm(x.view(), &lower, &grid).unwrap() <= weighted_m2_norm(x.view(), &upper, &grid).unwrap() * (1.0 + 1e-12));
        prop_assert!(weighted_h2_norm(x.view(), &lower, &grid).unwrap() <= weighted_h2_norm(x.view(), &upper, &grid).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn weights_are_nondecreasing(alpha in prop::collection::vec(1e-6f64..10.0, 40)) {
        let w = weight_from(alpha, 4, 10);
        for p in 0..4 {
            prop_assert_eq!(w.value(p, 0), 1.0);
            for i in 1..10 {
                prop_assert!(w.value(p, i) >= w.value(p, i - 1));
            }
        }
    }

    #[test]
    fn kappa_decreases_in_both_arguments(b1 in 4.01f64..50.0, f in 1.0001f64..20.0, d1 in 0.01f64..5.0, d2 in 0.01f64..500.0) {
        let b2 = f * min_beta2(b1).unwrap();
        let k = kappa(b1, b2).unwrap();
        prop_assert!(k < 1.0);
        prop_assert!(kappa(b1, b2 + d2).unwrap() < k);
        // Raising b1 lowers the floor on b2, so (b1 + d1, b2) stays admissible.
        prop_assert!(kappa(b1 + d1, b2).unwrap() < k);
    }

    // Rounding min_beta2 costs about ulp(90) b1^2 / 1440 relative error in kappa.
    #[test]
    fn kappa_is_one_on_the_boundary(b1 in 4.01f64..100.0) {
        let k = kappa(b1, min_beta2(b1).unwrap()).unwrap();
        prop_assert!((k - 1.0).abs() < 1e-12, "{}", k);
    }

    #[test]
    fn threshold_does_not_depend_on_bracket(lo in 1.0f64..400.0, hi in 500.0f64..1e6) {
        let (a, b) = kh_beta_threshold_bracket(1e-6, lo, hi).unwrap();
        let (c, d) = kh_beta_threshold_bracket(1e-6, 1.0, 1e6).unwrap();
        prop_assert!((0.5 * (a + b) - 0.5 * (c + d)).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn catalog_moduli_hold_on_random_probes(seed in any::<u64>(), dim in 1usize..3) {
        let e = sample_brownian(&make_grid(1.0, 8).unwrap(), 64, dim, seed).unwrap();
        for (name, _) in catalog_names() {
            if name == "lipschitz_violation" {
                continue;
            }
            let model = build_model(name, &Params::new(), dim).unwrap();
            let probe = probe_lipschitz(&model, &e, 2000, 10.0, 1.0, seed).unwrap();
            prop_assert_eq!(probe.violations, 0, "{}", name);
            prop_assert!(probe.worst_ratio <= 1.0 + 1e-9, "{}: {}", name, probe.worst_ratio);
        }
    }

    #[test]
    fn sampling_is_batch_invariant(seed in any::<u64>(), small in 1usize..300, extra in 1usize..600) {
        let grid = make_grid(1.0, 5).unwrap();
        let a = sample_brownian(&grid, small, 2, seed).unwrap();
        let b = sample_brownian(&grid, small + extra, 2, seed).unwrap();
        for p in 0..small {
            prop_assert_eq!(a.path(p), b.path(p));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solves_are_deterministic(seed in any::<u64>()) {
        let model = build_model("sin_clip", &Params::new(), 1).unwrap();
        let grid = make_grid(1.0, 10).unwrap();
        let run = || {
            let e = sample_brownian(&grid, 800, 1, seed).unwrap();
            solve_direct(&model, &e, &RegressionBasis::default()).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.y(), b.y());
        prop_assert_eq!(a.z(), b.z());
    }
}
