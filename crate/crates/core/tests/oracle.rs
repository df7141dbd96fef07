//! Solver output against the closed-form linear solutions.

use bsde_core::brownian::{sample_brownian, BrownianEnsemble};
use bsde_core::catalog::{build_model, Params};
use bsde_core::coefficients::CoefficientProcess;
use bsde_core::diagnostics::Weighting;
use bsde_core::grid::make_grid;
use bsde_core::model::{BsdeModel, GeneratorSpec, TerminalSpec};
use bsde_core::norms::weighted_m2_norm;
use bsde_core::oracle::linear_analytic_solution;
use bsde_core::regression::{Projector, RegressionBasis};
use bsde_core::solver::{solve_direct, solve_picard_y, PicardOptions, SolutionEnsemble};
use bsde_core::weights::{Variant, WeightSpec};
use ndarray::{Array2, Axis};

fn linear_brownian(a: f64, b: f64, c: f64) -> BsdeModel {
    BsdeModel::new(
        "linear",
        1,
        GeneratorSpec::Linear {
            a: CoefficientProcess::constant(a),
            b: vec![CoefficientProcess::constant(b)],
            c: CoefficientProcess::constant(c),
        },
        vec![TerminalSpec::Affine { intercept: 0.5, slope: vec![1.0] }],
        CoefficientProcess::constant(a.abs()),
        CoefficientProcess::constant(b.abs()),
    )
    .unwrap()
}

/// Weighted `M^2` distance of the `y` components.
fn y_error(model: &BsdeModel, sol: &SolutionEnsemble, exact: &SolutionEnsemble, e: &BrownianEnsemble) -> f64 {
    let bound = model.bind(e).unwrap();
    let w = Weighting::for_model(&bound, Variant::A1, &WeightSpec::default()).unwrap();
    let diff = sol.y() - exact.y();
    weighted_m2_norm(diff.view(), &w.weight, e.grid()).unwrap()
}

/// Counts steps of `seq` that increase.
fn increases(seq: &[f64]) -> usize {
    seq.windows(2).filter(|w| w[1] > w[0]).count()
}

#[test]
fn discounted_unit_claim() {
    let model = build_model("discount", &Params::new(), 1).unwrap();
    let e = sample_brownian(&make_grid(1.0, 50).unwrap(), 20_000, 1, 3).unwrap();
    let exact = (-0.1f64).exp();
    let direct = solve_direct(&model, &e, &RegressionBasis::default()).unwrap();
    let (picard, _) = solve_picard_y(
        &model,
        Variant::A1,
        &e,
        &RegressionBasis::default(),
        &WeightSpec::default(),
        &PicardOptions::default(),
    )
    .unwrap();
    for sol in [&direct, &picard] {
        let y0 = sol.initial_value()[0];
        assert!(((y0 - exact) / exact).abs() < 0.02, "{}: {y0}", sol.meta.scheme);
    }
}

#[test]
fn error_shrinks_when_steps_double() {
    let model = linear_brownian(-0.5, 0.5, 0.2);
    let mut errs = Vec::new();
    for n in [2, 4, 8, 16] {
        let e = sample_brownian(&make_grid(1.0, n).unwrap(), 50_000, 1, 11).unwrap();
        let sol = solve_direct(&model, &e, &RegressionBasis::default()).unwrap();
        let exact = linear_analytic_solution(&model, &e).unwrap();
        errs.push(y_error(&model, &sol, &exact, &e));
    }
    println!("steps: {errs:?}");
    assert!(increases(&errs) <= 1, "{errs:?}");
    assert!(errs[3] < errs[0]);
}

#[test]
fn error_shrinks_when_paths_quadruple() {
    let model = linear_brownian(-0.5, 0.5, 0.2);
    let mut errs = Vec::new();
    for m in [500, 2000, 8000, 32_000] {
        let e = sample_brownian(&make_grid(1.0, 40).unwrap(), m, 1, 12).unwrap();
        let sol = solve_direct(&model, &e, &RegressionBasis::default()).unwrap();
        let exact = linear_analytic_solution(&model, &e).unwrap();
        errs.push(y_error(&model, &sol, &exact, &e));
    }
    println!("paths: {errs:?}");
    assert!(increases(&errs) <= 1, "{errs:?}");
    assert!(errs[3] < errs[0]);
}

/// Conditional mean of the one-step residual
/// `y_i - y_{i+1} - f_i dt + z_i dW_i` of the exact solution, averaged over nodes.
fn mean_residual_drift(model: &BsdeModel, n: usize) -> f64 {
    let e = sample_brownian(&make_grid(1.0, n).unwrap(), 50_000, 1, 21).unwrap();
    let exact = linear_analytic_solution(model, &e).unwrap();
    let bound = model.bind(&e).unwrap();
    let basis = RegressionBasis::polynomial(3, 0.0).unwrap();
    let m = e.num_paths();
    let mut total = 0.0;
    for i in 0..n {
        let dt = e.grid().dt(i);
        let mut r = Array2::zeros((m, 1));
        for p in 0..m {
            let (y0, y1) = (exact.y()[[p, i, 0]], exact.y()[[p, i + 1, 0]]);
            let z = exact.z()[[p, i, 0, 0]];
            let mut f = [0.0];
            bound.eval_into(i, p, &[y0], &[z], &mut f);
            r[[p, 0]] = y0 - y1 - f[0] * dt + z * e.increment(p, i, 0);
        }
        let proj = Projector::fit(e.at_node(i), &basis, i).unwrap();
        let fitted = proj.project(e.at_node(i), r.view()).unwrap();
        let rms = (fitted.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
        total += rms;
    }
    total
}

#[test]
fn exact_solution_solves_the_discrete_equation_to_first_order() {
    let model = linear_brownian(-0.5, 0.5, 0.2);
    let coarse = mean_residual_drift(&model, 10);
    let fine = mean_residual_drift(&model, 20);
    println!("residual drift: {coarse} {fine}");
    assert!(fine < 0.7 * coarse, "{coarse} -> {fine}");
}

#[test]
fn martingale_representation_is_recovered() {
    let model = build_model("martingale", &Params::new(), 1).unwrap();
    let e = sample_brownian(&make_grid(1.0, 20).unwrap(), 20_000, 1, 4).unwrap();
    let sol = solve_direct(&model, &e, &RegressionBasis::default()).unwrap();
    let exact = linear_analytic_solution(&model, &e).unwrap();
    for i in 0..=20 {
        let dy = &sol.y().index_axis(Axis(1), i) - &exact.y().index_axis(Axis(1), i);
        let dz = &sol.z().index_axis(Axis(1), i) - &exact.z().index_axis(Axis(1), i);
        let rms = |a: &[f64]| (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt();
        assert!(rms(dy.as_standard_layout().as_slice().unwrap()) < 0.02, "node {i}");
        assert!(rms(dz.as_standard_layout().as_slice().unwrap()) < 0.05, "node {i}");
    }
}
