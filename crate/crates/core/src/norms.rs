//! Monte-Carlo estimators of the weighted norms.
//!
//! * `M^2`-type: `E int_0^T p(t) |phi(t)|^2 dt` (trapezoid in time);
//! * `H^2`-type: `E sup_t p(t) |phi(t)|^2`, with the supremum taken over grid
//!   nodes as the discrete stand-in for the continuous-time sup;
//! * terminal: `E[p(T) |xi|^2]`.

use ndarray::{ArrayView2, ArrayView3, Axis};

use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::weights::{AlphaProcess, WeightProcess};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean and standard error of per-path values, summed in path order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { value: mean, std_err: (var / n).sqrt() }
    }
}

fn check_process(phi: &ArrayView3<f64>, weight: &WeightProcess, grid: &TimeGrid) -> Result<()> {
    let (m, n, _) = phi.dim();
    if (m, n) != (weight.num_paths(), weight.num_nodes()) || n != grid.num_nodes() {
        return Err(BsdeError::ShapeMismatch {
            context: "weighted norm",
            expected: vec![weight.num_paths(), grid.num_nodes()],
            found: vec![m, n],
        });
    }
    Ok(())
}

/// Per-path values of `int_0^T p(t) s(t) |phi(t)|^2 dt`, where `s` is the
/// optional alpha multiplier.
pub fn weighted_path_integrals(
    phi: ArrayView3<f64>,
    weight: &WeightProcess,
    alpha: Option<&AlphaProcess>,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    check_process(&phi, weight, grid)?;
    if let Some(a) = alpha {
        if a.values().dim() != (phi.dim().0, phi.dim().1) {
            return Err(BsdeError::ShapeMismatch {
                context: "alpha multiplier",
                expected: vec![phi.dim().0, phi.dim().1],
                found: a.values().shape().to_vec(),
            });
        }
    }
    let m = phi.dim().0;
    let integrand = |i: usize, out: &mut [f64]| {
        let node = phi.index_axis(Axis(1), i);
        for (p, o) in out.iter_mut().enumerate() {
            let sq: f64 = node.row(p).iter().map(|v| v * v).sum();
            let scale = alpha.map_or(1.0, |a| a.values()[[p, i]]);
            *o = weight.value(p, i) * scale * sq;
        }
    };
    // Trapezoid rule accumulated node by node.
    let mut out = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];
    integrand(0, &mut prev);
    for step in 0..grid.num_steps() {
        integrand(step + 1, &mut cur);
        let h = 0.5 * grid.dt(step);
        for p in 0..m {
            out[p] += h * (prev[p] + cur[p]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(out)
}

/// `E int_0^T p |phi|^2 dt` with its standard error.
pub fn weighted_m2_estimate(phi: ArrayView3<f64>, weight: &WeightProcess, grid: &TimeGrid) -> Result<Estimate> {
    Ok(Estimate::from_samples(&weighted_path_integrals(phi, weight, None, grid)?))
}

/// `E int_0^T p |phi|^2 dt`.
pub fn weighted_m2_norm(phi: ArrayView3<f64>, weight: &WeightProcess, grid: &TimeGrid) -> Result<f64> {
    Ok(weighted_m2_estimate(phi, weight, grid)?.value)
}

/// `E int_0^T p alpha |phi|^2 dt` with its standard error.
pub fn alpha_weighted_m2_estimate(
    phi: ArrayView3<f64>,
    weight: &WeightProcess,
    alpha: &AlphaProcess,
    grid: &TimeGrid,
) -> Result<Estimate> {
    Ok(Estimate::from_samples(&weighted_path_integrals(phi, weight, Some(alpha), grid)?))
}

/// `E max_i p(t_i) |phi(t_i)|^2` with its standard error.
pub fn weighted_h2_estimate(phi: ArrayView3<f64>, weight: &WeightProcess, grid: &TimeGrid) -> Result<Estimate> {
    check_process(&phi, weight, grid)?;
    let mut maxima = vec![0.0f64; phi.dim().0];
    for i in 0..grid.num_nodes() {
        let node = phi.index_axis(Axis(1), i);
        for (p, mx) in maxima.iter_mut().enumerate() {
            let v = weight.value(p, i) * node.row(p).iter().map(|v| v * v).sum::<f64>();
            *mx = mx.max(v);
        }
    }
    Ok(Estimate::from_samples(&maxima))
}

/// `E max_i p(t_i) |phi(t_i)|^2`.
pub fn weighted_h2_norm(phi: ArrayView3<f64>, weight: &WeightProcess, grid: &TimeGrid) -> Result<f64> {
    Ok(weighted_h2_estimate(phi, weight, grid)?.value)
}

/// `E[p(T) |xi|^2]` for terminal samples of shape `(M, d)`.
pub fn weighted_terminal_estimate(xi: ArrayView2<f64>, weight: &WeightProcess) -> Result<Estimate> {
    if xi.nrows() != weight.num_paths() {
        return Err(BsdeError::ShapeMismatch {
            context: "terminal norm",
            expected: vec![weight.num_paths()],
            found: vec![xi.nrows()],
        });
    }
    let vals: Vec<f64> = xi
        .rows()
        .into_iter()
        .enumerate()
        .map(|(m, row)| weight.terminal(m) * row.iter().map(|v| v * v).sum::<f64>())
        .collect();
    Ok(Estimate::from_samples(&vals))
}

/// `E[p(T) |xi|^2]`.
pub fn weighted_terminal_norm(xi: ArrayView2<f64>, weight: &WeightProcess) -> Result<f64> {
    Ok(weighted_terminal_estimate(xi, weight)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_brownian;
    use crate::grid::make_grid;
    use ndarray::{Array2, Array3};
    use std::f64::consts::E;

    fn unit_alpha_weight(paths: usize, grid: &TimeGrid) -> WeightProcess {
        WeightProcess::deterministic(paths, grid.nodes())
    }

    #[test]
    fn zero_process_has_zero_norms() {
        let g = make_grid(1.0, 10).unwrap();
        let w = unit_alpha_weight(5, &g);
        let phi = Array3::<f64>::zeros((5, 11, 2));
        assert_eq!(weighted_m2_norm(phi.view(), &w, &g).unwrap(), 0.0);
        assert_eq!(weighted_h2_norm(phi.view(), &w, &g).unwrap(), 0.0);
        assert_eq!(weighted_terminal_norm(Array2::zeros((5, 1)).view(), &w).unwrap(), 0.0);
    }

    #[test]
    fn unit_process_m2_norm_approaches_e_minus_one() {
        // Closed form: int_0^1 e^t dt = e - 1.
        let exact = E - 1.0;
        let mut errors = Vec::new();
        for n in [10, 20, 40] {
            let g = make_grid(1.0, n).unwrap();
            let w = unit_alpha_weight(3, &g);
            let phi = Array3::<f64>::ones((3, n + 1, 1));
            errors.push((weighted_m2_norm(phi.view(), &w, &g).unwrap() - exact).abs());
        }
        assert!(errors[0] < 2e-3);
        // Second order: halving the step cuts the error by ~4.
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn unit_process_h2_norm_is_terminal_weight() {
        let g = make_grid(1.0, 16).unwrap();
        let w = unit_alpha_weight(3, &g);
        let phi = Array3::<f64>::ones((3, 17, 1));
        assert!((weighted_h2_norm(phi.view(), &w, &g).unwrap() - E).abs() < 1e-12);
        let xi = Array2::<f64>::ones((3, 1));
        assert!((weighted_terminal_norm(xi.view(), &w).unwrap() - E).abs() < 1e-12);
    }

    #[test]
    fn terminal_norm_of_brownian_endpoint() {
        // Deterministic weight e^T and E W(T)^2 = T give e at T = 1.
        let g = make_grid(1.0, 4).unwrap();
        let m = 100_000;
        let e = sample_brownian(&g, m, 1, 8).unwrap();
        let w = unit_alpha_weight(m, &g);
        let xi = e.at_node(4).to_owned();
        let est = weighted_terminal_estimate(xi.view(), &w).unwrap();
        assert!((est.value - E).abs() < 3.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn h2_dominates_any_node() {
        let g = make_grid(1.0, 20).unwrap();
        let m = 2000;
        let e = sample_brownian(&g, m, 1, 4).unwrap();
        let w = unit_alpha_weight(m, &g);
        let h2 = weighted_h2_norm(e.values().view(), &w, &g).unwrap();
        for i in 0..=20 {
            let at_node = (0..m).map(|p| w.value(p, i) * e.values()[[p, i, 0]].powi(2)).sum::<f64>() / m as f64;
            assert!(h2 >= at_node);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = make_grid(1.0, 4).unwrap();
        let w = unit_alpha_weight(3, &g);
        let phi = Array3::<f64>::zeros((4, 5, 1));
        assert!(matches!(weighted_m2_norm(phi.view(), &w, &g), Err(BsdeError::ShapeMismatch { .. })));
        let phi = Array3::<f64>::zeros((3, 4, 1));
        assert!(weighted_h2_norm(phi.view(), &w, &g).is_err());
        assert!(weighted_terminal_norm(Array2::zeros((2, 1)).view(), &w).is_err());
    }
}
