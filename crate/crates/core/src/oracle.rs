//! Closed-form solutions of scalar linear BSDEs
//! `f(t, y, z) = a y + b . z + c` with constant coefficients.
//!
//! With `tau = T - t`, the drift `b` is absorbed by a change of measure that
//! shifts the terminal Brownian argument by `b tau`:
//!
//! `y(t) = e^{a tau} E[g(W(t) + b tau + sqrt(tau) N)] + c (e^{a tau} - 1)/a`,
//!
//! and `z(t)` is the spatial gradient of `y(t)` in `W(t)`.

use crate::brownian::BrownianEnsemble;
use crate::error::{BsdeError, Result};
use crate::layout::{zeros3, zeros4};
use crate::model::{BsdeModel, GeneratorSpec, TerminalSpec};
use crate::solver::{Scheme, SolutionEnsemble, SolutionMeta};

fn unavailable(what: &str) -> BsdeError {
    BsdeError::OracleUnavailable(what.to_string())
}

/// Constant `(a, b, c)` of a linear scalar generator.
fn linear_coefficients(g: &GeneratorSpec, k: usize) -> Result<(f64, Vec<f64>, f64)> {
    match g {
        GeneratorSpec::Zero => Ok((0.0, vec![0.0; k], 0.0)),
        GeneratorSpec::Constant(v) => Ok((0.0, vec![0.0; k], v[0])),
        GeneratorSpec::Linear { a, b, c } => {
            let a = a.as_constant().ok_or_else(|| unavailable("coefficient a is not constant"))?;
            let b = b
                .iter()
                .map(|p| p.as_constant().ok_or_else(|| unavailable("coefficient b is not constant")))
                .collect::<Result<Vec<_>>>()?;
            let c = c.as_constant().ok_or_else(|| unavailable("coefficient c is not constant"))?;
            Ok((a, b, c))
        }
        GeneratorSpec::Shifted { base, shift } => {
            let (a, b, c) = linear_coefficients(base, k)?;
            let s = shift.as_constant().ok_or_else(|| unavailable("generator shift is not constant"))?;
            Ok((a, b, c + s))
        }
        GeneratorSpec::SinClip { .. } => Err(unavailable("generator is not linear")),
    }
}

/// `E[g(w + shift + sqrt(tau) N)]` and its gradient in `w`.
fn shifted_expectation(g: &TerminalSpec, w: &[f64], shift: &[f64], tau: f64, grad: &mut [f64]) -> Result<f64> {
    match g {
        TerminalSpec::Constant(v) => {
            grad.fill(0.0);
            Ok(*v)
        }
        TerminalSpec::Affine { intercept, slope } => {
            grad.copy_from_slice(slope);
            Ok(intercept + slope.iter().zip(w.iter().zip(shift)).map(|(s, (w, h))| s * (w + h)).sum::<f64>())
        }
        TerminalSpec::Exp { scale, sigma } => {
            let drift: f64 = sigma.iter().zip(w.iter().zip(shift)).map(|(s, (w, h))| s * (w + h)).sum();
            let var: f64 = sigma.iter().map(|s| s * s).sum::<f64>() * tau;
            let v = scale * (drift + 0.5 * var).exp();
            for (gl, s) in grad.iter_mut().zip(sigma) {
                *gl = s * v;
            }
            Ok(v)
        }
        TerminalSpec::Shifted { base, offset } => Ok(shifted_expectation(base, w, shift, tau, grad)? + offset),
        _ => Err(unavailable("terminal condition has no closed form under a drift shift")),
    }
}

/// Analytic `(y, z)` on every `(path, node)` of the ensemble.
pub fn linear_analytic_solution(model: &BsdeModel, ensemble: &BrownianEnsemble) -> Result<SolutionEnsemble> {
    if model.dim_y() != 1 {
        return Err(unavailable("only scalar equations (d = 1) are covered"));
    }
    let k = model.dim_w();
    if ensemble.dim() != k {
        return Err(BsdeError::ShapeMismatch {
            context: "Brownian dimension",
            expected: vec![k],
            found: vec![ensemble.dim()],
        });
    }
    let (a, b, c) = linear_coefficients(&model.generator, k)?;
    let g = &model.terminal[0];
    let grid = ensemble.grid();
    let (m, n) = (ensemble.num_paths(), grid.num_nodes());
    let horizon = grid.horizon();
    let xi = model.terminal_samples(ensemble)?;
    let mut y = zeros3(m, n, 1);
    let mut z = zeros4(m, n, 1, k);
    let mut w = vec![0.0; k];
    let mut shift = vec![0.0; k];
    let mut grad = vec![0.0; k];
    for i in 0..n {
        let tau = (horizon - grid.time(i)).max(0.0);
        let growth = (a * tau).exp();
        let source = if a == 0.0 { c * tau } else { c * (a * tau).exp_m1() / a };
        for (h, bl) in shift.iter_mut().zip(&b) {
            *h = bl * tau;
        }
        for p in 0..m {
            for (l, wl) in w.iter_mut().enumerate() {
                *wl = ensemble.values()[[p, i, l]];
            }
            let e = shifted_expectation(g, &w, &shift, tau, &mut grad)?;
            y[[p, i, 0]] = if i + 1 == n { xi[[p, 0]] } else { growth * e + source };
            for l in 0..k {
                z[[p, i, 0, l]] = growth * grad[l];
            }
        }
    }
    let meta = SolutionMeta {
        scheme: Scheme::Analytic,
        variant: None,
        iterations: 0,
        inner_iterations: 0,
        converged: true,
        seed: ensemble.seed(),
    };
    SolutionEnsemble::new(grid.clone(), y, z, meta)
}
