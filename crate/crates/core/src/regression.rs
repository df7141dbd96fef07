//! Least-squares Monte-Carlo conditional expectations.
//!
//! `E[target | state]` is approximated by projecting per-path targets onto a
//! basis of functions of the state, fitted on the whole ensemble. Regressors
//! are standardised per column; columns with zero spread (e.g. `W(0)`) drop
//! out, leaving the constant function. The constant function is never
//! penalised by the ridge term, so constant targets are reproduced exactly.

use nalgebra::{DMatrix, Dyn};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{BsdeError, Result};

const CHUNK: usize = 2048;

/// Family of basis functions in the (standardised) regressors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// Products of probabilists' Hermite polynomials with total degree `<= degree`.
    Polynomial { degree: usize },
    /// Indicators of `bins` equal-width cells on `[-3, 3]` per component,
    /// with the outer cells absorbing the tails.
    Piecewise { bins: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionBasis {
    pub kind: BasisKind,
    pub ridge: f64,
}

impl RegressionBasis {
    pub fn polynomial(degree: usize, ridge: f64) -> Result<Self> {
        Self::new(BasisKind::Polynomial { degree }, ridge)
    }

    pub fn piecewise(bins: usize, ridge: f64) -> Result<Self> {
        Self::new(BasisKind::Piecewise { bins }, ridge)
    }

    pub fn new(kind: BasisKind, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(BsdeError::invalid(format!("ridge must be nonnegative, got {ridge}")));
        }
        if let BasisKind::Piecewise { bins: 0 } = kind {
            return Err(BsdeError::invalid("piecewise basis needs at least one bin"));
        }
        Ok(Self { kind, ridge })
    }
}

impl Default for RegressionBasis {
    /// Cubic Hermite basis with ridge `1e-8`.
    fn default() -> Self {
        Self { kind: BasisKind::Polynomial { degree: 3 }, ridge: 1e-8 }
    }
}

fn multi_indices(dims: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, dims: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dims {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(prefix, dims, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), dims, degree, &mut out);
    // Constant first; remaining order is fixed by the recursion.
    out.sort_by_key(|ix| ix.iter().sum::<usize>());
    out
}

/// A regression fitted on one set of regressors, reusable for many targets.
#[derive(Debug, Clone)]
pub struct Projector {
    node: usize,
    kind: BasisKind,
    /// `(column, mean, std)` of the active regressor columns.
    active: Vec<(usize, f64, f64)>,
    exponents: Vec<Vec<usize>>,
    num_functions: usize,
    max_degree: usize,
    ridge: f64,
    chol: nalgebra::Cholesky<f64, Dyn>,
}

impl Projector {
    /// Fits the normal equations on `regressors` (shape `(M, q)`).
    ///
    /// `node` only labels errors.
    pub fn fit(regressors: ArrayView2<f64>, basis: &RegressionBasis, node: usize) -> Result<Self> {
        let m = regressors.nrows();
        let mut active = Vec::new();
        for (c, col) in regressors.columns().into_iter().enumerate() {
            let mean = col.iter().sum::<f64>() / m as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
            let std = var.sqrt();
            if std > 1e-14 * (1.0 + mean.abs()) {
                active.push((c, mean, std));
            }
        }
        let (exponents, num_functions, max_degree) = match basis.kind {
            BasisKind::Polynomial { degree } => {
                let ex = multi_indices(active.len(), degree);
                let n = ex.len();
                (ex, n, degree)
            }
            BasisKind::Piecewise { bins } => {
                let n = (0..active.len()).fold(1usize, |acc, _| acc.saturating_mul(bins));
                (Vec::new(), n, 0)
            }
        };
        if m < num_functions + 1 {
            return Err(BsdeError::InsufficientPaths { needed: num_functions + 1, got: m });
        }
        let mut proj = Self {
            node,
            kind: basis.kind,
            active,
            exponents,
            num_functions,
            max_degree,
            ridge: basis.ridge,
            // Placeholder replaced below.
            chol: DMatrix::<f64>::identity(1, 1).cholesky().expect("identity is positive definite"),
        };
        let p = num_functions;
        let x = proj.design(regressors);
        let g = x.t().dot(&x);
        let mut gram = DMatrix::<f64>::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                gram[(a, b)] = g[[a, b]] / m as f64;
            }
            if !proj.is_constant_function(a) {
                gram[(a, a)] += basis.ridge;
            }
        }
        proj.chol = gram
            .cholesky()
            .ok_or(BsdeError::RegressionSingular { node, ridge: basis.ridge })?;
        Ok(proj)
    }

    pub fn num_functions(&self) -> usize {
        self.num_functions
    }

    fn is_constant_function(&self, a: usize) -> bool {
        match self.kind {
            BasisKind::Polynomial { .. } => a == 0,
            BasisKind::Piecewise { .. } => false,
        }
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.active.len() * (self.max_degree + 1)]
    }

    /// Basis values at one regressor row.
    fn features(&self, x: ArrayView1<f64>, phi: &mut [f64], scratch: &mut [f64]) {
        match self.kind {
            BasisKind::Polynomial { .. } => {
                let stride = self.max_degree + 1;
                for (a, &(c, mean, std)) in self.active.iter().enumerate() {
                    let u = (x[c] - mean) / std;
                    let h = &mut scratch[a * stride..(a + 1) * stride];
                    h[0] = 1.0;
                    if stride > 1 {
                        h[1] = u;
                    }
                    for n in 1..self.max_degree {
                        h[n + 1] = u * h[n] - n as f64 * h[n - 1];
                    }
                }
                for (f, ex) in phi.iter_mut().zip(&self.exponents) {
                    *f = ex
                        .iter()
                        .enumerate()
                        .map(|(a, &e)| scratch[a * stride + e])
                        .product();
                }
            }
            BasisKind::Piecewise { bins } => {
                let mut cell = 0usize;
                for &(c, mean, std) in self.active.iter().rev() {
                    let u = (x[c] - mean) / std;
                    let b = (((u + 3.0) / 6.0) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
                    cell = cell * bins + b;
                }
                phi.fill(0.0);
                phi[cell] = 1.0;
            }
        }
    }

    /// Basis functions evaluated on every row, shape `(M, P)`.
    pub fn design(&self, regressors: ArrayView2<f64>) -> Array2<f64> {
        let m = regressors.nrows();
        let p = self.num_functions;
        let mut x = Array2::zeros((m, p));
        x.as_slice_mut()
            .expect("fresh array")
            .par_chunks_mut(CHUNK * p)
            .enumerate()
            .for_each(|(c, block)| {
                let mut scratch = self.scratch();
                for (r, phi) in block.chunks_mut(p).enumerate() {
                    self.features(regressors.row(c * CHUNK + r), phi, &mut scratch);
                }
            });
        x
    }

    fn check_rows(&self, rows: usize, targets: &ArrayView2<f64>) -> Result<()> {
        if rows != targets.nrows() {
            return Err(BsdeError::ShapeMismatch {
                context: "regression targets",
                expected: vec![rows],
                found: vec![targets.nrows()],
            });
        }
        Ok(())
    }

    /// Coefficients, shape `(P, R)`, from a precomputed design matrix.
    pub fn coefficients_with(&self, design: &Array2<f64>, targets: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_rows(design.nrows(), &targets)?;
        let (m, r) = targets.dim();
        let p = self.num_functions;
        let xt = design.t().dot(&targets);
        let mut rhs = DMatrix::<f64>::zeros(p, r);
        for a in 0..p {
            for t in 0..r {
                rhs[(a, t)] = xt[[a, t]] / m as f64;
            }
        }
        if let BasisKind::Piecewise { .. } = self.kind {
            // Cells sum to one, so shrinking towards the sample mean keeps
            // constants exact and fills empty cells with the mean.
            for t in 0..r {
                let mean = targets.column(t).sum() / m as f64;
                for a in 0..p {
                    rhs[(a, t)] += self.ridge * mean;
                }
            }
        }
        let beta = self.chol.solve(&rhs);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(BsdeError::NonFinite { what: "regression coefficients", node: self.node });
        }
        Ok(Array2::from_shape_fn((p, r), |(a, t)| beta[(a, t)]))
    }

    /// Fitted values, shape `(M, R)`, from a precomputed design matrix.
    pub fn project_with(&self, design: &Array2<f64>, targets: ArrayView2<f64>) -> Result<Array2<f64>> {
        let beta = self.coefficients_with(design, targets)?;
        Ok(design.dot(&beta))
    }

    /// Regression coefficients, shape `(P, R)`, for targets of shape `(M, R)`.
    pub fn coefficients(&self, regressors: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_rows(regressors.nrows(), &targets)?;
        self.coefficients_with(&self.design(regressors), targets)
    }

    /// Fitted conditional expectations, shape `(M, R)`.
    pub fn project(&self, regressors: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_rows(regressors.nrows(), &targets)?;
        self.project_with(&self.design(regressors), targets)
    }
}

/// Least-squares estimate of `E[targets | regressors]`, one row per path.
pub fn conditional_expectation(
    targets: ArrayView2<f64>,
    regressors: ArrayView2<f64>,
    basis: &RegressionBasis,
) -> Result<Array2<f64>> {
    Projector::fit(regressors, basis, 0)?.project(regressors, targets)
}
