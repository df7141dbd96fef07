//! Adapted coefficient processes evaluated on a Brownian ensemble.

use ndarray::Array2;

use crate::brownian::BrownianEnsemble;
use crate::error::{BsdeError, Result};

/// How a coefficient process is built from the driving Brownian paths.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Constant(f64),
    /// `scale * |W^1(t)|`
    AbsBrownian { scale: f64 },
    /// `scale * W^1(t)^2`
    SquaredBrownian { scale: f64 },
    /// `|X(t)|` for the Ornstein-Uhlenbeck process
    /// `dX = rate (mean - X) dt + vol dW^1`, `X(0) = mean`, stepped with Euler.
    OuDriven { mean: f64, rate: f64, vol: f64 },
    /// Explicit samples indexed `(path, node)`.
    Table(Array2<f64>),
}

/// A scalar process such as `c1`, `c2`, `gamma` or a linear coefficient.
///
/// Evaluation at `(path, node)` only reads the path up to that node, so the
/// sampled table is adapted to the Brownian filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProcess {
    pub kind: ProcessKind,
    /// Evaluation rejects negative samples when set.
    pub nonneg: bool,
}

impl CoefficientProcess {
    pub fn new(kind: ProcessKind, nonneg: bool) -> Self {
        Self { kind, nonneg }
    }

    /// Constant process; flagged nonnegative when `value >= 0`.
    pub fn constant(value: f64) -> Self {
        Self::new(ProcessKind::Constant(value), value >= 0.0)
    }

    pub fn abs_brownian(scale: f64) -> Self {
        Self::new(ProcessKind::AbsBrownian { scale }, true)
    }

    pub fn squared_brownian(scale: f64) -> Self {
        Self::new(ProcessKind::SquaredBrownian { scale }, true)
    }

    pub fn ou_driven(mean: f64, rate: f64, vol: f64) -> Self {
        Self::new(ProcessKind::OuDriven { mean, rate, vol }, true)
    }

    pub fn table(samples: Array2<f64>, nonneg: bool) -> Self {
        Self::new(ProcessKind::Table(samples), nonneg)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Value of a constant process, if it is one.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            ProcessKind::Constant(v) => Some(v),
            _ => None,
        }
    }

    /// Samples the process on every `(path, node)` of the ensemble.
    pub fn sample(&self, ensemble: &BrownianEnsemble) -> Result<Array2<f64>> {
        self.sample_named("coefficient", ensemble)
    }

    /// Same as [`sample`](Self::sample), naming the process in errors.
    pub fn sample_named(&self, name: &str, ensemble: &BrownianEnsemble) -> Result<Array2<f64>> {
        let m = ensemble.num_paths();
        let n = ensemble.grid().num_nodes();
        let w = ensemble.values();
        // Built as (node, path) and transposed, which leaves node slices contiguous.
        let t = match &self.kind {
            ProcessKind::Constant(v) => Array2::from_elem((n, m), *v),
            ProcessKind::AbsBrownian { scale } => {
                Array2::from_shape_fn((n, m), |(i, p)| scale * w[[p, i, 0]].abs())
            }
            ProcessKind::SquaredBrownian { scale } => {
                Array2::from_shape_fn((n, m), |(i, p)| scale * w[[p, i, 0]].powi(2))
            }
            ProcessKind::OuDriven { mean, rate, vol } => {
                let grid = ensemble.grid();
                let mut out = Array2::zeros((n, m));
                let mut x = vec![*mean; m];
                out.row_mut(0).fill(mean.abs());
                for i in 0..grid.num_steps() {
                    let dt = grid.dt(i);
                    for (p, xp) in x.iter_mut().enumerate() {
                        *xp += rate * (mean - *xp) * dt + vol * ensemble.increment(p, i, 0);
                        out[[i + 1, p]] = xp.abs();
                    }
                }
                out
            }
            ProcessKind::Table(t) => {
                if t.dim() != (m, n) {
                    return Err(BsdeError::ShapeMismatch {
                        context: "coefficient table",
                        expected: vec![m, n],
                        found: t.shape().to_vec(),
                    });
                }
                t.t().as_standard_layout().into_owned()
            }
        };
        for ((i, p), v) in t.indexed_iter() {
            if !v.is_finite() {
                return Err(BsdeError::invalid(format!(
                    "coefficient `{name}` is not finite at path {p}, node {i}"
                )));
            }
            if self.nonneg && *v < 0.0 {
                return Err(BsdeError::NegativeCoefficient {
                    name: name.to_string(),
                    path: p,
                    node: i,
                    value: *v,
                });
            }
        }
        let out = t.reversed_axes();
        Ok(out)
    }
}
