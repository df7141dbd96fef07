//! BSDE instances: generator, terminal condition and declared Lipschitz moduli.

use ndarray::{Array2, ArrayView2};

use crate::brownian::BrownianEnsemble;
use crate::coefficients::CoefficientProcess;
use crate::error::{BsdeError, Result};

/// The generator `f(t, y, z)`, applied componentwise to `y in R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Zero,
    /// `f = v`, one entry per component of `y`.
    Constant(Vec<f64>),
    /// `f_j = a(t) y_j + sum_l b_l(t) z_{jl} + c(t)`.
    Linear {
        a: CoefficientProcess,
        b: Vec<CoefficientProcess>,
        c: CoefficientProcess,
    },
    /// `f_j = offset(t) + c1(t) sin(y_j) + c2(t) clip(z_{j0}, -clip, clip)`.
    ///
    /// Lipschitz in `y` with modulus `c1` and in `z` with modulus `c2`.
    SinClip {
        offset: CoefficientProcess,
        c1: CoefficientProcess,
        c2: CoefficientProcess,
        clip: f64,
    },
    /// `f = base + shift(t)`.
    Shifted {
        base: Box<GeneratorSpec>,
        shift: CoefficientProcess,
    },
}

/// One component of the terminal condition `xi`.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalSpec {
    Constant(f64),
    /// `intercept + slope . W(T)`
    Affine { intercept: f64, slope: Vec<f64> },
    /// `scale * exp(sigma . W(T))`
    Exp { scale: f64, sigma: Vec<f64> },
    /// `exp(coef * |W(T)|^2)`; has no second moment once `coef >= 1/(4T)`.
    ExpSquare { coef: f64 },
    /// `amplitude * sin(frequency * W^1(T))`
    Sin { amplitude: f64, frequency: f64 },
    /// `scale * max_{t <= T} W^1(t)` over grid nodes
    RunningMax { scale: f64 },
    /// `max(W^1(T) - strike, 0)`
    Call { strike: f64 },
    /// `base + offset`
    Shifted { base: Box<TerminalSpec>, offset: f64 },
}

impl TerminalSpec {
    /// Evaluates on one path, given as `(node, component)` values.
    pub fn eval(&self, path: ArrayView2<f64>) -> f64 {
        let last = path.row(path.nrows() - 1);
        match self {
            TerminalSpec::Constant(v) => *v,
            TerminalSpec::Affine { intercept, slope } => {
                intercept + slope.iter().zip(last.iter()).map(|(s, w)| s * w).sum::<f64>()
            }
            TerminalSpec::Exp { scale, sigma } => {
                scale * sigma.iter().zip(last.iter()).map(|(s, w)| s * w).sum::<f64>().exp()
            }
            TerminalSpec::ExpSquare { coef } => (coef * last.iter().map(|w| w * w).sum::<f64>()).exp(),
            TerminalSpec::Sin { amplitude, frequency } => amplitude * (frequency * last[0]).sin(),
            TerminalSpec::RunningMax { scale } => {
                scale * path.column(0).iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            TerminalSpec::Call { strike } => (last[0] - strike).max(0.0),
            TerminalSpec::Shifted { base, offset } => base.eval(path) + offset,
        }
    }

    fn check_dim(&self, k: usize) -> Result<()> {
        match self {
            TerminalSpec::Affine { slope: v, .. } | TerminalSpec::Exp { sigma: v, .. } if v.len() != k => {
                Err(BsdeError::invalid(format!(
                    "terminal coefficient vector has length {}, Brownian dimension is {k}",
                    v.len()
                )))
            }
            TerminalSpec::Shifted { base, .. } => base.check_dim(k),
            _ => Ok(()),
        }
    }
}

/// A BSDE `y(t) = xi + int_t^T f(s, y, z) ds - int_t^T z dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsdeModel {
    pub name: String,
    dim_y: usize,
    dim_w: usize,
    pub generator: GeneratorSpec,
    pub terminal: Vec<TerminalSpec>,
    /// Declared Lipschitz modulus in `y`.
    pub c1: CoefficientProcess,
    /// Declared Lipschitz modulus in `z`.
    pub c2: CoefficientProcess,
}

impl BsdeModel {
    /// Builds a model; `terminal` has one entry per component of `y`.
    pub fn new(
        name: impl Into<String>,
        dim_w: usize,
        generator: GeneratorSpec,
        terminal: Vec<TerminalSpec>,
        c1: CoefficientProcess,
        c2: CoefficientProcess,
    ) -> Result<Self> {
        let dim_y = terminal.len();
        if dim_y == 0 || dim_w == 0 {
            return Err(BsdeError::invalid("model dimensions d and k must be positive"));
        }
        for t in &terminal {
            t.check_dim(dim_w)?;
        }
        check_generator(&generator, dim_y, dim_w)?;
        if !c1.nonneg || !c2.nonneg {
            return Err(BsdeError::invalid("declared Lipschitz moduli c1, c2 must be nonnegative"));
        }
        Ok(Self {
            name: name.into(),
            dim_y,
            dim_w,
            generator,
            terminal,
            c1,
            c2,
        })
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    /// Replaces the declared moduli without touching the generator.
    pub fn with_declared_moduli(mut self, c1: CoefficientProcess, c2: CoefficientProcess) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    /// Same model with `f` replaced by `f + shift`.
    pub fn shift_generator(&self, shift: CoefficientProcess) -> Self {
        let mut out = self.clone();
        out.generator = GeneratorSpec::Shifted {
            base: Box::new(self.generator.clone()),
            shift,
        };
        out
    }

    /// Same model with every terminal component shifted by `offset`.
    pub fn shift_terminal(&self, offset: f64) -> Self {
        let mut out = self.clone();
        out.terminal = self
            .terminal
            .iter()
            .map(|t| TerminalSpec::Shifted { base: Box::new(t.clone()), offset })
            .collect();
        out
    }

    /// Terminal samples `xi`, shape `(M, d)`.
    pub fn terminal_samples(&self, ensemble: &BrownianEnsemble) -> Result<Array2<f64>> {
        self.check_ensemble(ensemble)?;
        let m = ensemble.num_paths();
        let mut out = Array2::zeros((m, self.dim_y));
        for p in 0..m {
            let path = ensemble.path(p);
            for (j, t) in self.terminal.iter().enumerate() {
                out[[p, j]] = t.eval(path);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_ensemble(&self, ensemble: &BrownianEnsemble) -> Result<()> {
        if ensemble.dim() != self.dim_w {
            return Err(BsdeError::ShapeMismatch {
                context: "Brownian dimension",
                expected: vec![self.dim_w],
                found: vec![ensemble.dim()],
            });
        }
        Ok(())
    }

    /// Samples every coefficient on the ensemble.
    pub fn bind<'a>(&'a self, ensemble: &'a BrownianEnsemble) -> Result<BoundModel<'a>> {
        self.check_ensemble(ensemble)?;
        Ok(BoundModel {
            model: self,
            ensemble,
            generator: BoundGenerator::new(&self.generator, ensemble)?,
            c1: self.c1.sample_named("c1", ensemble)?,
            c2: self.c2.sample_named("c2", ensemble)?,
        })
    }
}

fn check_generator(g: &GeneratorSpec, d: usize, k: usize) -> Result<()> {
    match g {
        GeneratorSpec::Constant(v) if v.len() != d => Err(BsdeError::invalid(format!(
            "constant generator has {} entries, expected d = {d}",
            v.len()
        ))),
        GeneratorSpec::Linear { b, .. } if b.len() != k => Err(BsdeError::invalid(format!(
            "linear generator has {} z-coefficients, expected k = {k}",
            b.len()
        ))),
        GeneratorSpec::SinClip { clip, .. } if !(*clip > 0.0) => {
            Err(BsdeError::invalid("clip level must be positive"))
        }
        GeneratorSpec::Shifted { base, .. } => check_generator(base, d, k),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
enum BoundGenerator {
    Zero,
    Constant(Vec<f64>),
    Linear { a: Array2<f64>, b: Vec<Array2<f64>>, c: Array2<f64> },
    SinClip { offset: Array2<f64>, c1: Array2<f64>, c2: Array2<f64>, clip: f64 },
    Shifted { base: Box<BoundGenerator>, shift: Array2<f64> },
}

impl BoundGenerator {
    fn new(spec: &GeneratorSpec, e: &BrownianEnsemble) -> Result<Self> {
        Ok(match spec {
            GeneratorSpec::Zero => BoundGenerator::Zero,
            GeneratorSpec::Constant(v) => BoundGenerator::Constant(v.clone()),
            GeneratorSpec::Linear { a, b, c } => BoundGenerator::Linear {
                a: a.sample_named("a", e)?,
                b: b.iter().map(|p| p.sample_named("b", e)).collect::<Result<_>>()?,
                c: c.sample_named("c", e)?,
            },
            GeneratorSpec::SinClip { offset, c1, c2, clip } => BoundGenerator::SinClip {
                offset: offset.sample_named("offset", e)?,
                c1: c1.sample_named("c1", e)?,
                c2: c2.sample_named("c2", e)?,
                clip: *clip,
            },
            GeneratorSpec::Shifted { base, shift } => BoundGenerator::Shifted {
                base: Box::new(BoundGenerator::new(base, e)?),
                shift: shift.sample_named("shift", e)?,
            },
        })
    }

    /// `out[j] = f_j(t_node, y, z)` with `z` flattened row-major as `(d, k)`.
    fn eval_into(&self, node: usize, path: usize, y: &[f64], z: &[f64], k: usize, out: &mut [f64]) {
        match self {
            BoundGenerator::Zero => out.fill(0.0),
            BoundGenerator::Constant(v) => out.copy_from_slice(v),
            BoundGenerator::Linear { a, b, c } => {
                let (a, c) = (a[[path, node]], c[[path, node]]);
                for (j, o) in out.iter_mut().enumerate() {
                    let bz: f64 = b.iter().enumerate().map(|(l, bl)| bl[[path, node]] * z[j * k + l]).sum();
                    *o = a * y[j] + bz + c;
                }
            }
            BoundGenerator::SinClip { offset, c1, c2, clip } => {
                let (h, u, v) = (offset[[path, node]], c1[[path, node]], c2[[path, node]]);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = h + u * y[j].sin() + v * z[j * k].clamp(-clip, *clip);
                }
            }
            BoundGenerator::Shifted { base, shift } => {
                base.eval_into(node, path, y, z, k, out);
                let s = shift[[path, node]];
                out.iter_mut().for_each(|o| *o += s);
            }
        }
    }
}

/// A model with all coefficient processes sampled on one ensemble.
#[derive(Debug, Clone)]
pub struct BoundModel<'a> {
    model: &'a BsdeModel,
    ensemble: &'a BrownianEnsemble,
    generator: BoundGenerator,
    c1: Array2<f64>,
    c2: Array2<f64>,
}

impl<'a> BoundModel<'a> {
    pub fn model(&self) -> &'a BsdeModel {
        self.model
    }

    pub fn ensemble(&self) -> &'a BrownianEnsemble {
        self.ensemble
    }

    /// Sampled declared moduli `(c1, c2)`.
    pub fn moduli(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.c1, &self.c2)
    }

    /// Unchecked evaluation into a caller buffer; `z` is `(d, k)` row-major.
    #[inline]
    pub fn eval_into(&self, node: usize, path: usize, y: &[f64], z: &[f64], out: &mut [f64]) {
        self.generator.eval_into(node, path, y, z, self.model.dim_w(), out);
    }
}

/// `f(t_node, y, z)` on one path; `z` is flattened `(d, k)` row-major.
pub fn eval_generator(bound: &BoundModel<'_>, node: usize, path: usize, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let (d, k) = (bound.model.dim_y(), bound.model.dim_w());
    if y.len() != d || z.len() != d * k {
        return Err(BsdeError::ShapeMismatch {
            context: "generator arguments",
            expected: vec![d, d * k],
            found: vec![y.len(), z.len()],
        });
    }
    if path >= bound.ensemble.num_paths() || node >= bound.ensemble.grid().num_nodes() {
        return Err(BsdeError::invalid(format!("(path {path}, node {node}) is outside the ensemble")));
    }
    let mut out = vec![0.0; d];
    bound.eval_into(node, path, y, z, &mut out);
    Ok(out)
}
