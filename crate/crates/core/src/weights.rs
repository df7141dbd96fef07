//! Weight parameters, the alpha processes and the exponential weights
//! `p(t) = exp(int_0^t alpha(s) ds)` that define the weighted spaces.

use std::fmt;

use ndarray::Array2;

use crate::brownian::BrownianEnsemble;
use crate::coefficients::CoefficientProcess;
use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::layout::{to_node_major2, zeros2};

/// Which family of sufficient conditions (and hence which weight) is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `alpha_1 = gamma + beta1 c1^2 + beta2 c2^2`
    A1,
    /// `alpha_2 = gamma_bar + beta1_bar c1 + beta2_bar c2^2`
    A2,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::A1 => write!(f, "A1"),
            Variant::A2 => write!(f, "A2"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = BsdeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" | "a1" => Ok(Variant::A1),
            "A2" | "a2" => Ok(Variant::A2),
            other => Err(BsdeError::invalid(format!("unknown variant `{other}` (expected A1 or A2)"))),
        }
    }
}

/// Smallest admissible `beta2_bar` for a given `beta1_bar > 4`:
/// `90 beta1_bar^2 / (beta1_bar^2 - 16)`.
pub fn min_beta2(beta1_bar: f64) -> Result<f64> {
    if !(beta1_bar > 4.0) || !beta1_bar.is_finite() {
        return Err(BsdeError::invalid(format!(
            "threshold undefined: beta1_bar must exceed 4, got {beta1_bar}"
        )));
    }
    let b2 = beta1_bar * beta1_bar;
    Ok(90.0 * b2 / (b2 - 16.0))
}

/// The constants `beta1, beta2` (A1) and `beta1_bar, beta2_bar` (A2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    beta1: f64,
    beta2: f64,
    beta1_bar: f64,
    beta2_bar: f64,
}

impl WeightParams {
    /// Validates `beta1 > 1`, `beta2 > 1`, `beta1_bar > 4` and
    /// `beta2_bar > 90 beta1_bar^2 / (beta1_bar^2 - 16)`.
    pub fn new(beta1: f64, beta2: f64, beta1_bar: f64, beta2_bar: f64) -> Result<Self> {
        if !(beta1 > 1.0 && beta1.is_finite()) {
            return Err(BsdeError::invalid(format!("beta1 must satisfy beta1 > 1, got {beta1}")));
        }
        if !(beta2 > 1.0 && beta2.is_finite()) {
            return Err(BsdeError::invalid(format!("beta2 must satisfy beta2 > 1, got {beta2}")));
        }
        if !(beta1_bar > 4.0 && beta1_bar.is_finite()) {
            return Err(BsdeError::invalid(format!(
                "beta1_bar must satisfy beta1_bar > 4, got {beta1_bar}"
            )));
        }
        let floor = min_beta2(beta1_bar)?;
        if !(beta2_bar > floor && beta2_bar.is_finite()) {
            return Err(BsdeError::invalid(format!(
                "beta2_bar must satisfy beta2_bar > 90 beta1_bar^2 / (beta1_bar^2 - 16) = {floor}, got {beta2_bar}"
            )));
        }
        Ok(Self { beta1, beta2, beta1_bar, beta2_bar })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
    pub fn beta1_bar(&self) -> f64 {
        self.beta1_bar
    }
    pub fn beta2_bar(&self) -> f64 {
        self.beta2_bar
    }
}

impl Default for WeightParams {
    /// `beta1 = 2, beta2 = 4, beta1_bar = 5, beta2_bar = 2250`.
    fn default() -> Self {
        Self::new(2.0, 4.0, 5.0, 2250.0).expect("default weight parameters are admissible")
    }
}

/// Weight parameters together with the free dials `gamma` (A1) and
/// `gamma_bar` (A2).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub params: WeightParams,
    pub gamma: CoefficientProcess,
    pub gamma_bar: CoefficientProcess,
}

impl WeightSpec {
    pub fn new(params: WeightParams, gamma: CoefficientProcess, gamma_bar: CoefficientProcess) -> Self {
        Self { params, gamma, gamma_bar }
    }

    /// The `gamma` process matching a variant.
    pub fn gamma_for(&self, variant: Variant) -> &CoefficientProcess {
        match variant {
            Variant::A1 => &self.gamma,
            Variant::A2 => &self.gamma_bar,
        }
    }
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::new(
            WeightParams::default(),
            CoefficientProcess::constant(1.0),
            CoefficientProcess::constant(1.0),
        )
    }
}

/// Sampled `alpha_1` or `alpha_2`, strictly positive on every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaProcess {
    variant: Variant,
    values: Array2<f64>,
}

impl AlphaProcess {
    /// Checks positivity of precomputed samples.
    pub fn from_values(variant: Variant, values: Array2<f64>) -> Result<Self> {
        for (i, col) in values.columns().into_iter().enumerate() {
            if let Some((p, v)) = col.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
                return Err(BsdeError::AlphaNotPositive { path: p, node: i, value: *v });
            }
        }
        Ok(Self { variant, values: to_node_major2(values.view()) })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Pointwise alpha formula from sampled `c1`, `c2` and `gamma` tables.
pub fn alpha_from_tables(
    variant: Variant,
    c1: &Array2<f64>,
    c2: &Array2<f64>,
    gamma: &Array2<f64>,
    params: &WeightParams,
) -> Result<AlphaProcess> {
    if c1.dim() != c2.dim() || c1.dim() != gamma.dim() {
        return Err(BsdeError::ShapeMismatch {
            context: "alpha inputs",
            expected: c1.shape().to_vec(),
            found: if c2.dim() != c1.dim() { c2.shape().to_vec() } else { gamma.shape().to_vec() },
        });
    }
    let mut values = to_node_major2(gamma.view());
    ndarray::Zip::from(&mut values).and(c1).and(c2).for_each(|a, &u, &v| match variant {
        Variant::A1 => *a += params.beta1 * u * u + params.beta2 * v * v,
        Variant::A2 => *a += params.beta1_bar * u + params.beta2_bar * v * v,
    });
    AlphaProcess::from_values(variant, values)
}

/// Samples `c1`, `c2`, `gamma` on the ensemble and applies the alpha formula.
pub fn eval_alpha(
    variant: Variant,
    c1: &CoefficientProcess,
    c2: &CoefficientProcess,
    gamma: &CoefficientProcess,
    params: &WeightParams,
    ensemble: &BrownianEnsemble,
) -> Result<AlphaProcess> {
    let c1 = c1.sample_named("c1", ensemble)?;
    let c2 = c2.sample_named("c2", ensemble)?;
    let g = gamma.sample_named("gamma", ensemble)?;
    alpha_from_tables(variant, &c1, &c2, &g, params)
}

/// Default cap on `log p` before a weight is considered overflowed.
pub const DEFAULT_LOG_WEIGHT_LIMIT: f64 = 700.0;

/// `p(t) = exp(int_0^t alpha)`, stored as `log p` on every `(path, node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProcess {
    log_p: Array2<f64>,
}

impl WeightProcess {
    pub fn log_values(&self) -> &Array2<f64> {
        &self.log_p
    }

    pub fn num_paths(&self) -> usize {
        self.log_p.nrows()
    }

    pub fn num_nodes(&self) -> usize {
        self.log_p.ncols()
    }

    #[inline]
    pub fn value(&self, path: usize, node: usize) -> f64 {
        self.log_p[[path, node]].exp()
    }

    /// `p(T)` on one path.
    pub fn terminal(&self, path: usize) -> f64 {
        self.value(path, self.num_nodes() - 1)
    }

    /// Deterministic weight (identical on all paths) from node values of `log p`.
    pub fn deterministic(num_paths: usize, log_p: &[f64]) -> Self {
        Self {
            log_p: Array2::from_shape_fn((log_p.len(), num_paths), |(i, _)| log_p[i]).reversed_axes(),
        }
    }
}

/// Trapezoidal cumulative integral of alpha, then exponentiation at use sites.
pub fn eval_weight(alpha: &AlphaProcess, grid: &TimeGrid) -> Result<WeightProcess> {
    eval_weight_with_limit(alpha, grid, DEFAULT_LOG_WEIGHT_LIMIT)
}

/// [`eval_weight`] with a custom overflow threshold on `log p`.
pub fn eval_weight_with_limit(
    alpha: &AlphaProcess,
    grid: &TimeGrid,
    log_limit: f64,
) -> Result<WeightProcess> {
    let a = &alpha.values;
    if a.ncols() != grid.num_nodes() {
        return Err(BsdeError::ShapeMismatch {
            context: "weight grid",
            expected: vec![a.nrows(), grid.num_nodes()],
            found: a.shape().to_vec(),
        });
    }
    let (m, _) = a.dim();
    let mut log_p = zeros2(m, grid.num_nodes());
    for i in 0..grid.num_steps() {
        let h = 0.5 * grid.dt(i);
        let (prev, next) = (a.column(i), a.column(i + 1));
        for p in 0..m {
            let acc = log_p[[p, i]] + h * (prev[p] + next[p]);
            if !(acc <= log_limit) {
                return Err(BsdeError::WeightOverflow {
                    path: p,
                    node: i + 1,
                    log_weight: acc,
                    threshold: log_limit,
                });
            }
            log_p[[p, i + 1]] = acc;
        }
    }
    Ok(WeightProcess { log_p })
}
