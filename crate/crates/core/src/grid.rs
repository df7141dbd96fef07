use crate::error::{BsdeError, Result};

/// Discretised time axis `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with `num_steps` steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, num_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(BsdeError::invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if num_steps == 0 {
            return Err(BsdeError::invalid("grid needs at least one step"));
        }
        let n = num_steps as f64;
        let mut nodes: Vec<f64> = (0..=num_steps).map(|i| horizon * (i as f64) / n).collect();
        nodes[num_steps] = horizon;
        Ok(Self { nodes })
    }

    /// Grid from explicit nodes; must start at zero and be strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(BsdeError::invalid("grid needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(BsdeError::invalid(format!("first node must be 0, got {}", nodes[0])));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BsdeError::invalid("grid nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn time(&self, node: usize) -> f64 {
        self.nodes[node]
    }

    /// Length of step `i`, i.e. `t_{i+1} - t_i`.
    pub fn dt(&self, step: usize) -> f64 {
        self.nodes[step + 1] - self.nodes[step]
    }

    /// Trapezoidal integral of node values `g(t_0), ..., g(t_N)`.
    pub fn trapezoid(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        let mut it = values.into_iter();
        let Some(mut prev) = it.next() else { return 0.0 };
        let mut acc = 0.0;
        for (step, v) in it.enumerate() {
            acc += 0.5 * self.dt(step) * (prev + v);
            prev = v;
        }
        acc
    }
}

/// Uniform grid on `[0, horizon]`.
pub fn make_grid(horizon: f64, num_steps: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(horizon, num_steps)
}
