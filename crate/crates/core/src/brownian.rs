//! Seeded Monte-Carlo Brownian ensembles.

use std::io::{self, Write};

use ndarray::{Array3, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::layout::zeros3;
use crate::rng::path_stream;

/// `M` sampled paths of a `k`-dimensional standard Brownian motion on a grid.
///
/// Values are indexed `(path, node, component)` and stored node-major. Path `m` is drawn from its
/// own random stream, so ensembles are bit-identical for a given
/// `(grid, M, k, seed)` regardless of thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianEnsemble {
    grid: TimeGrid,
    seed: u64,
    values: Array3<f64>,
}

impl BrownianEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_paths(&self) -> usize {
        self.values.len_of(Axis(0))
    }

    pub fn dim(&self) -> usize {
        self.values.len_of(Axis(2))
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    /// Brownian state of every path at one node, shape `(M, k)`.
    pub fn at_node(&self, node: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(1), node)
    }

    /// One path, shape `(N + 1, k)`.
    pub fn path(&self, path: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), path)
    }

    /// `W(t_node)` for one path.
    pub fn state(&self, path: usize, node: usize) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![path, node, ..])
    }

    /// Increment `W(t_{step+1}) - W(t_step)` of component `comp`.
    pub fn increment(&self, path: usize, step: usize, comp: usize) -> f64 {
        self.values[[path, step + 1, comp]] - self.values[[path, step, comp]]
    }

    /// Writes the ensemble as tab-separated text with header
    /// `path  node_index  t  component  W`.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "path\tnode_index\tt\tcomponent\tW")?;
        for m in 0..self.num_paths() {
            for (i, t) in self.grid.nodes().iter().enumerate() {
                for j in 0..self.dim() {
                    writeln!(out, "{m}\t{i}\t{t}\t{j}\t{}", self.values[[m, i, j]])?;
                }
            }
        }
        Ok(())
    }
}

/// Samples `num_paths` paths of a `dim`-dimensional Brownian motion.
pub fn sample_brownian(
    grid: &TimeGrid,
    num_paths: usize,
    dim: usize,
    seed: u64,
) -> Result<BrownianEnsemble> {
    if num_paths == 0 {
        return Err(BsdeError::invalid("ensemble needs at least one path"));
    }
    if dim == 0 {
        return Err(BsdeError::invalid("Brownian dimension must be at least 1"));
    }
    let n_nodes = grid.num_nodes();
    let sqrt_dt: Vec<f64> = (0..grid.num_steps()).map(|i| grid.dt(i).sqrt()).collect();
    // Paths are generated in blocks, then scattered node by node so that
    // each node's slice is contiguous.
    const BLOCK: usize = 256;
    let blocks: Vec<(usize, Vec<f64>)> = (0..num_paths)
        .step_by(BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let len = BLOCK.min(num_paths - start);
            let mut buf = vec![0.0; len * n_nodes * dim];
            for b in 0..len {
                let mut rng = path_stream(seed, start + b);
                let path = &mut buf[b * n_nodes * dim..(b + 1) * n_nodes * dim];
                for i in 0..grid.num_steps() {
                    for j in 0..dim {
                        let z: f64 = rng.sample(StandardNormal);
                        path[(i + 1) * dim + j] = path[i * dim + j] + sqrt_dt[i] * z;
                    }
                }
            }
            (start, buf)
        })
        .collect();
    let mut values = zeros3(num_paths, n_nodes, dim);
    for i in 0..n_nodes {
        let mut node = values.index_axis_mut(Axis(1), i);
        for (start, buf) in &blocks {
            let len = buf.len() / (n_nodes * dim);
            for b in 0..len {
                for j in 0..dim {
                    node[[start + b, j]] = buf[(b * n_nodes + i) * dim + j];
                }
            }
        }
    }
    Ok(BrownianEnsemble {
        grid: grid.clone(),
        seed,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn starts_at_zero() {
        let g = make_grid(1.0, 8).unwrap();
        let e = sample_brownian(&g, 50, 3, 11).unwrap();
        assert!(e.at_node(0).iter().all(|&w| w == 0.0));
    }

    #[test]
    fn reproducible_from_seed() {
        let g = make_grid(1.0, 10).unwrap();
        let a = sample_brownian(&g, 200, 2, 5).unwrap();
        let b = sample_brownian(&g, 200, 2, 5).unwrap();
        let c = sample_brownian(&g, 200, 2, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn paths_do_not_depend_on_ensemble_size() {
        let g = make_grid(1.0, 10).unwrap();
        let small = sample_brownian(&g, 10, 2, 5).unwrap();
        let large = sample_brownian(&g, 300, 2, 5).unwrap();
        for m in 0..10 {
            assert_eq!(small.path(m), large.path(m));
        }
    }

    #[test]
    fn terminal_variance_matches_horizon() {
        let g = make_grid(1.0, 4).unwrap();
        let m = 100_000;
        let e = sample_brownian(&g, m, 1, 2024).unwrap();
        let w: Vec<f64> = (0..m).map(|p| e.values()[[p, 4, 0]]).collect();
        let mean = w.iter().sum::<f64>() / m as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        // Var of the sample variance of N(0, 1) data is 2 / (M - 1).
        let se = (2.0 / (m as f64 - 1.0)).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn components_are_uncorrelated() {
        let g = make_grid(1.0, 4).unwrap();
        let m = 100_000;
        let e = sample_brownian(&g, m, 2, 99).unwrap();
        let cov = (0..m)
            .map(|p| e.values()[[p, 4, 0]] * e.values()[[p, 4, 1]])
            .sum::<f64>()
            / m as f64;
        // For independent N(0, 1) factors the product has unit variance.
        let se = 1.0 / (m as f64).sqrt();
        assert!(cov.abs() < 3.0 * se, "cov = {cov}");
    }

    #[test]
    fn increment_moments() {
        let g = make_grid(1.0, 10).unwrap();
        let m = 100_000;
        let e = sample_brownian(&g, m, 1, 31).unwrap();
        let dt = 0.1;
        for i in 0..10 {
            let inc: Vec<f64> = (0..m).map(|p| e.increment(p, i, 0)).collect();
            let mean = inc.iter().sum::<f64>() / m as f64;
            let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
            let se_mean = (dt / m as f64).sqrt();
            let se_var = dt * (2.0 / (m as f64 - 1.0)).sqrt();
            assert!(mean.abs() < 4.0 * se_mean, "step {i}: mean {mean}");
            assert!((var - dt).abs() < 4.0 * se_var, "step {i}: var {var}");
        }
    }

    #[test]
    fn rejects_empty_ensembles() {
        let g = make_grid(1.0, 2).unwrap();
        assert!(sample_brownian(&g, 0, 1, 0).is_err());
        assert!(sample_brownian(&g, 1, 0, 0).is_err());
    }

    #[test]
    fn tsv_export_has_header_and_rows() {
        let g = make_grid(1.0, 2).unwrap();
        let e = sample_brownian(&g, 2, 1, 0).unwrap();
        let mut buf = Vec::new();
        e.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path\tnode_index\tt\tcomponent\tW");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("0\t0\t0\t0\t0"));
    }
}
