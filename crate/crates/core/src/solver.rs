//! Backward regression solvers: the frozen-argument sweep, the z- and
//! y-Picard schemes, and a direct one-pass scheme.
//!
//! On every step `i = N-1, ..., 0` with `dt = t_{i+1} - t_i`:
//!
//! * `yhat_i = E[y_{i+1} | W(t_i)]`,
//! * `z_i = E[(y_{i+1} - yhat_i) dW_i' | W(t_i)] / dt`,
//! * `y_i = yhat_i + f(t_i, ., .) dt`.
//!
//! Subtracting `yhat_i` in the z-target leaves its conditional mean unchanged
//! (`E[yhat_i dW_i | W(t_i)] = 0`) and removes most of the regression noise.
//! `z` at the last node repeats the value at `t_{N-1}`.

use std::fmt;
use std::io::{self, Write};

use ndarray::{s, Array2, Array3, Array4, ArrayView3, ArrayView4, Axis};
use rayon::prelude::*;

use crate::brownian::BrownianEnsemble;
use crate::diagnostics::{increment_record, IterationDiagnostics, NoiseFloor, PicardScheme, Weighting};
use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::layout::{flatten_node_major4, into_node_major3, into_node_major4, zeros3, zeros4};
use crate::model::{BoundModel, BsdeModel};
use crate::regression::{Projector, RegressionBasis};
use crate::weights::{Variant, WeightSpec};

/// Which procedure produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Inner,
    PicardZ,
    PicardY,
    Direct,
    Analytic,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Inner => "inner",
            Scheme::PicardZ => "picard_z",
            Scheme::PicardY => "picard_y",
            Scheme::Direct => "direct",
            Scheme::Analytic => "analytic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionMeta {
    pub scheme: Scheme,
    pub variant: Option<Variant>,
    /// Outer iterations (or sweeps for one-pass schemes).
    pub iterations: usize,
    /// Inner z-iterations summed over the outer loop.
    pub inner_iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Sampled solution pair on a Brownian ensemble.
///
/// `y` has shape `(M, N+1, d)` and `z` has shape `(M, N+1, d, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionEnsemble {
    grid: TimeGrid,
    y: Array3<f64>,
    z: Array4<f64>,
    pub meta: SolutionMeta,
}

impl SolutionEnsemble {
    /// Checks shapes against the grid and finiteness of every entry.
    pub fn new(grid: TimeGrid, y: Array3<f64>, z: Array4<f64>, meta: SolutionMeta) -> Result<Self> {
        let (m, n, d) = y.dim();
        let (zm, zn, zd, _) = z.dim();
        if n != grid.num_nodes() || (zm, zn, zd) != (m, n, d) {
            return Err(BsdeError::ShapeMismatch {
                context: "solution arrays",
                expected: vec![m, grid.num_nodes(), d],
                found: vec![zm, zn, zd],
            });
        }
        let (y, z) = (into_node_major3(y), into_node_major4(z));
        for i in 0..n {
            if y.index_axis(Axis(1), i).iter().any(|v| !v.is_finite()) {
                return Err(BsdeError::NonFinite { what: "y", node: i });
            }
            if z.index_axis(Axis(1), i).iter().any(|v| !v.is_finite()) {
                return Err(BsdeError::NonFinite { what: "z", node: i });
            }
        }
        Ok(Self { grid, y, z, meta })
    }

    fn zeros(grid: &TimeGrid, m: usize, d: usize, k: usize, meta: SolutionMeta) -> Self {
        let n = grid.num_nodes();
        Self { grid: grid.clone(), y: zeros3(m, n, d), z: zeros4(m, n, d, k), meta }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn y(&self) -> &Array3<f64> {
        &self.y
    }

    pub fn z(&self) -> &Array4<f64> {
        &self.z
    }

    /// `z` viewed as `(M, N+1, d k)`.
    pub fn z_flat(&self) -> ArrayView3<'_, f64> {
        flatten_node_major4(self.z.view())
    }

    pub fn num_paths(&self) -> usize {
        self.y.dim().0
    }

    pub fn dim_y(&self) -> usize {
        self.y.dim().2
    }

    pub fn dim_w(&self) -> usize {
        self.z.dim().3
    }

    /// Path average of `y(t_node)`.
    pub fn mean_y(&self, node: usize) -> Vec<f64> {
        let m = self.num_paths() as f64;
        (0..self.dim_y()).map(|j| self.y.slice(s![.., node, j]).sum() / m).collect()
    }

    /// Path average of `z(t_node)`, flattened `(d, k)`.
    pub fn mean_z(&self, node: usize) -> Vec<f64> {
        let m = self.num_paths() as f64;
        let (_, _, d, k) = self.z.dim();
        (0..d * k).map(|c| self.z.slice(s![.., node, c / k, c % k]).sum() / m).collect()
    }

    /// Estimate of `y(0)`.
    pub fn initial_value(&self) -> Vec<f64> {
        self.mean_y(0)
    }

    /// Tab-separated table, one row per `(path, node)`.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        self.write_tsv_paths(out, usize::MAX)
    }

    /// Same as [`write_tsv`](Self::write_tsv), restricted to the first `max_paths` paths.
    pub fn write_tsv_paths<W: Write>(&self, out: &mut W, max_paths: usize) -> io::Result<()> {
        let (m, n, d, k) = self.z.dim();
        let m = m.min(max_paths);
        write!(out, "path\tnode_index\tt")?;
        for j in 0..d {
            write!(out, "\ty_{j}")?;
        }
        for j in 0..d {
            for l in 0..k {
                write!(out, "\tz_{j}_{l}")?;
            }
        }
        writeln!(out)?;
        for p in 0..m {
            for i in 0..n {
                write!(out, "{p}\t{i}\t{:e}", self.grid.time(i))?;
                for j in 0..d {
                    write!(out, "\t{:e}", self.y[[p, i, j]])?;
                }
                for j in 0..d {
                    for l in 0..k {
                        write!(out, "\t{:e}", self.z[[p, i, j, l]])?;
                    }
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Stopping and diagnostic settings for the Picard schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// The scheme stops once its active increment falls below `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Tolerance of the inner z-scheme inside the y-scheme.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub noise: NoiseFloor,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, inner_tol: 1e-10, inner_max_iter: 50, noise: NoiseFloor::default() }
    }
}

impl PicardOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(BsdeError::invalid("Picard tolerances must be positive"));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(BsdeError::invalid("Picard iteration caps must be at least 1"));
        }
        Ok(())
    }
}

/// Paths per parallel work item.
const BLOCK: usize = 1024;

#[derive(Debug)]
struct Scratch {
    y: Vec<f64>,
    z: Vec<f64>,
    f: Vec<f64>,
}

/// A model bound to an ensemble with one fitted regression per node,
/// reused across sweeps.
#[derive(Debug, Clone)]
pub struct SolverContext<'a> {
    bound: BoundModel<'a>,
    projectors: Vec<Projector>,
    xi: Array2<f64>,
    basis: RegressionBasis,
}

impl<'a> SolverContext<'a> {
    pub fn new(model: &'a BsdeModel, ensemble: &'a BrownianEnsemble, basis: RegressionBasis) -> Result<Self> {
        let bound = model.bind(ensemble)?;
        let xi = model.terminal_samples(ensemble)?;
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(BsdeError::NonFinite { what: "terminal condition", node: ensemble.grid().num_steps() });
        }
        let projectors = (0..ensemble.grid().num_steps())
            .map(|i| Projector::fit(ensemble.at_node(i), &basis, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bound, projectors, xi, basis })
    }

    pub fn bound(&self) -> &BoundModel<'a> {
        &self.bound
    }

    pub fn basis(&self) -> &RegressionBasis {
        &self.basis
    }

    pub fn ensemble(&self) -> &'a BrownianEnsemble {
        self.bound.ensemble()
    }

    /// Terminal samples, shape `(M, d)`.
    pub fn terminal(&self) -> &Array2<f64> {
        &self.xi
    }

    pub fn weighting(&self, variant: Variant, spec: &WeightSpec) -> Result<Weighting> {
        Weighting::for_model(&self.bound, variant, spec)
    }

    fn dims(&self) -> (usize, usize, usize) {
        let e = self.ensemble();
        (e.num_paths(), self.bound.model().dim_y(), e.dim())
    }

    fn meta(&self, scheme: Scheme, variant: Option<Variant>) -> SolutionMeta {
        SolutionMeta {
            scheme,
            variant,
            iterations: 1,
            inner_iterations: 0,
            converged: true,
            seed: self.ensemble().seed(),
        }
    }

    /// One backward sweep; `rule(scratch, node, path, yhat, z, out)` writes `y_i`.
    fn sweep<F>(&self, meta: SolutionMeta, rule: F) -> Result<SolutionEnsemble>
    where
        F: Fn(&mut Scratch, usize, usize, &[f64], &[f64], &mut [f64]) + Sync,
    {
        let ens = self.ensemble();
        let grid = ens.grid();
        let (m, d, k) = self.dims();
        let n = grid.num_steps();
        let mut y = zeros3(m, n + 1, d);
        let mut z = zeros4(m, n + 1, d, k);
        y.slice_mut(s![.., n, ..]).assign(&self.xi);
        for i in (0..n).rev() {
            let x = ens.at_node(i);
            let next = y.slice(s![.., i + 1, ..]).to_owned();
            let proj = &self.projectors[i];
            let design = proj.design(x);
            let yhat = proj.project_with(&design, next.view())?;
            let dt = grid.dt(i);
            let mut tz = Array2::zeros((m, d * k));
            {
                let (w0, w1) = (ens.at_node(i), ens.at_node(i + 1));
                let (tzs, ns, ys) = (
                    tz.as_slice_mut().expect("fresh array"),
                    next.as_slice().expect("fresh array"),
                    yhat.as_slice().expect("fresh array"),
                );
                for p in 0..m {
                    for j in 0..d {
                        let resid = ns[p * d + j] - ys[p * d + j];
                        for l in 0..k {
                            tzs[(p * d + j) * k + l] = resid * (w1[[p, l]] - w0[[p, l]]) / dt;
                        }
                    }
                }
            }
            let zi = proj.project_with(&design, tz.view())?;
            if zi.iter().any(|v| !v.is_finite()) {
                return Err(BsdeError::NonFinite { what: "z", node: i });
            }
            let mut yi = Array2::zeros((m, d));
            {
                let (ys, zs) = (yhat.as_slice().expect("fresh array"), zi.as_slice().expect("fresh array"));
                yi.as_slice_mut()
                    .expect("fresh array")
                    .par_chunks_mut(BLOCK * d)
                    .enumerate()
                    .for_each(|(b, block)| {
                        let mut scratch = Scratch { y: vec![0.0; d], z: vec![0.0; d * k], f: vec![0.0; d] };
                        for (r, out) in block.chunks_mut(d).enumerate() {
                            let p = b * BLOCK + r;
                            rule(&mut scratch, i, p, &ys[p * d..(p + 1) * d], &zs[p * d * k..(p + 1) * d * k], out);
                        }
                    });
            }
            if yi.iter().any(|v| !v.is_finite()) {
                return Err(BsdeError::NonFinite { what: "y", node: i });
            }
            y.slice_mut(s![.., i, ..]).assign(&yi);
            z.slice_mut(s![.., i, .., ..])
                .assign(&zi.into_shape_with_order((m, d, k)).expect("contiguous"));
        }
        if n > 0 {
            let last = z.slice(s![.., n - 1, .., ..]).to_owned();
            z.slice_mut(s![.., n, .., ..]).assign(&last);
        }
        Ok(SolutionEnsemble { grid: grid.clone(), y, z, meta })
    }

    fn check_frozen(&self, phi: &ArrayView3<f64>, psi: &ArrayView4<f64>) -> Result<()> {
        let (m, d, k) = self.dims();
        let n = self.ensemble().grid().num_nodes();
        if phi.dim() != (m, n, d) {
            return Err(BsdeError::ShapeMismatch {
                context: "frozen y",
                expected: vec![m, n, d],
                found: phi.shape().to_vec(),
            });
        }
        if psi.dim() != (m, n, d, k) {
            return Err(BsdeError::ShapeMismatch {
                context: "frozen z",
                expected: vec![m, n, d, k],
                found: psi.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn frozen_sweep(&self, phi: ArrayView3<f64>, psi: ArrayView4<f64>, meta: SolutionMeta) -> Result<SolutionEnsemble> {
        self.check_frozen(&phi, &psi)?;
        let (_, d, k) = self.dims();
        let grid = self.ensemble().grid();
        self.sweep(meta, |s, i, p, yhat, _z, out| {
            for j in 0..d {
                s.y[j] = phi[[p, i, j]];
                for l in 0..k {
                    s.z[j * k + l] = psi[[p, i, j, l]];
                }
            }
            self.bound.eval_into(i, p, &s.y, &s.z, &mut s.f);
            let dt = grid.dt(i);
            for j in 0..d {
                out[j] = yhat[j] + s.f[j] * dt;
            }
        })
    }

    /// Solves the BSDE whose generator is evaluated at the frozen `(phi, psi)`.
    pub fn inner_solve(&self, phi: ArrayView3<f64>, psi: ArrayView4<f64>) -> Result<SolutionEnsemble> {
        self.frozen_sweep(phi, psi, self.meta(Scheme::Inner, None))
    }

    /// One-pass scheme: `y_i = yhat_i + f(t_i, y_i, z_i) dt`, solved per path by
    /// fixed-point iteration (a contraction whenever `c1 dt < 1`).
    pub fn solve_direct(&self) -> Result<SolutionEnsemble> {
        let (_, d, _) = self.dims();
        let grid = self.ensemble().grid();
        self.sweep(self.meta(Scheme::Direct, None), |s, i, p, yhat, z, out| {
            let dt = grid.dt(i);
            out.copy_from_slice(yhat);
            for _ in 0..200 {
                self.bound.eval_into(i, p, out, z, &mut s.f);
                let mut change: f64 = 0.0;
                let mut scale: f64 = 1.0;
                for j in 0..d {
                    let v = yhat[j] + s.f[j] * dt;
                    change = change.max((v - out[j]).abs());
                    scale = scale.max(v.abs());
                    out[j] = v;
                }
                if change <= 1e-15 * scale {
                    break;
                }
            }
        })
    }

    fn picard_z_from(
        &self,
        phi: ArrayView3<f64>,
        z_start: Array4<f64>,
        weighting: &Weighting,
        tol: f64,
        max_iter: usize,
        noise: NoiseFloor,
    ) -> Result<(SolutionEnsemble, IterationDiagnostics)> {
        let (m, d, k) = self.dims();
        let grid = self.ensemble().grid();
        let mut current = SolutionEnsemble::zeros(grid, m, d, k, self.meta(Scheme::PicardZ, Some(weighting.variant)));
        current.z = z_start;
        let mut diag = IterationDiagnostics::new(PicardScheme::Z, weighting.variant, weighting.params);
        diag.noise = noise;
        for n in 1..=max_iter {
            let mut meta = self.meta(Scheme::PicardZ, Some(weighting.variant));
            meta.iterations = n;
            meta.converged = false;
            let next = self.frozen_sweep(phi, current.z.view(), meta)?;
            let rec = increment_record(n, (current.y.view(), current.z.view()), (next.y.view(), next.z.view()), weighting, grid)?;
            if !rec.mu.value.is_finite() {
                return Err(BsdeError::NonFinite { what: "z increment", node: 0 });
            }
            diag.records.push(rec);
            current = next;
            if rec.mu.value < tol {
                diag.converged = true;
                break;
            }
        }
        current.meta.converged = diag.converged;
        Ok((current, diag))
    }

    /// z-Picard scheme with `y` frozen at `phi`, started from `z_0 = 0`.
    pub fn solve_picard_z(
        &self,
        phi: ArrayView3<f64>,
        weighting: &Weighting,
        opts: &PicardOptions,
    ) -> Result<(SolutionEnsemble, IterationDiagnostics)> {
        opts.validate()?;
        let (m, d, k) = self.dims();
        let n = self.ensemble().grid().num_nodes();
        self.picard_z_from(phi, zeros4(m, n, d, k), weighting, opts.tol, opts.max_iter, opts.noise)
    }

    /// y-Picard scheme from `y_0 = 0`; each outer step runs the z-scheme with
    /// `phi = y_{n-1}`, started from the previous outer `z`.
    pub fn solve_picard_y(
        &self,
        weighting: &Weighting,
        opts: &PicardOptions,
    ) -> Result<(SolutionEnsemble, IterationDiagnostics)> {
        opts.validate()?;
        let (m, d, k) = self.dims();
        let grid = self.ensemble().grid();
        let variant = weighting.variant;
        let mut current = SolutionEnsemble::zeros(grid, m, d, k, self.meta(Scheme::PicardY, Some(variant)));
        let mut diag = IterationDiagnostics::new(PicardScheme::Y, variant, weighting.params);
        diag.noise = opts.noise;
        let (mut inner_total, mut inner_ok) = (0, true);
        for n in 1..=opts.max_iter {
            let (next, zdiag) = self.picard_z_from(
                current.y.view(),
                current.z.clone(),
                weighting,
                opts.inner_tol,
                opts.inner_max_iter,
                opts.noise,
            )?;
            inner_total += zdiag.len();
            inner_ok &= zdiag.converged;
            let mut rec =
                increment_record(n, (current.y.view(), current.z.view()), (next.y.view(), next.z.view()), weighting, grid)?;
            rec.inner_iterations = zdiag.len();
            diag.records.push(rec);
            current = next;
            let active = match variant {
                Variant::A1 => rec.eta.value,
                Variant::A2 => rec.lambda.value,
            };
            if !active.is_finite() {
                return Err(BsdeError::NonFinite { what: "y increment", node: 0 });
            }
            if active < opts.tol {
                diag.converged = true;
                break;
            }
        }
        current.meta = SolutionMeta {
            scheme: Scheme::PicardY,
            variant: Some(variant),
            iterations: diag.len(),
            inner_iterations: inner_total,
            converged: diag.converged && inner_ok,
            seed: self.ensemble().seed(),
        };
        Ok((current, diag))
    }
}

/// [`SolverContext::inner_solve`] on a fresh context.
pub fn inner_solve(
    model: &BsdeModel,
    phi: ArrayView3<f64>,
    psi: ArrayView4<f64>,
    ensemble: &BrownianEnsemble,
    basis: &RegressionBasis,
) -> Result<SolutionEnsemble> {
    SolverContext::new(model, ensemble, *basis)?.inner_solve(phi, psi)
}

/// [`SolverContext::solve_picard_z`] on a fresh context.
pub fn solve_picard_z(
    model: &BsdeModel,
    phi: ArrayView3<f64>,
    ensemble: &BrownianEnsemble,
    basis: &RegressionBasis,
    variant: Variant,
    spec: &WeightSpec,
    opts: &PicardOptions,
) -> Result<(SolutionEnsemble, IterationDiagnostics)> {
    let ctx = SolverContext::new(model, ensemble, *basis)?;
    let w = ctx.weighting(variant, spec)?;
    ctx.solve_picard_z(phi, &w, opts)
}

/// [`SolverContext::solve_picard_y`] on a fresh context.
pub fn solve_picard_y(
    model: &BsdeModel,
    variant: Variant,
    ensemble: &BrownianEnsemble,
    basis: &RegressionBasis,
    spec: &WeightSpec,
    opts: &PicardOptions,
) -> Result<(SolutionEnsemble, IterationDiagnostics)> {
    let ctx = SolverContext::new(model, ensemble, *basis)?;
    let w = ctx.weighting(variant, spec)?;
    ctx.solve_picard_y(&w, opts)
}

/// [`SolverContext::solve_direct`] on a fresh context.
pub fn solve_direct(model: &BsdeModel, ensemble: &BrownianEnsemble, basis: &RegressionBasis) -> Result<SolutionEnsemble> {
    SolverContext::new(model, ensemble, *basis)?.solve_direct()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_brownian;
    use crate::coefficients::CoefficientProcess;
    use crate::diagnostics::Sequence;
    use crate::grid::make_grid;
    use crate::model::{GeneratorSpec, TerminalSpec};

    fn ens(m: usize) -> BrownianEnsemble {
        sample_brownian(&make_grid(1.0, 10).unwrap(), m, 1, 41).unwrap()
    }

    fn model(generator: GeneratorSpec, terminal: TerminalSpec, c1: f64, c2: f64) -> BsdeModel {
        BsdeModel::new(
            "test",
            1,
            generator,
            vec![terminal],
            CoefficientProcess::constant(c1),
            CoefficientProcess::constant(c2),
        )
        .unwrap()
    }

    fn linear(a: f64, b: f64, c: f64) -> GeneratorSpec {
        GeneratorSpec::Linear {
            a: CoefficientProcess::constant(a),
            b: vec![CoefficientProcess::constant(b)],
            c: CoefficientProcess::constant(c),
        }
    }

    fn all_schemes(m: &BsdeModel, e: &BrownianEnsemble) -> Vec<SolutionEnsemble> {
        let basis = RegressionBasis::default();
        let ctx = SolverContext::new(m, e, basis).unwrap();
        let w = ctx.weighting(Variant::A1, &WeightSpec::default()).unwrap();
        let (mm, n) = (e.num_paths(), e.grid().num_nodes());
        let phi = Array3::zeros((mm, n, 1));
        let psi = Array4::zeros((mm, n, 1, 1));
        let opts = PicardOptions::default();
        vec![
            ctx.inner_solve(phi.view(), psi.view()).unwrap(),
            ctx.solve_direct().unwrap(),
            ctx.solve_picard_z(phi.view(), &w, &opts).unwrap().0,
            ctx.solve_picard_y(&w, &opts).unwrap().0,
        ]
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let e = ens(500);
        let m = model(GeneratorSpec::Zero, TerminalSpec::Constant(0.0), 0.0, 0.0);
        for sol in all_schemes(&m, &e) {
            assert!(sol.y().iter().all(|v| *v == 0.0), "{}", sol.meta.scheme);
            assert!(sol.z().iter().all(|v| *v == 0.0), "{}", sol.meta.scheme);
        }
    }

    #[test]
    fn terminal_condition_is_hit_exactly() {
        let e = ens(500);
        let m = model(linear(-0.3, 0.2, 0.1), TerminalSpec::Sin { amplitude: 1.0, frequency: 2.0 }, 0.3, 0.2);
        let xi = m.terminal_samples(&e).unwrap();
        for sol in all_schemes(&m, &e) {
            let last = sol.y().index_axis(Axis(1), 10);
            assert_eq!(last, xi, "{}", sol.meta.scheme);
        }
    }

    #[test]
    fn constants_survive_the_sweep() {
        let e = ens(500);
        let m = model(GeneratorSpec::Zero, TerminalSpec::Constant(2.5), 0.0, 0.0);
        for sol in all_schemes(&m, &e) {
            for v in sol.y().iter() {
                assert!((v - 2.5).abs() < 1e-12, "{}: {v}", sol.meta.scheme);
            }
            assert!(sol.z().iter().all(|v| v.abs() < 1e-12), "{}", sol.meta.scheme);
        }
    }

    #[test]
    fn constant_driver_integrates_deterministically() {
        let e = ens(500);
        let m = model(GeneratorSpec::Constant(vec![0.7]), TerminalSpec::Constant(0.0), 0.0, 0.0);
        let grid = e.grid().clone();
        for sol in all_schemes(&m, &e) {
            for i in 0..grid.num_nodes() {
                let exact = 0.7 * (1.0 - grid.time(i));
                assert!((sol.mean_y(i)[0] - exact).abs() < 1e-12, "{}", sol.meta.scheme);
            }
        }
    }

    #[test]
    fn direct_equals_inner_without_generator() {
        let e = ens(2000);
        let m = model(GeneratorSpec::Zero, TerminalSpec::Affine { intercept: 0.0, slope: vec![1.0] }, 0.0, 0.0);
        let ctx = SolverContext::new(&m, &e, RegressionBasis::default()).unwrap();
        let phi = Array3::zeros((2000, 11, 1));
        let psi = Array4::zeros((2000, 11, 1, 1));
        let a = ctx.inner_solve(phi.view(), psi.view()).unwrap();
        let b = ctx.solve_direct().unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.z(), b.z());
    }

    #[test]
    fn z_free_generator_settles_after_one_step() {
        let e = ens(2000);
        let m = model(linear(-0.2, 0.0, 0.5), TerminalSpec::Affine { intercept: 1.0, slope: vec![1.0] }, 0.2, 0.0);
        let ctx = SolverContext::new(&m, &e, RegressionBasis::default()).unwrap();
        let w = ctx.weighting(Variant::A1, &WeightSpec::default()).unwrap();
        let phi = Array3::from_elem((2000, 11, 1), 0.3);
        let (_, diag) = ctx.solve_picard_z(phi.view(), &w, &PicardOptions::default()).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.len(), 2);
        let mu = diag.sequence(Sequence::Mu);
        assert!(mu[0].value > 0.0);
        assert_eq!(mu[1].value, 0.0);
    }

    #[test]
    fn state_free_generator_settles_after_one_outer_step() {
        let e = ens(2000);
        let m = model(GeneratorSpec::Constant(vec![1.0]), TerminalSpec::Affine { intercept: 0.0, slope: vec![1.0] }, 0.0, 0.0);
        let (sol, diag) = solve_picard_y(
            &m,
            Variant::A2,
            &e,
            &RegressionBasis::default(),
            &WeightSpec::default(),
            &PicardOptions::default(),
        )
        .unwrap();
        assert!(sol.meta.converged);
        assert_eq!(diag.len(), 2);
        assert_eq!(diag.sequence(Sequence::Lambda)[1].value, 0.0);
        assert_eq!(diag.sequence(Sequence::Eta)[1].value, 0.0);
    }

    #[test]
    fn infinite_tolerance_stops_after_first_iteration() {
        let e = ens(500);
        let m = model(linear(0.0, 0.5, 0.0), TerminalSpec::Sin { amplitude: 1.0, frequency: 1.0 }, 0.0, 0.5);
        let ctx = SolverContext::new(&m, &e, RegressionBasis::default()).unwrap();
        let w = ctx.weighting(Variant::A1, &WeightSpec::default()).unwrap();
        let opts = PicardOptions { tol: f64::INFINITY, ..Default::default() };
        let phi = Array3::zeros((500, 11, 1));
        let (sol, diag) = ctx.solve_picard_z(phi.view(), &w, &opts).unwrap();
        assert_eq!(diag.len(), 1);
        assert_eq!(sol.meta.iterations, 1);
        let (_, diag) = ctx.solve_picard_y(&w, &opts).unwrap();
        assert_eq!(diag.len(), 1);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let e = ens(500);
        let m = model(linear(0.0, 0.5, 0.0), TerminalSpec::Sin { amplitude: 1.0, frequency: 1.0 }, 0.0, 0.5);
        let ctx = SolverContext::new(&m, &e, RegressionBasis::default()).unwrap();
        let w = ctx.weighting(Variant::A1, &WeightSpec::default()).unwrap();
        let opts = PicardOptions { tol: 1e-300, max_iter: 2, ..Default::default() };
        let phi = Array3::zeros((500, 11, 1));
        let (sol, diag) = ctx.solve_picard_z(phi.view(), &w, &opts).unwrap();
        assert_eq!(diag.len(), 2);
        assert!(!diag.converged);
        assert!(!sol.meta.converged);
    }

    #[test]
    fn frozen_shapes_are_checked() {
        let e = ens(100);
        let m = model(GeneratorSpec::Zero, TerminalSpec::Constant(0.0), 0.0, 0.0);
        let ctx = SolverContext::new(&m, &e, RegressionBasis::default()).unwrap();
        let phi = Array3::zeros((100, 10, 1));
        let psi = Array4::zeros((100, 11, 1, 1));
        assert!(matches!(ctx.inner_solve(phi.view(), psi.view()), Err(BsdeError::ShapeMismatch { .. })));
        let bad = PicardOptions { tol: 0.0, ..Default::default() };
        let w = ctx.weighting(Variant::A1, &WeightSpec::default()).unwrap();
        assert!(ctx.solve_picard_y(&w, &bad).is_err());
    }

    #[test]
    fn tsv_export_layout() {
        let e = sample_brownian(&make_grid(1.0, 2).unwrap(), 3, 1, 0).unwrap();
        let m = model(GeneratorSpec::Zero, TerminalSpec::Constant(1.0), 0.0, 0.0);
        let sol = solve_direct(&m, &e, &RegressionBasis::polynomial(0, 0.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        sol.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path\tnode_index\tt\ty_0\tz_0_0");
        assert_eq!(lines.len(), 1 + 3 * 3);
    }
}
