//! Paired solves of two scalar BSDEs with ordered data, checking that the
//! solution with the larger generator and terminal value stays on top.
//!
//! Both sides share one ensemble and one regression basis, so the
//! difference `yhat - y` is a paired statistic.

use std::io::{self, Write};

use ndarray::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Cauchy;

use crate::brownian::BrownianEnsemble;
use crate::certificate::probe_vector;
use crate::error::{BsdeError, Result};
use crate::model::BsdeModel;
use crate::regression::RegressionBasis;
use crate::solver::{PicardOptions, SolutionEnsemble, SolverContext};
use crate::weights::{Variant, WeightSpec};

/// A base pair `(f, xi)` and a dominating pair `(fhat, xihat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCase {
    pub base: BsdeModel,
    pub dominating: BsdeModel,
    /// Variant used for both sides (A1 pairs with the first part of the
    /// comparison statement, A2 with the second).
    pub variant: Variant,
}

impl ComparisonCase {
    pub fn new(base: BsdeModel, dominating: BsdeModel, variant: Variant) -> Result<Self> {
        if base.dim_y() != 1 || dominating.dim_y() != 1 {
            return Err(BsdeError::invalid("comparison requires scalar equations (d = 1)"));
        }
        if base.dim_w() != dominating.dim_w() {
            return Err(BsdeError::invalid("both sides must be driven by the same Brownian dimension"));
        }
        Ok(Self { base, dominating, variant })
    }
}

/// Sampled checks of `xihat >= xi` and `fhat >= f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreconditionReport {
    pub terminal_checks: usize,
    pub terminal_failures: usize,
    pub min_terminal_gap: f64,
    pub generator_probes: usize,
    pub generator_failures: usize,
    pub min_generator_gap: f64,
}

impl PreconditionReport {
    pub fn passed(&self) -> bool {
        self.terminal_failures == 0 && self.generator_failures == 0
    }
}

/// Checks the ordering hypotheses on every path and on random generator probes.
pub fn verify_ordering_preconditions(
    case: &ComparisonCase,
    ensemble: &BrownianEnsemble,
    probes: usize,
    seed: u64,
) -> Result<PreconditionReport> {
    let xi = case.base.terminal_samples(ensemble)?;
    let xih = case.dominating.terminal_samples(ensemble)?;
    let mut rep = PreconditionReport {
        terminal_checks: xi.nrows(),
        terminal_failures: 0,
        min_terminal_gap: f64::INFINITY,
        generator_probes: probes,
        generator_failures: 0,
        min_generator_gap: f64::INFINITY,
    };
    for (a, b) in xi.iter().zip(xih.iter()) {
        let gap = b - a;
        rep.min_terminal_gap = rep.min_terminal_gap.min(gap);
        if gap < 0.0 {
            rep.terminal_failures += 1;
        }
    }
    let (fb, fd) = (case.base.bind(ensemble)?, case.dominating.bind(ensemble)?);
    let k = case.base.dim_w();
    let (m, n) = (ensemble.num_paths(), ensemble.grid().num_nodes());
    let cauchy = Cauchy::new(0.0, 1.0).expect("positive scale");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut y, mut z, mut f, mut g) = ([0.0], vec![0.0; k], [0.0], [0.0]);
    for q in 0..probes {
        let heavy = q % 2 == 1;
        let node = rng.random_range(0..n);
        let path = rng.random_range(0..m);
        probe_vector(&mut rng, heavy, 10.0, &cauchy, &mut y);
        probe_vector(&mut rng, heavy, 10.0, &cauchy, &mut z);
        fb.eval_into(node, path, &y, &z, &mut f);
        fd.eval_into(node, path, &y, &z, &mut g);
        let gap = g[0] - f[0];
        rep.min_generator_gap = rep.min_generator_gap.min(gap);
        if gap < -4.0 * f64::EPSILON * (f[0].abs() + g[0].abs()) {
            rep.generator_failures += 1;
        }
    }
    Ok(rep)
}

/// How each side is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonScheme {
    PicardY(PicardOptions),
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub basis: RegressionBasis,
    pub scheme: ComparisonScheme,
    /// Node tolerance in standard errors of the node mean of `yhat - y`.
    pub se_multiple: f64,
    /// Largest admissible fraction of `(path, node)` samples below tolerance.
    pub max_violation_fraction: f64,
    /// Relative floor on the node standard error, for differences that are
    /// deterministic up to round-off.
    pub se_floor: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            basis: RegressionBasis::default(),
            scheme: ComparisonScheme::PicardY(PicardOptions::default()),
            se_multiple: 5.0,
            max_violation_fraction: 1e-3,
            se_floor: 1e-12,
        }
    }
}

/// Per-node statistics of `yhat - y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeComparison {
    pub node: usize,
    pub t: f64,
    pub mean_diff: f64,
    /// Floored standard error of `mean_diff`.
    pub std_err: f64,
    pub min_diff: f64,
    pub tolerance: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub variant: Variant,
    pub nodes: Vec<NodeComparison>,
    pub min_diff: f64,
    /// Tolerance at the node where `min_diff` occurs.
    pub min_tolerance: f64,
    pub violation_fraction: f64,
    /// `Y = y - yhat`: mean of `Y+` over all samples, its maximum, and the
    /// fraction of samples with `Y > 0`.
    pub positive_part_mean: f64,
    pub positive_part_max: f64,
    pub positive_part_fraction: f64,
    pub passed: bool,
    pub y0_base: f64,
    pub y0_dominating: f64,
}

impl ComparisonReport {
    /// `key: value` lines with fixed field names.
    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "variant: {}", self.variant)?;
        writeln!(out, "y0_base: {:e}", self.y0_base)?;
        writeln!(out, "y0_dominating: {:e}", self.y0_dominating)?;
        writeln!(out, "min_diff: {:e}", self.min_diff)?;
        writeln!(out, "min_tolerance: {:e}", self.min_tolerance)?;
        writeln!(out, "violation_fraction: {:e}", self.violation_fraction)?;
        writeln!(out, "positive_part_mean: {:e}", self.positive_part_mean)?;
        writeln!(out, "positive_part_max: {:e}", self.positive_part_max)?;
        writeln!(out, "positive_part_fraction: {:e}", self.positive_part_fraction)?;
        writeln!(out, "verdict: {}", if self.passed { "pass" } else { "fail" })
    }

    /// Per-node table of `yhat - y`.
    pub fn write_node_tsv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "node_index\tt\tmean_diff\tstd_err\tmin_diff\ttolerance\tviolations")?;
        for r in &self.nodes {
            writeln!(
                out,
                "{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{}",
                r.node, r.t, r.mean_diff, r.std_err, r.min_diff, r.tolerance, r.violations
            )?;
        }
        Ok(())
    }
}

fn solve_side(
    model: &BsdeModel,
    ensemble: &BrownianEnsemble,
    variant: Variant,
    spec: &WeightSpec,
    config: &ComparisonConfig,
) -> Result<SolutionEnsemble> {
    let ctx = SolverContext::new(model, ensemble, config.basis)?;
    match config.scheme {
        ComparisonScheme::Direct => ctx.solve_direct(),
        ComparisonScheme::PicardY(opts) => {
            let w = ctx.weighting(variant, spec)?;
            Ok(ctx.solve_picard_y(&w, &opts)?.0)
        }
    }
}

/// Statistics of `yhat - y` from two solutions on the same ensemble.
pub fn compare_solutions(
    base: &SolutionEnsemble,
    dominating: &SolutionEnsemble,
    variant: Variant,
    config: &ComparisonConfig,
) -> Result<ComparisonReport> {
    if base.y().dim() != dominating.y().dim() || base.dim_y() != 1 {
        return Err(BsdeError::ShapeMismatch {
            context: "paired solutions",
            expected: base.y().shape().to_vec(),
            found: dominating.y().shape().to_vec(),
        });
    }
    let grid = base.grid();
    let m = base.num_paths();
    let mut nodes = Vec::with_capacity(grid.num_nodes());
    let (mut total_viol, mut min_diff, mut min_tol) = (0usize, f64::INFINITY, 0.0);
    let (mut pos_sum, mut pos_max, mut pos_count) = (0.0, 0.0f64, 0usize);
    for i in 0..grid.num_nodes() {
        let (yb, yd) = (base.y().index_axis(Axis(1), i), dominating.y().index_axis(Axis(1), i));
        let diffs: Vec<f64> = yd.iter().zip(yb.iter()).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / m as f64;
        let var = if m > 1 { diffs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0) } else { 0.0 };
        let se = (var / m as f64).sqrt().max(config.se_floor * (1.0 + mean.abs()));
        let tol = config.se_multiple * se;
        let node_min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let violations = diffs.iter().filter(|v| **v < -tol).count();
        for v in &diffs {
            let yplus = (-v).max(0.0);
            pos_sum += yplus;
            pos_max = pos_max.max(yplus);
            if yplus > 0.0 {
                pos_count += 1;
            }
        }
        total_viol += violations;
        if node_min < min_diff {
            min_diff = node_min;
            min_tol = tol;
        }
        nodes.push(NodeComparison {
            node: i,
            t: grid.time(i),
            mean_diff: mean,
            std_err: se,
            min_diff: node_min,
            tolerance: tol,
            violations,
        });
    }
    let samples = (m * grid.num_nodes()) as f64;
    let violation_fraction = total_viol as f64 / samples;
    Ok(ComparisonReport {
        variant,
        nodes,
        min_diff,
        min_tolerance: min_tol,
        violation_fraction,
        positive_part_mean: pos_sum / samples,
        positive_part_max: pos_max,
        positive_part_fraction: pos_count as f64 / samples,
        passed: violation_fraction <= config.max_violation_fraction && min_diff >= -min_tol,
        y0_base: base.initial_value()[0],
        y0_dominating: dominating.initial_value()[0],
    })
}

/// Solves both sides with identical settings and compares them.
pub fn run_comparison(
    case: &ComparisonCase,
    ensemble: &BrownianEnsemble,
    spec: &WeightSpec,
    config: &ComparisonConfig,
) -> Result<ComparisonReport> {
    let base = solve_side(&case.base, ensemble, case.variant, spec, config).map_err(|e| e.context("base side"))?;
    let dom = solve_side(&case.dominating, ensemble, case.variant, spec, config)
        .map_err(|e| e.context("dominating side"))?;
    compare_solutions(&base, &dom, case.variant, config)
}
