//! Monte-Carlo evidence for the solvability conditions of a model under the
//! A1 or A2 weight.
//!
//! * (i) `E[p(T) |xi|^2]`;
//! * (ii) the Lipschitz bound `|f(y1,z1) - f(y2,z2)| <= c1 |y1-y2| + c2 |z1-z2|`,
//!   probed at random arguments;
//! * (iii) `E int_0^T p |f(t,0,0)|^2 / alpha dt`.
//!
//! A finite sample cannot prove that an expectation is finite, so the moments
//! are re-estimated on independent ensembles of doubling size. Each estimate
//! is a median of block means, which keeps a single extreme path from
//! dominating; an estimate that keeps growing by more than the threshold at
//! every doubling signals divergence.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Cauchy, Distribution};

use crate::brownian::{sample_brownian, BrownianEnsemble};
use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::model::BsdeModel;
use crate::norms::Estimate;
use crate::rng::derive_seed;
use crate::weights::{alpha_from_tables, eval_weight, Variant, WeightParams, WeightSpec};

/// Sampling budget and tolerances of a certificate run.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateConfig {
    /// Paths at the first level; level `l` uses `base_paths * 2^l`.
    pub base_paths: usize,
    /// Number of doublings after the first level (at least 3).
    pub doublings: usize,
    /// Blocks of the median-of-means estimator.
    pub blocks: usize,
    pub growth_threshold: f64,
    pub probes: usize,
    pub box_radius: f64,
    pub cauchy_scale: f64,
    pub alpha_floor: f64,
    pub seed: u64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            base_paths: 8192,
            doublings: 4,
            blocks: 256,
            growth_threshold: 1.5,
            probes: 10_000,
            box_radius: 10.0,
            cauchy_scale: 1.0,
            alpha_floor: 1e-12,
            seed: 0,
        }
    }
}

impl CertificateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.doublings < 3 {
            return Err(BsdeError::invalid(format!(
                "the growth diagnostic needs at least 3 doublings, got {}",
                self.doublings
            )));
        }
        if self.blocks == 0 || self.base_paths < self.blocks {
            return Err(BsdeError::invalid("base_paths must be at least the number of blocks"));
        }
        if !(self.growth_threshold > 1.0) {
            return Err(BsdeError::invalid("growth threshold must exceed 1"));
        }
        if !(self.box_radius > 0.0) || !(self.cauchy_scale > 0.0) || !(self.alpha_floor > 0.0) {
            return Err(BsdeError::invalid("probe radius, Cauchy scale and alpha floor must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    EvidencePass,
    EvidenceFail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::EvidencePass => "evidence-pass",
            Verdict::EvidenceFail => "evidence-fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Moment estimates on one ensemble size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthLevel {
    pub paths: usize,
    /// Median of block means of `p(T) |xi|^2`, with the plain standard error.
    pub terminal: Estimate,
    /// Median of block means of `int p |f(.,0,0)|^2 / alpha`.
    pub f0: Estimate,
}

/// Result of random Lipschitz probing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzProbe {
    pub probes: usize,
    pub violations: usize,
    /// Largest `|f1 - f2| / (c1 |y1-y2| + c2 |z1-z2|)` observed.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub model: String,
    pub variant: Variant,
    pub params: WeightParams,
    pub estimate_terminal: f64,
    pub estimate_f0: f64,
    pub lipschitz: LipschitzProbe,
    pub growth: Vec<GrowthLevel>,
    pub terminal_growth: Vec<f64>,
    pub f0_growth: Vec<f64>,
    pub growth_threshold: f64,
    pub verdict: Verdict,
    pub reason: String,
}

impl CertificateReport {
    /// `key: value` lines with fixed field names.
    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        writeln!(out, "model: {}", self.model)?;
        writeln!(out, "variant: {}", self.variant)?;
        writeln!(
            out,
            "params: beta1={:e},beta2={:e},beta1_bar={:e},beta2_bar={:e}",
            self.params.beta1(),
            self.params.beta2(),
            self.params.beta1_bar(),
            self.params.beta2_bar()
        )?;
        writeln!(out, "estimate_terminal: {:e}", self.estimate_terminal)?;
        writeln!(out, "estimate_f0: {:e}", self.estimate_f0)?;
        writeln!(out, "lipschitz_probes: {}", self.lipschitz.probes)?;
        writeln!(out, "lipschitz_violations: {}", self.lipschitz.violations)?;
        writeln!(out, "lipschitz_worst_ratio: {:e}", self.lipschitz.worst_ratio)?;
        writeln!(out, "growth_paths: {}", self.growth.iter().map(|g| g.paths.to_string()).collect::<Vec<_>>().join(","))?;
        writeln!(out, "growth_terminal: {}", join(&self.growth.iter().map(|g| g.terminal.value).collect::<Vec<_>>()))?;
        writeln!(out, "growth_f0: {}", join(&self.growth.iter().map(|g| g.f0.value).collect::<Vec<_>>()))?;
        writeln!(out, "growth_factors_terminal: {}", join(&self.terminal_growth))?;
        writeln!(out, "growth_factors_f0: {}", join(&self.f0_growth))?;
        writeln!(out, "growth_threshold: {:e}", self.growth_threshold)?;
        writeln!(out, "verdict: {}", self.verdict)?;
        writeln!(out, "reason: {}", self.reason)
    }
}

/// Median of `blocks` contiguous block means.
pub fn median_of_means(samples: &[f64], blocks: usize) -> f64 {
    let b = blocks.clamp(1, samples.len().max(1));
    let size = samples.len() / b;
    if size == 0 {
        return f64::NAN;
    }
    let mut means: Vec<f64> = (0..b)
        .map(|j| samples[j * size..(j + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    if b % 2 == 1 {
        means[b / 2]
    } else {
        0.5 * (means[b / 2 - 1] + means[b / 2])
    }
}

/// Ratios of consecutive estimates; `0/0` counts as no growth.
pub fn growth_factors(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| if w[0] == 0.0 && w[1] == 0.0 { 1.0 } else { w[1] / w[0] })
        .collect()
}

/// Random argument in `R^n`: uniform on the box for even probes, Cauchy
/// for odd ones.
pub(crate) fn probe_vector(rng: &mut ChaCha8Rng, heavy: bool, radius: f64, cauchy: &Cauchy<f64>, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = if heavy { cauchy.sample(rng) } else { rng.random_range(-radius..=radius) };
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Probes the declared Lipschitz moduli of `model` at random arguments.
pub fn probe_lipschitz(
    model: &BsdeModel,
    ensemble: &BrownianEnsemble,
    probes: usize,
    radius: f64,
    cauchy_scale: f64,
    seed: u64,
) -> Result<LipschitzProbe> {
    let bound = model.bind(ensemble)?;
    let (c1, c2) = bound.moduli();
    let (d, k) = (model.dim_y(), model.dim_w());
    let (m, n) = (ensemble.num_paths(), ensemble.grid().num_nodes());
    let cauchy = Cauchy::new(0.0, cauchy_scale).map_err(|e| BsdeError::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut y1, mut y2, mut z1, mut z2) = (vec![0.0; d], vec![0.0; d], vec![0.0; d * k], vec![0.0; d * k]);
    let (mut f1, mut f2) = (vec![0.0; d], vec![0.0; d]);
    let mut out = LipschitzProbe { probes, violations: 0, worst_ratio: 0.0 };
    for q in 0..probes {
        let heavy = q % 2 == 1;
        let node = rng.random_range(0..n);
        let path = rng.random_range(0..m);
        probe_vector(&mut rng, heavy, radius, &cauchy, &mut y1);
        probe_vector(&mut rng, heavy, radius, &cauchy, &mut y2);
        probe_vector(&mut rng, heavy, radius, &cauchy, &mut z1);
        probe_vector(&mut rng, heavy, radius, &cauchy, &mut z2);
        bound.eval_into(node, path, &y1, &z1, &mut f1);
        bound.eval_into(node, path, &y2, &z2, &mut f2);
        let df: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let dz: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - b).collect();
        let lhs = norm(&df);
        let rhs = c1[[path, node]] * norm(&dy) + c2[[path, node]] * norm(&dz);
        let slack = 4.0 * f64::EPSILON * (norm(&f1) + norm(&f2));
        if lhs > rhs * (1.0 + 1e-9) + slack {
            out.violations += 1;
        }
        if rhs > 0.0 {
            out.worst_ratio = out.worst_ratio.max(lhs / rhs);
        } else if lhs > slack {
            out.worst_ratio = f64::INFINITY;
        }
    }
    Ok(out)
}

/// Per-path samples of `p(T)|xi|^2` and `int p |f(.,0,0)|^2 / max(alpha, floor)`.
fn moment_samples(
    model: &BsdeModel,
    ensemble: &BrownianEnsemble,
    variant: Variant,
    spec: &WeightSpec,
    alpha_floor: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bound = model.bind(ensemble)?;
    let (c1, c2) = bound.moduli();
    let gamma = spec.gamma_for(variant).sample_named("gamma", ensemble)?;
    let alpha = alpha_from_tables(variant, c1, c2, &gamma, &spec.params)?;
    let weight = eval_weight(&alpha, ensemble.grid())?;
    let xi = model.terminal_samples(ensemble)?;
    let grid = ensemble.grid();
    let (m, d, k) = (ensemble.num_paths(), model.dim_y(), model.dim_w());
    let terminal: Vec<f64> =
        (0..m).map(|p| weight.terminal(p) * xi.row(p).iter().map(|v| v * v).sum::<f64>()).collect();
    let zeros_y = vec![0.0; d];
    let zeros_z = vec![0.0; d * k];
    let mut f = vec![0.0; d];
    let mut f0 = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];
    let mut integrand = |i: usize, out: &mut [f64]| {
        for (p, o) in out.iter_mut().enumerate() {
            bound.eval_into(i, p, &zeros_y, &zeros_z, &mut f);
            let a = alpha.values()[[p, i]].max(alpha_floor);
            *o = weight.value(p, i) * f.iter().map(|v| v * v).sum::<f64>() / a;
        }
    };
    integrand(0, &mut prev);
    for step in 0..grid.num_steps() {
        integrand(step + 1, &mut cur);
        let h = 0.5 * grid.dt(step);
        for p in 0..m {
            f0[p] += h * (prev[p] + cur[p]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok((terminal, f0))
}

/// Runs the three checks and the growth diagnostic on `grid`.
pub fn check_conditions(
    model: &BsdeModel,
    variant: Variant,
    spec: &WeightSpec,
    grid: &TimeGrid,
    config: &CertificateConfig,
) -> Result<CertificateReport> {
    config.validate()?;
    let mut growth = Vec::with_capacity(config.doublings + 1);
    let mut probe_ensemble = None;
    for level in 0..=config.doublings {
        let paths = config.base_paths << level;
        let seed = derive_seed(config.seed, &format!("certificate-level-{level}"));
        let ens = sample_brownian(grid, paths, model.dim_w(), seed)?;
        let (terminal, f0) = moment_samples(model, &ens, variant, spec, config.alpha_floor)
            .map_err(|e| e.context(format!("certificate for `{}` under {variant}, level {level}", model.name)))?;
        let (te, fe) = (Estimate::from_samples(&terminal), Estimate::from_samples(&f0));
        growth.push(GrowthLevel {
            paths,
            terminal: Estimate { value: median_of_means(&terminal, config.blocks), std_err: te.std_err },
            f0: Estimate { value: median_of_means(&f0, config.blocks), std_err: fe.std_err },
        });
        if level == 0 {
            probe_ensemble = Some(ens);
        }
    }
    let lipschitz = probe_lipschitz(
        model,
        probe_ensemble.as_ref().expect("level 0 exists"),
        config.probes,
        config.box_radius,
        config.cauchy_scale,
        derive_seed(config.seed, "certificate-lipschitz"),
    )?;
    let terminal_growth = growth_factors(&growth.iter().map(|g| g.terminal.value).collect::<Vec<_>>());
    let f0_growth = growth_factors(&growth.iter().map(|g| g.f0.value).collect::<Vec<_>>());
    let thr = config.growth_threshold;
    let diverging = |f: &[f64]| f.len() >= 3 && f.iter().all(|g| !(*g <= thr));
    let settled = |f: &[f64]| f.last().is_some_and(|g| *g <= thr);
    let (verdict, reason) = if lipschitz.violations > 0 {
        (
            Verdict::EvidenceFail,
            format!("{} of {} Lipschitz probes violate the declared moduli", lipschitz.violations, lipschitz.probes),
        )
    } else if diverging(&terminal_growth) {
        (Verdict::EvidenceFail, format!("terminal moment grows by more than {thr} at every doubling"))
    } else if diverging(&f0_growth) {
        (Verdict::EvidenceFail, format!("f(.,0,0) moment grows by more than {thr} at every doubling"))
    } else if settled(&terminal_growth) && settled(&f0_growth) {
        (Verdict::EvidencePass, "no probe violations; both moments stable at the last doubling".to_string())
    } else {
        (Verdict::Inconclusive, "moments have not stabilised at the last doubling".to_string())
    };
    let last = growth.last().expect("at least one level");
    Ok(CertificateReport {
        model: model.name.clone(),
        variant,
        params: spec.params,
        estimate_terminal: last.terminal.value,
        estimate_f0: last.f0.value,
        lipschitz,
        growth,
        terminal_growth,
        f0_growth,
        growth_threshold: thr,
        verdict,
        reason,
    })
}

/// Certificates of one model under both variants.
pub fn compare_variants(
    model: &BsdeModel,
    spec: &WeightSpec,
    grid: &TimeGrid,
    config: &CertificateConfig,
) -> Result<[CertificateReport; 2]> {
    Ok([
        check_conditions(model, Variant::A1, spec, grid, config)?,
        check_conditions(model, Variant::A2, spec, grid, config)?,
    ])
}

/// Certificates over candidate parameter sets, in order; stops at the first
/// evidence-pass when `stop_at_pass` is set. Weight overflow is recorded as
/// an evidence-fail row rather than aborting the search.
pub fn grid_search(
    model: &BsdeModel,
    variant: Variant,
    base: &WeightSpec,
    candidates: &[WeightParams],
    grid: &TimeGrid,
    config: &CertificateConfig,
    stop_at_pass: bool,
) -> Result<Vec<(WeightParams, Verdict)>> {
    let mut out = Vec::new();
    for params in candidates {
        let spec = WeightSpec { params: *params, ..base.clone() };
        let verdict = match check_conditions(model, variant, &spec, grid, config) {
            Ok(r) => r.verdict,
            Err(e) if matches!(e.root(), BsdeError::WeightOverflow { .. }) => Verdict::EvidenceFail,
            Err(e) => return Err(e),
        };
        out.push((*params, verdict));
        if stop_at_pass && verdict == Verdict::EvidencePass {
            break;
        }
    }
    Ok(out)
}
