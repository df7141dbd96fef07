//! The six experiment pipelines and the run driver that records them.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use bsde_core::brownian::{sample_brownian, BrownianEnsemble};
use bsde_core::certificate::{check_conditions, CertificateConfig, CertificateReport, Verdict};
use bsde_core::coefficients::CoefficientProcess;
use bsde_core::comparison::{
    run_comparison, verify_ordering_preconditions, ComparisonCase, ComparisonConfig, ComparisonScheme,
};
use bsde_core::constants::{
    conditions_comparison_table, critical_u, kappa, kh_beta_threshold_bracket, kh_beta_threshold_closed_form,
    kh_constants, KH_BETA,
};
use bsde_core::diagnostics::{IterationDiagnostics, Sequence};
use bsde_core::norms::weighted_m2_norm;
use bsde_core::oracle::linear_analytic_solution;
use bsde_core::rng::derive_seed;
use bsde_core::solver::{SolutionEnsemble, SolverContext};
use bsde_core::weights::{min_beta2, Variant, WeightProcess};
use bsde_core::BsdeError;
use ndarray::{Array3, Axis};
use sha2::{Digest, Sha256};

use crate::config::{
    parse_verdict, CompareScheme, ContractScheme, ExperimentConfig, ExperimentKind, SolveScheme,
};
use crate::output::{num, Check, OutputDir, RunManifest, RunStatus, Timing};

/// Name of the binary, recorded in manifests.
pub const TOOL: &str = "bsde-lab";

/// Checks and stage timings collected while a pipeline runs.
#[derive(Debug, Default)]
pub struct Recorder {
    checks: Vec<Check>,
    timings: Vec<Timing>,
}

impl Recorder {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing { stage: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}

/// The configuration as actually run: subcommand fixed, output location dropped.
pub fn effective_config(cfg: &ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig { experiment: Some(kind), output_dir: None, ..cfg.clone() }
}

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash(cfg: &ExperimentConfig, kind: ExperimentKind) -> String {
    let json = serde_json::to_vec(&effective_config(cfg, kind)).expect("config serialises");
    hex::encode(Sha256::digest(&json))
}

/// Default output location of an experiment.
pub fn default_output_dir(kind: ExperimentKind) -> PathBuf {
    Path::new("out").join(kind.name())
}

/// Runs one experiment into `dir` and writes its manifest last.
///
/// Pipeline errors are recorded in the manifest; only failures to write the
/// output directory itself are returned as `Err`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut out = OutputDir::create(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut rec = Recorder::default();
    let effective = effective_config(cfg, kind);
    let result = toml::to_string(&effective)
        .context("serialising the effective config")
        .and_then(|text| out.write("config.toml", |w| w.write_all(text.as_bytes())).context("writing config.toml"))
        .and_then(|()| cfg.check_for(kind).map_err(anyhow::Error::from))
        .and_then(|()| match kind {
            ExperimentKind::Solve => solve(cfg, &mut out, &mut rec),
            ExperimentKind::Certify => certify(cfg, &mut out, &mut rec),
            ExperimentKind::Contract => contract(cfg, &mut out, &mut rec),
            ExperimentKind::Compare => compare(cfg, &mut out, &mut rec),
            ExperimentKind::Bounds => bounds(cfg, &mut out, &mut rec),
            ExperimentKind::Table => table(cfg, &mut out, &mut rec),
        });
    let (status, error) = match result {
        Err(e) => (RunStatus::Error, Some(format!("{e:#}"))),
        Ok(()) if rec.checks.iter().all(|c| c.passed) => (RunStatus::Ok, None),
        Ok(()) => (RunStatus::ChecksFailed, None),
    };
    let versions = BTreeMap::from([
        (TOOL.to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("bsde-core".to_string(), bsde_core::VERSION.to_string()),
    ]);
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        experiment: kind.name().to_string(),
        config_hash: config_hash(cfg, kind),
        seed: cfg.seed,
        versions,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        timings: rec.timings,
        outputs: out.files().to_vec(),
        checks: rec.checks,
        status,
        error,
    };
    manifest.write_atomic(dir).with_context(|| format!("writing manifest in {}", dir.display()))?;
    Ok(manifest)
}

fn single_variant(cfg: &ExperimentConfig) -> Variant {
    cfg.weights.variant.variants()[0]
}

fn ensemble(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<BrownianEnsemble> {
    let grid = cfg.grid()?;
    let seed = derive_seed(cfg.seed, "ensemble");
    Ok(rec.stage("sample_brownian", || sample_brownian(&grid, cfg.ensemble.paths, cfg.ensemble.dim, seed))?)
}

fn certificate_config(cfg: &ExperimentConfig) -> Result<CertificateConfig> {
    Ok(CertificateConfig { seed: derive_seed(cfg.seed, "certificate"), ..cfg.certificate_config()? })
}

fn write_certificate(out: &mut OutputDir, name: &str, report: &CertificateReport) -> Result<()> {
    Ok(out.write(name, |w| report.write_text(w))?)
}

/// Per-node path averages of `y` and `z`.
fn write_node_means(out: &mut OutputDir, name: &str, sol: &SolutionEnsemble) -> Result<()> {
    let (d, k) = (sol.dim_y(), sol.dim_w());
    let mut header = vec!["node_index".to_string(), "t".to_string()];
    header.extend((0..d).map(|j| format!("mean_y_{j}")));
    header.extend((0..d).flat_map(|j| (0..k).map(move |l| format!("mean_z_{j}_{l}"))));
    let rows: Vec<Vec<String>> = (0..sol.grid().num_nodes())
        .map(|i| {
            let mut r = vec![i.to_string(), num(sol.grid().time(i))];
            r.extend(sol.mean_y(i).into_iter().map(num));
            r.extend(sol.mean_z(i).into_iter().map(num));
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(out.table(name, &header, &rows)?)
}

/// Largest over nodes of the path RMS of `a - b`.
fn max_node_rms<D: ndarray::Dimension + ndarray::RemoveAxis>(
    a: &ndarray::Array<f64, D>,
    b: &ndarray::Array<f64, D>,
) -> f64 {
    let diff = a - b;
    diff.axis_iter(Axis(1))
        .map(|node| (node.iter().map(|v| v * v).sum::<f64>() / node.len() as f64).sqrt())
        .fold(0.0, f64::max)
}

fn solve(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let model = cfg.model()?;
    let ens = ensemble(cfg, rec)?;
    let variant = single_variant(cfg);
    let opts = cfg.picard_options()?;
    let basis = cfg.basis()?;
    let ctx = rec.stage("fit_regressions", || SolverContext::new(&model, &ens, basis))?;
    let weighting = ctx.weighting(variant, &cfg.weight_spec()?)?;

    let mut solutions: Vec<(SolveScheme, SolutionEnsemble)> = Vec::new();
    for scheme in &cfg.solve.schemes {
        let name = scheme.name();
        let sol = match scheme {
            SolveScheme::Direct => rec.stage("solve_direct", || ctx.solve_direct())?,
            SolveScheme::PicardY => {
                let (sol, diag) = rec.stage("solve_picard_y", || ctx.solve_picard_y(&weighting, &opts))?;
                out.write("diagnostics_picard_y.tsv", |w| diag.write_tsv(w))?;
                rec.check(
                    "picard_y_converged",
                    sol.meta.converged,
                    format!("{} outer and {} inner iterations", sol.meta.iterations, sol.meta.inner_iterations),
                );
                sol
            }
        };
        out.write(&format!("solution_{name}.tsv"), |w| sol.write_tsv_paths(w, cfg.solve.path_rows))?;
        write_node_means(out, &format!("solution_{name}_nodes.tsv"), &sol)?;
        let series: Vec<(f64, f64)> = (0..ens.grid().num_nodes()).map(|i| (ens.grid().time(i), sol.mean_y(i)[0])).collect();
        out.series(&format!("series_y_mean_{name}.tsv"), ["t", "mean_y_0"], &series)?;
        solutions.push((*scheme, sol));
    }

    let summary: Vec<Vec<String>> = solutions
        .iter()
        .map(|(s, sol)| {
            vec![
                s.name().to_string(),
                sol.meta.variant.map_or("-".to_string(), |v| v.to_string()),
                num(sol.initial_value()[0]),
                sol.meta.iterations.to_string(),
                sol.meta.inner_iterations.to_string(),
                u8::from(sol.meta.converged).to_string(),
            ]
        })
        .collect();
    out.table("solve_summary.tsv", &["scheme", "variant", "y0", "iterations", "inner_iterations", "converged"], &summary)?;

    match linear_analytic_solution(&model, &ens) {
        Ok(exact) => {
            let unit = WeightProcess::deterministic(ens.num_paths(), &vec![0.0; ens.grid().num_nodes()]);
            let y0_exact = exact.initial_value()[0];
            let mut rows = Vec::new();
            for (s, sol) in &solutions {
                let y0 = sol.initial_value()[0];
                let abs_error = (y0 - y0_exact).abs();
                let rel_error = abs_error / y0_exact.abs();
                let diff = sol.y() - exact.y();
                let m2 = weighted_m2_norm(diff.view(), &unit, ens.grid())?;
                let rms_y = max_node_rms(sol.y(), exact.y());
                let rms_z = max_node_rms(sol.z(), exact.z());
                rows.push(vec![
                    s.name().to_string(),
                    num(y0),
                    num(y0_exact),
                    num(abs_error),
                    num(rel_error),
                    num(m2),
                    num(rms_y),
                    num(rms_z),
                ]);
                // A zero oracle makes the relative error meaningless; fall back to the absolute one.
                let err = if y0_exact == 0.0 { abs_error } else { rel_error };
                rec.check(
                    format!("oracle_{}", s.name()),
                    err < cfg.solve.oracle_rel_tol,
                    format!("y0 = {y0:e}, oracle = {y0_exact:e}, error = {err:e}, limit = {:e}", cfg.solve.oracle_rel_tol),
                );
            }
            out.table(
                "oracle.tsv",
                &["scheme", "y0", "y0_oracle", "abs_error", "rel_error", "m2_error", "max_node_rms_y", "max_node_rms_z"],
                &rows,
            )?;
        }
        Err(e) if matches!(e.root(), BsdeError::OracleUnavailable(_)) => {}
        Err(e) => return Err(e.into()),
    }

    let bound = cfg.solve.agreement_factor * opts.tol;
    let mut rows = Vec::new();
    for (i, (sa, a)) in solutions.iter().enumerate() {
        for (sb, b) in &solutions[i + 1..] {
            let diff = a.y() - b.y();
            let dist = weighted_m2_norm(diff.view(), &weighting.weight, ens.grid())?;
            rows.push(vec![sa.name().to_string(), sb.name().to_string(), num(dist), num(bound)]);
            rec.check(
                format!("agreement_{}_{}", sa.name(), sb.name()),
                dist < bound,
                format!("weighted distance {dist:e}, bound {bound:e}"),
            );
        }
    }
    out.table("agreement.tsv", &["scheme_a", "scheme_b", "m2_distance", "bound"], &rows)?;
    Ok(())
}

fn certify(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let spec = cfg.weight_spec()?;
    let config = certificate_config(cfg)?;
    let expect = cfg.certify.expect.as_deref().map(parse_verdict).transpose()?;
    for variant in cfg.weights.variant.variants() {
        let report = rec.stage(&format!("certificate_{variant}"), || check_conditions(&model, variant, &spec, &grid, &config))?;
        write_certificate(out, &format!("certificate_{variant}.txt"), &report)?;
        let factor = |f: &[f64], l: usize| if l == 0 { f64::NAN } else { f[l - 1] };
        let rows: Vec<Vec<String>> = report
            .growth
            .iter()
            .enumerate()
            .map(|(l, g)| {
                vec![
                    l.to_string(),
                    g.paths.to_string(),
                    num(g.terminal.value),
                    num(g.terminal.std_err),
                    num(g.f0.value),
                    num(g.f0.std_err),
                    num(factor(&report.terminal_growth, l)),
                    num(factor(&report.f0_growth, l)),
                ]
            })
            .collect();
        out.table(
            &format!("growth_{variant}.tsv"),
            &["level", "paths", "terminal", "terminal_se", "f0", "f0_se", "terminal_factor", "f0_factor"],
            &rows,
        )?;
        let series: Vec<(f64, f64)> =
            report.terminal_growth.iter().enumerate().map(|(i, g)| ((i + 1) as f64, *g)).collect();
        out.series(&format!("series_growth_{variant}.tsv"), ["doubling", "terminal_factor"], &series)?;
        if let Some(want) = expect {
            rec.check(
                format!("verdict_{variant}"),
                report.verdict == want,
                format!("verdict {}, expected {want}: {}", report.verdict, report.reason),
            );
        }
    }
    Ok(())
}

fn log_series(diag: &IterationDiagnostics, which: Sequence) -> Vec<(f64, f64)> {
    diag.sequence(which)
        .iter()
        .enumerate()
        .filter(|(_, e)| e.value > 0.0)
        .map(|(i, e)| ((i + 1) as f64, e.value.ln()))
        .collect()
}

fn contract(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let model = cfg.model()?;
    let ens = ensemble(cfg, rec)?;
    let variant = single_variant(cfg);
    let opts = cfg.picard_options()?;
    let basis = cfg.basis()?;
    let ctx = rec.stage("fit_regressions", || SolverContext::new(&model, &ens, basis))?;
    let weighting = ctx.weighting(variant, &cfg.weight_spec()?)?;
    let (sol, diag) = match cfg.contract.scheme {
        ContractScheme::Z => {
            let phi = Array3::zeros((ens.num_paths(), ens.grid().num_nodes(), model.dim_y()));
            rec.stage("solve_picard_z", || ctx.solve_picard_z(phi.view(), &weighting, &opts))?
        }
        ContractScheme::Y => rec.stage("solve_picard_y", || ctx.solve_picard_y(&weighting, &opts))?,
    };
    out.write("diagnostics.tsv", |w| diag.write_tsv(w))?;
    for (name, which) in
        [("eta", Sequence::Eta), ("mu", Sequence::Mu), ("nu", Sequence::Nu), ("lambda", Sequence::Lambda)]
    {
        out.series(&format!("series_{name}.tsv"), ["n", &format!("log_{name}")], &log_series(&diag, which))?;
    }
    let (sequence, check) = match (cfg.contract.scheme, variant) {
        (ContractScheme::Z, _) => ("mu", diag.check_mu(cfg.contract.slack)),
        (ContractScheme::Y, Variant::A1) => ("nu", diag.check_nu_factorial(cfg.contract.nu_slack)),
        (ContractScheme::Y, Variant::A2) => ("lambda", diag.check_lambda(cfg.contract.slack)),
    };
    let measured = check.measured.iter().map(|(n, v)| format!("{n}:{v:e}")).collect::<Vec<_>>().join(",");
    out.write("contract.txt", |w| {
        writeln!(w, "scheme: {}", diag.scheme)?;
        writeln!(w, "variant: {variant}")?;
        writeln!(w, "iterations: {}", diag.len())?;
        writeln!(w, "converged: {}", sol.meta.converged)?;
        writeln!(w, "sequence: {sequence}")?;
        writeln!(w, "bound: {:e}", check.bound)?;
        writeln!(w, "usable: {}", check.usable())?;
        writeln!(w, "measured: {measured}")?;
        writeln!(w, "worst: {:e}", check.worst())?;
        writeln!(w, "verdict: {}", if check.passed { "pass" } else { "fail" })
    })?;
    rec.check(
        format!("envelope_{sequence}"),
        check.passed,
        format!("worst {:e} against bound {:e}", check.worst(), check.bound),
    );
    rec.check(
        "usable_iterations",
        check.usable() >= cfg.contract.min_usable,
        format!("{} usable, {} required", check.usable(), cfg.contract.min_usable),
    );
    Ok(())
}

fn compare(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let base = cfg.model()?;
    let dominating = base
        .shift_generator(CoefficientProcess::constant(cfg.compare.generator_shift))
        .shift_terminal(cfg.compare.terminal_shift);
    let variant = single_variant(cfg);
    let spec = cfg.weight_spec()?;
    let case = ComparisonCase::new(base, dominating, variant)?;
    let ens = ensemble(cfg, rec)?;

    let pre = rec.stage("preconditions", || {
        verify_ordering_preconditions(&case, &ens, cfg.compare.probes, derive_seed(cfg.seed, "preconditions"))
    })?;
    out.write("preconditions.txt", |w| {
        writeln!(w, "terminal_checks: {}", pre.terminal_checks)?;
        writeln!(w, "terminal_failures: {}", pre.terminal_failures)?;
        writeln!(w, "min_terminal_gap: {:e}", pre.min_terminal_gap)?;
        writeln!(w, "generator_probes: {}", pre.generator_probes)?;
        writeln!(w, "generator_failures: {}", pre.generator_failures)?;
        writeln!(w, "min_generator_gap: {:e}", pre.min_generator_gap)?;
        writeln!(w, "waived: {}", cfg.compare.waive_preconditions)?;
        writeln!(w, "verdict: {}", if pre.passed() { "pass" } else { "fail" })
    })?;
    if !cfg.compare.waive_preconditions {
        rec.check(
            "preconditions",
            pre.passed(),
            format!("{} terminal and {} generator failures", pre.terminal_failures, pre.generator_failures),
        );
        if !pre.passed() {
            return Ok(());
        }
    }

    if cfg.compare.certify_base {
        let config = certificate_config(cfg)?;
        let report =
            rec.stage("base_certificate", || check_conditions(&case.base, variant, &spec, ens.grid(), &config))?;
        write_certificate(out, "base_certificate.txt", &report)?;
        rec.check(
            "base_certificate",
            report.verdict == Verdict::EvidencePass,
            format!("verdict {}: {}", report.verdict, report.reason),
        );
    }

    let scheme = match cfg.compare.scheme {
        CompareScheme::PicardY => ComparisonScheme::PicardY(cfg.picard_options()?),
        CompareScheme::Direct => ComparisonScheme::Direct,
    };
    let config = ComparisonConfig {
        basis: cfg.basis()?,
        scheme,
        se_multiple: cfg.compare.se_multiple,
        max_violation_fraction: cfg.compare.max_violation_fraction,
        ..ComparisonConfig::default()
    };
    let report = rec.stage("comparison", || run_comparison(&case, &ens, &spec, &config))?;
    out.write("comparison.txt", |w| report.write_text(w))?;
    out.write("comparison_nodes.tsv", |w| report.write_node_tsv(w))?;
    let gap: Vec<(f64, f64)> = report.nodes.iter().map(|n| (n.t, n.mean_diff)).collect();
    out.series("series_gap.tsv", ["t", "mean_diff"], &gap)?;
    rec.check(
        "comparison_verdict",
        report.passed == cfg.compare.expect_pass,
        format!(
            "verdict {}, expected {}; min_diff {:e}, tolerance {:e}",
            if report.passed { "pass" } else { "fail" },
            if cfg.compare.expect_pass { "pass" } else { "fail" },
            report.min_diff,
            report.min_tolerance
        ),
    );
    Ok(())
}

fn bounds(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let b = &cfg.bounds;
    let (lo, hi) = rec.stage("bisection", || kh_beta_threshold_bracket(b.tolerance, 1.0, 1.0e6))?;
    let closed = kh_beta_threshold_closed_form();
    let threshold = hi;
    out.table(
        "bounds.tsv",
        &["quantity", "value"],
        &[
            vec!["critical_u".into(), num(critical_u())],
            vec!["threshold_bisection".into(), num(threshold)],
            vec!["bracket_lo".into(), num(lo)],
            vec!["bracket_hi".into(), num(hi)],
            vec!["threshold_closed_form".into(), num(closed)],
            vec!["reference_threshold".into(), num(KH_BETA)],
        ],
    )?;
    rec.check(
        "threshold_matches_reference",
        (threshold - KH_BETA).abs() <= b.check_tolerance,
        format!("{threshold:e} against {KH_BETA:e}"),
    );
    rec.check(
        "threshold_matches_closed_form",
        (threshold - closed).abs() <= b.check_tolerance,
        format!("{threshold:e} against {closed:e}"),
    );

    let rows = b
        .betas
        .iter()
        .map(|&beta| {
            let r = kh_constants(beta)?;
            Ok(vec![
                num(r.beta),
                num(r.k_prime),
                num(r.k_tilde),
                num(r.k_hat),
                num(r.contraction_ratio),
                u8::from(r.feasible).to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    out.table("kh_constants.tsv", &["beta", "k_prime", "k_tilde", "k_hat", "contraction_ratio", "feasible"], &rows)?;

    let mut rows = Vec::new();
    for &b1 in &b.beta1_bar {
        let floor = min_beta2(b1)?;
        let at_floor = kappa(b1, floor)?;
        let interior_b2 = b.interior_factor * floor;
        let interior = kappa(b1, interior_b2)?;
        rows.push(vec![num(b1), num(floor), num(at_floor), num(at_floor - 1.0), num(interior_b2), num(interior)]);
        rec.check(
            format!("kappa_boundary_{b1}"),
            (at_floor - 1.0).abs() < 1e-12,
            format!("kappa - 1 = {:e}", at_floor - 1.0),
        );
        rec.check(format!("kappa_interior_{b1}"), interior < 1.0, format!("kappa = {interior:e}"));
    }
    out.table(
        "kappa_boundary.tsv",
        &["beta1_bar", "min_beta2", "kappa_at_min", "kappa_minus_one", "interior_beta2_bar", "kappa_interior"],
        &rows,
    )?;

    let series = (0..=100)
        .map(|i| {
            let beta = 100.0 * 100f64.powf(i as f64 / 100.0);
            Ok((beta, kh_constants(beta)?.contraction_ratio))
        })
        .collect::<Result<Vec<_>>>()?;
    out.series("series_contraction_ratio.tsv", ["beta", "contraction_ratio"], &series)?;
    Ok(())
}

fn table(cfg: &ExperimentConfig, out: &mut OutputDir, rec: &mut Recorder) -> Result<()> {
    let rows = conditions_comparison_table(&cfg.table.beta1_bar, cfg.table.reference_factor)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.beta1_bar),
                num(r.min_beta2),
                num(r.reference_beta2_bar),
                num(r.kappa_at_reference),
                num(r.kh_beta),
                num(r.a2_rate_unit),
                num(r.kh_rate_unit),
            ]
        })
        .collect();
    out.table(
        "conditions.tsv",
        &["beta1_bar", "min_beta2", "reference_beta2_bar", "kappa_at_reference", "kh_beta", "a2_rate_unit", "kh_rate_unit"],
        &cells,
    )?;
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta1_bar, r.min_beta2)).collect();
    out.series("series_min_beta2.tsv", ["beta1_bar", "min_beta2"], &series)?;
    for r in &rows {
        rec.check(
            format!("kappa_below_one_{}", r.beta1_bar),
            r.kappa_at_reference < 1.0,
            format!("kappa = {:e} at beta2_bar = {:e}", r.kappa_at_reference, r.reference_beta2_bar),
        );
    }
    Ok(())
}
