//! Experiment configuration: TOML text with fixed sections and documented defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bsde_core::catalog::build_model;
use bsde_core::certificate::{CertificateConfig, Verdict};
use bsde_core::coefficients::CoefficientProcess;
use bsde_core::diagnostics::NoiseFloor;
use bsde_core::grid::{make_grid, TimeGrid};
use bsde_core::model::BsdeModel;
use bsde_core::regression::RegressionBasis;
use bsde_core::solver::PicardOptions;
use bsde_core::weights::{Variant, WeightParams, WeightSpec};
use serde::{Deserialize, Serialize};

/// The six experiment pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Certify,
    Contract,
    Compare,
    Bounds,
    Table,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Solve,
        ExperimentKind::Certify,
        ExperimentKind::Contract,
        ExperimentKind::Compare,
        ExperimentKind::Bounds,
        ExperimentKind::Table,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Certify => "certify",
            ExperimentKind::Contract => "contract",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Table => "table",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment `{s}`")))
    }
}

/// A rejected configuration, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantChoice {
    A1,
    A2,
    #[serde(rename = "both")]
    Both,
}

impl VariantChoice {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantChoice::A1 => vec![Variant::A1],
            VariantChoice::A2 => vec![Variant::A2],
            VariantChoice::Both => vec![Variant::A1, Variant::A2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Catalog entry.
    pub name: String,
    /// Overrides of the entry's default parameters.
    pub params: BTreeMap<String, f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { name: "discount".into(), params: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub variant: VariantChoice,
    pub beta1: f64,
    pub beta2: f64,
    pub beta1_bar: f64,
    pub beta2_bar: f64,
    /// Constant `gamma` (A1).
    pub gamma: f64,
    /// Constant `gamma_bar` (A2).
    pub gamma_bar: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self { variant: VariantChoice::A1, beta1: 2.0, beta2: 4.0, beta1_bar: 5.0, beta2_bar: 2250.0, gamma: 1.0, gamma_bar: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { horizon: 1.0, steps: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub paths: usize,
    /// Brownian dimension `k`.
    pub dim: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { paths: 10_000, dim: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKindName {
    Polynomial,
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub kind: BasisKindName,
    pub degree: usize,
    pub bins: usize,
    pub ridge: f64,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { kind: BasisKindName::Polynomial, degree: 3, bins: 16, ridge: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Iterations whose increment is below this many standard errors are not usable.
    pub noise_se_multiple: f64,
    /// Iterations below this fraction of the first increment are not usable.
    pub noise_relative: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let n = NoiseFloor::default();
        Self {
            tol: 1e-10,
            max_iter: 50,
            inner_tol: 1e-10,
            inner_max_iter: 50,
            noise_se_multiple: n.se_multiple,
            noise_relative: n.relative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveScheme {
    Direct,
    PicardY,
}

impl SolveScheme {
    pub fn name(self) -> &'static str {
        match self {
            SolveScheme::Direct => "direct",
            SolveScheme::PicardY => "picard_y",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub schemes: Vec<SolveScheme>,
    /// Largest relative error of `y(0)` against the closed form, when one exists.
    pub oracle_rel_tol: f64,
    /// Weighted distance between schemes must stay below this multiple of `solver.tol`.
    pub agreement_factor: f64,
    /// Paths exported to the per-path solution tables.
    pub path_rows: usize,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            schemes: vec![SolveScheme::Direct, SolveScheme::PicardY],
            oracle_rel_tol: 0.02,
            agreement_factor: 5.0,
            path_rows: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySection {
    pub base_paths: usize,
    pub doublings: usize,
    pub blocks: usize,
    pub growth_threshold: f64,
    pub probes: usize,
    pub box_radius: f64,
    pub cauchy_scale: f64,
    pub alpha_floor: f64,
    /// Verdict required for a zero exit status; unchecked when absent.
    pub expect: Option<String>,
}

impl Default for CertifySection {
    fn default() -> Self {
        let c = CertificateConfig::default();
        Self {
            base_paths: c.base_paths,
            doublings: c.doublings,
            blocks: c.blocks,
            growth_threshold: c.growth_threshold,
            probes: c.probes,
            box_radius: c.box_radius,
            cauchy_scale: c.cauchy_scale,
            alpha_floor: c.alpha_floor,
            expect: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractScheme {
    Z,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractSection {
    /// `z`: z-Picard with `y` frozen at zero; `y`: the nested y-Picard scheme.
    pub scheme: ContractScheme,
    /// Multiplicative slack on the mu and lambda envelopes.
    pub slack: f64,
    /// Allowed relative rise of the factorial-normalised nu sequence.
    pub nu_slack: f64,
    /// Fewest usable iterations for the envelope check to count.
    pub min_usable: usize,
}

impl Default for ContractSection {
    fn default() -> Self {
        Self { scheme: ContractScheme::Z, slack: 1.5, nu_slack: 1.0, min_usable: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareScheme {
    Direct,
    PicardY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Dominating generator is `f + generator_shift`.
    pub generator_shift: f64,
    /// Dominating terminal value is `xi + terminal_shift`.
    pub terminal_shift: f64,
    pub scheme: CompareScheme,
    pub se_multiple: f64,
    pub max_violation_fraction: f64,
    pub probes: usize,
    /// Run even when the ordering hypotheses fail.
    pub waive_preconditions: bool,
    /// Require the base pair to earn an evidence-pass certificate for the variant.
    pub certify_base: bool,
    /// Verdict required for a zero exit status.
    pub expect_pass: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            generator_shift: 1.0,
            terminal_shift: 0.0,
            scheme: CompareScheme::PicardY,
            se_multiple: 5.0,
            max_violation_fraction: 1e-3,
            probes: 10_000,
            waive_preconditions: false,
            certify_base: true,
            expect_pass: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    /// Bisection tolerance for the threshold.
    pub tolerance: f64,
    /// Allowed distance of the threshold from 446.05 and from the closed form.
    pub check_tolerance: f64,
    /// Values of `beta` for the constant chain table.
    pub betas: Vec<f64>,
    /// Values of `beta1_bar` for the boundary identity of `kappa`.
    pub beta1_bar: Vec<f64>,
    /// `kappa` is also evaluated at this multiple of `min_beta2`.
    pub interior_factor: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            check_tolerance: 0.01,
            betas: vec![100.0, 446.05, 500.0, 1000.0],
            beta1_bar: vec![4.5, 5.0, 8.0, 20.0],
            interior_factor: 1.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    pub beta1_bar: Vec<f64>,
    /// Reference `beta2_bar` is this multiple of `min_beta2`.
    pub reference_factor: f64,
}

impl Default for TableSection {
    fn default() -> Self {
        Self { beta1_bar: vec![4.1, 4.5, 5.0, 6.0, 8.0, 10.0, 20.0, 50.0], reference_factor: 2.0 }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    pub experiment: Option<ExperimentKind>,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub model: ModelSection,
    pub weights: WeightsSection,
    pub grid: GridSection,
    pub ensemble: EnsembleSection,
    pub basis: BasisSection,
    pub solver: SolverSection,
    pub solve: SolveSection,
    pub certify: CertifySection,
    pub contract: ContractSection,
    pub compare: CompareSection,
    pub bounds: BoundsSection,
    pub table: TableSection,
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {v}")))
    }
}

fn nonneg(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be nonnegative and finite, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be finite, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be at least {min}, got {v}")))
    }
}

impl ExperimentConfig {
    /// Checks every constraint the pipelines rely on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.weight_params()?;
        nonneg("weights.gamma", self.weights.gamma)?;
        nonneg("weights.gamma_bar", self.weights.gamma_bar)?;
        positive("grid.horizon", self.grid.horizon)?;
        at_least("grid.steps", self.grid.steps, 1)?;
        at_least("ensemble.paths", self.ensemble.paths, 1)?;
        at_least("ensemble.dim", self.ensemble.dim, 1)?;
        self.model()?;
        self.basis()?;
        self.picard_options()?;
        positive("solver.noise_se_multiple", self.solver.noise_se_multiple)?;
        nonneg("solver.noise_relative", self.solver.noise_relative)?;

        if self.solve.schemes.is_empty() {
            return Err(ConfigError::new("solve.schemes", "list at least one scheme"));
        }
        positive("solve.oracle_rel_tol", self.solve.oracle_rel_tol)?;
        positive("solve.agreement_factor", self.solve.agreement_factor)?;

        self.certificate_config()?;
        if let Some(expect) = &self.certify.expect {
            parse_verdict(expect)?;
        }

        positive("contract.slack", self.contract.slack)?;
        positive("contract.nu_slack", self.contract.nu_slack)?;
        at_least("contract.min_usable", self.contract.min_usable, 1)?;

        finite("compare.generator_shift", self.compare.generator_shift)?;
        finite("compare.terminal_shift", self.compare.terminal_shift)?;
        positive("compare.se_multiple", self.compare.se_multiple)?;
        nonneg("compare.max_violation_fraction", self.compare.max_violation_fraction)?;

        positive("bounds.tolerance", self.bounds.tolerance)?;
        positive("bounds.check_tolerance", self.bounds.check_tolerance)?;
        for b in &self.bounds.betas {
            positive("bounds.betas", *b)?;
        }
        for b in self.bounds.beta1_bar.iter().chain(&self.table.beta1_bar) {
            if !(*b > 4.0 && b.is_finite()) {
                return Err(ConfigError::new("beta1_bar", format!("every entry must satisfy beta1_bar > 4, got {b}")));
            }
        }
        if !(self.bounds.interior_factor > 1.0 && self.bounds.interior_factor.is_finite()) {
            return Err(ConfigError::new("bounds.interior_factor", "must exceed 1"));
        }
        if !(self.table.reference_factor > 1.0 && self.table.reference_factor.is_finite()) {
            return Err(ConfigError::new("table.reference_factor", "must exceed 1"));
        }
        Ok(())
    }

    /// Fails when the variant choice does not fit the experiment.
    pub fn check_for(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(ConfigError::new("experiment", format!("config is for `{k}`, subcommand is `{kind}`")));
            }
        }
        let single = matches!(kind, ExperimentKind::Solve | ExperimentKind::Contract | ExperimentKind::Compare);
        if single && self.weights.variant == VariantChoice::Both {
            return Err(ConfigError::new("weights.variant", format!("`{kind}` needs a single variant, A1 or A2")));
        }
        Ok(())
    }

    pub fn weight_params(&self) -> Result<WeightParams, ConfigError> {
        let w = &self.weights;
        WeightParams::new(w.beta1, w.beta2, w.beta1_bar, w.beta2_bar).map_err(|e| ConfigError::new("weights", e.to_string()))
    }

    pub fn weight_spec(&self) -> Result<WeightSpec, ConfigError> {
        Ok(WeightSpec::new(
            self.weight_params()?,
            CoefficientProcess::constant(self.weights.gamma),
            CoefficientProcess::constant(self.weights.gamma_bar),
        ))
    }

    pub fn model(&self) -> Result<BsdeModel, ConfigError> {
        build_model(&self.model.name, &self.model.params, self.ensemble.dim).map_err(|e| ConfigError::new("model", e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid, ConfigError> {
        make_grid(self.grid.horizon, self.grid.steps).map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn basis(&self) -> Result<RegressionBasis, ConfigError> {
        let b = &self.basis;
        let out = match b.kind {
            BasisKindName::Polynomial => RegressionBasis::polynomial(b.degree, b.ridge),
            BasisKindName::Piecewise => RegressionBasis::piecewise(b.bins, b.ridge),
        };
        out.map_err(|e| ConfigError::new("basis", e.to_string()))
    }

    pub fn picard_options(&self) -> Result<PicardOptions, ConfigError> {
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        positive("solver.inner_tol", s.inner_tol)?;
        at_least("solver.max_iter", s.max_iter, 1)?;
        at_least("solver.inner_max_iter", s.inner_max_iter, 1)?;
        Ok(PicardOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            inner_tol: s.inner_tol,
            inner_max_iter: s.inner_max_iter,
            noise: NoiseFloor { se_multiple: s.noise_se_multiple, relative: s.noise_relative },
        })
    }

    /// Certificate budget; `seed` is filled in by the runner.
    pub fn certificate_config(&self) -> Result<CertificateConfig, ConfigError> {
        let c = &self.certify;
        positive("certify.growth_threshold", c.growth_threshold)?;
        positive("certify.box_radius", c.box_radius)?;
        positive("certify.cauchy_scale", c.cauchy_scale)?;
        positive("certify.alpha_floor", c.alpha_floor)?;
        let out = CertificateConfig {
            base_paths: c.base_paths,
            doublings: c.doublings,
            blocks: c.blocks,
            growth_threshold: c.growth_threshold,
            probes: c.probes,
            box_radius: c.box_radius,
            cauchy_scale: c.cauchy_scale,
            alpha_floor: c.alpha_floor,
            seed: 0,
        };
        out.validate().map_err(|e| ConfigError::new("certify", e.to_string()))?;
        Ok(out)
    }
}

/// Parses `evidence-pass`, `evidence-fail` or `inconclusive`.
pub fn parse_verdict(s: &str) -> Result<Verdict, ConfigError> {
    [Verdict::EvidencePass, Verdict::EvidenceFail, Verdict::Inconclusive]
        .into_iter()
        .find(|v| v.to_string() == s)
        .ok_or_else(|| {
            ConfigError::new("certify.expect", format!("unknown verdict `{s}` (evidence-pass, evidence-fail, inconclusive)"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config("[model]\nname = \"martingale\"\n").unwrap();
        assert_eq!(cfg.model.name, "martingale");
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.weights, WeightsSection::default());
        assert_eq!(cfg.basis.degree, 3);
        assert_eq!(cfg.basis.ridge, 1e-8);
        assert_eq!(cfg.seed, 0);
        assert_eq!(parse_config("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn weight_constraints_are_quoted() {
        let err = parse_config("[weights]\nbeta1_bar = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("beta1_bar > 4"), "{err}");
        let err = parse_config("[weights]\nbeta2_bar = 200.0\n").unwrap_err();
        assert!(err.to_string().contains("beta2_bar > 90 beta1_bar^2 / (beta1_bar^2 - 16)"), "{err}");
        let err = parse_config("[weights]\nbeta1 = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("beta1 > 1"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_config("[grid]\nsteps = 4\n[grid]\nsteps = 5\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("[grid]\nstep = 4\n").unwrap_err();
        assert!(err.to_string().contains("unknown field `step`"), "{err}");
        assert!(parse_config("[nonsense]\n").is_err());
    }

    #[test]
    fn catalog_names_are_checked() {
        let err = parse_config("[model]\nname = \"nope\"\n").unwrap_err();
        assert!(err.to_string().contains("unknown model `nope`"), "{err}");
        let err = parse_config("[model]\nname = \"discount\"\nparams = { rate = 1.0 }\n").unwrap_err();
        assert!(err.to_string().contains("no parameter `rate`"), "{err}");
    }

    #[test]
    fn numeric_ranges_are_checked() {
        assert!(parse_config("[grid]\nhorizon = 0.0\n").is_err());
        assert!(parse_config("[grid]\nsteps = 0\n").is_err());
        assert!(parse_config("[basis]\nridge = -1.0\n").is_err());
        assert!(parse_config("[certify]\ndoublings = 2\n").is_err());
        assert!(parse_config("[certify]\nexpect = \"maybe\"\n").is_err());
        assert!(parse_config("[table]\nbeta1_bar = [5.0, 4.0]\n").is_err());
        assert!(parse_config("[solver]\ntol = 0.0\n").is_err());
    }

    #[test]
    fn subcommand_must_match() {
        let cfg = parse_config("experiment = \"solve\"\n").unwrap();
        assert!(cfg.check_for(ExperimentKind::Solve).is_ok());
        assert!(cfg.check_for(ExperimentKind::Bounds).is_err());
        let cfg = parse_config("[weights]\nvariant = \"both\"\n").unwrap();
        assert!(cfg.check_for(ExperimentKind::Certify).is_ok());
        assert!(cfg.check_for(ExperimentKind::Compare).is_err());
    }
}
