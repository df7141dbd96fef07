//! Weighted increments of Picard iterates and their theoretical envelopes.
//!
//! For consecutive iterates `(y_{n-1}, z_{n-1})`, `(y_n, z_n)` and the weight
//! `p` of the active variant:
//!
//! * `eta_n = E int p |y_n - y_{n-1}|^2 dt` (called `nu_n` in the y-scheme),
//! * `mu_n = E int p |z_n - z_{n-1}|^2 dt`,
//! * `lambda_n = E int p alpha |y_n - y_{n-1}|^2 dt`.
//!
//! Envelopes: `mu_1 r^{n-1}` with `r = 1/beta2` (A1) or `1/beta2_bar` (A2),
//! `nu_1 beta1^{-(n-1)} / (n-1)!`, and `kappa^{n-1} lambda_1`.

use std::io::{self, Write};

use ndarray::{Array3, ArrayView3, ArrayView4};

use crate::constants::kappa;
use crate::error::{BsdeError, Result};
use crate::grid::TimeGrid;
use crate::layout::{diff3, diff4_flat};
use crate::model::BoundModel;
use crate::norms::{alpha_weighted_m2_estimate, weighted_m2_estimate, Estimate};
use crate::weights::{alpha_from_tables, eval_weight, AlphaProcess, Variant, WeightParams, WeightProcess, WeightSpec};

/// The alpha process and weight of one variant, sampled for one model.
#[derive(Debug, Clone)]
pub struct Weighting {
    pub variant: Variant,
    pub params: WeightParams,
    pub alpha: AlphaProcess,
    pub weight: WeightProcess,
}

impl Weighting {
    /// Builds `alpha` from the model's declared moduli and the variant's `gamma`.
    pub fn for_model(bound: &BoundModel<'_>, variant: Variant, spec: &WeightSpec) -> Result<Self> {
        let (c1, c2) = bound.moduli();
        let gamma = spec.gamma_for(variant).sample_named("gamma", bound.ensemble())?;
        let alpha = alpha_from_tables(variant, c1, c2, &gamma, &spec.params)?;
        let weight = eval_weight(&alpha, bound.ensemble().grid())
            .map_err(|e| e.context(format!("weight for variant {variant}")))?;
        Ok(Self { variant, params: spec.params, alpha, weight })
    }

    /// Contraction rate of the z-scheme envelope.
    pub fn z_rate(&self) -> f64 {
        match self.variant {
            Variant::A1 => 1.0 / self.params.beta2(),
            Variant::A2 => 1.0 / self.params.beta2_bar(),
        }
    }

    /// `kappa(beta1_bar, beta2_bar)`.
    pub fn kappa(&self) -> f64 {
        kappa(self.params.beta1_bar(), self.params.beta2_bar()).expect("validated weight parameters")
    }
}

/// Which Picard scheme produced a set of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardScheme {
    Z,
    Y,
}

impl std::fmt::Display for PicardScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PicardScheme::Z => write!(f, "picard_z"),
            PicardScheme::Y => write!(f, "picard_y"),
        }
    }
}

/// Exclusion rule for increments dominated by noise or round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFloor {
    /// Increments below this many standard errors are unusable.
    pub se_multiple: f64,
    /// Increments below this fraction of the first increment are unusable.
    pub relative: f64,
}

impl Default for NoiseFloor {
    fn default() -> Self {
        Self { se_multiple: 10.0, relative: 1e-14 }
    }
}

impl NoiseFloor {
    fn threshold(&self, e: &Estimate, first: f64) -> f64 {
        (self.se_multiple * e.std_err).max(self.relative * first)
    }
}

/// Increments between iterate `n - 1` and iterate `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eta: Estimate,
    pub mu: Estimate,
    pub lambda: Estimate,
    /// Inner z-iterations spent (y-scheme only; 0 otherwise).
    pub inner_iterations: usize,
}

/// Result of checking one sequence against its envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    /// Measured statistics (ratio or normalised value) over usable iterations.
    pub measured: Vec<(usize, f64)>,
    pub bound: f64,
    pub passed: bool,
}

impl EnvelopeCheck {
    pub fn usable(&self) -> usize {
        self.measured.len()
    }

    pub fn worst(&self) -> f64 {
        self.measured.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-iteration increments with the data needed for their envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    pub scheme: PicardScheme,
    pub variant: Variant,
    pub params: WeightParams,
    pub noise: NoiseFloor,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

/// One of the tracked sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sequence {
    Eta,
    Mu,
    Nu,
    Lambda,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl IterationDiagnostics {
    pub fn new(scheme: PicardScheme, variant: Variant, params: WeightParams) -> Self {
        Self { scheme, variant, params, noise: NoiseFloor::default(), records: Vec::new(), converged: false }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Estimates of one sequence, indexed from iteration 1.
    pub fn sequence(&self, which: Sequence) -> Vec<Estimate> {
        self.records
            .iter()
            .map(|r| match which {
                Sequence::Eta | Sequence::Nu => r.eta,
                Sequence::Mu => r.mu,
                Sequence::Lambda => r.lambda,
            })
            .collect()
    }

    /// The sequence that drives stopping: `mu` (z-scheme), `nu` (A1 y-scheme)
    /// or `lambda` (A2 y-scheme).
    pub fn active_sequence(&self) -> Sequence {
        match (self.scheme, self.variant) {
            (PicardScheme::Z, _) => Sequence::Mu,
            (PicardScheme::Y, Variant::A1) => Sequence::Nu,
            (PicardScheme::Y, Variant::A2) => Sequence::Lambda,
        }
    }

    pub fn kappa(&self) -> f64 {
        kappa(self.params.beta1_bar(), self.params.beta2_bar()).expect("validated weight parameters")
    }

    fn z_rate(&self) -> f64 {
        match self.variant {
            Variant::A1 => 1.0 / self.params.beta2(),
            Variant::A2 => 1.0 / self.params.beta2_bar(),
        }
    }

    /// Theoretical envelope of `which` at iteration `n >= 1`.
    pub fn envelope(&self, which: Sequence, n: usize) -> f64 {
        let Some(first) = self.records.first() else { return f64::NAN };
        let m = (n.max(1) - 1) as i32;
        match which {
            Sequence::Mu => first.mu.value * self.z_rate().powi(m),
            Sequence::Nu => first.eta.value * self.params.beta1().powi(-m) / factorial(m as usize),
            Sequence::Lambda => first.lambda.value * self.kappa().powi(m),
            // eta_{n+1} <= beta2^{-n} E int p |z_1|^2, and z_0 = 0 makes that mu_1.
            Sequence::Eta => first.mu.value * self.z_rate().powi(m),
        }
    }

    /// Whether iteration `n` of `which` lies above the noise floor.
    pub fn usable(&self, which: Sequence, n: usize) -> bool {
        let seq = self.sequence(which);
        if n == 0 || n > seq.len() {
            return false;
        }
        let e = seq[n - 1];
        e.value > 0.0 && e.value > self.noise.threshold(&e, seq[0].value)
    }

    /// Successive ratios `s_{n+1}/s_n` with both ends usable, keyed by `n`.
    pub fn ratios(&self, which: Sequence) -> Vec<(usize, f64)> {
        let seq = self.sequence(which);
        (1..seq.len())
            .filter(|&n| self.usable(which, n) && self.usable(which, n + 1))
            .map(|n| (n, seq[n].value / seq[n - 1].value))
            .collect()
    }

    /// Measured-over-envelope ratio per iteration (`<= 1` means inside).
    pub fn envelope_ratios(&self, which: Sequence) -> Vec<f64> {
        let seq = self.sequence(which);
        (1..=seq.len())
            .map(|n| {
                let env = self.envelope(which, n);
                if env > 0.0 {
                    seq[n - 1].value / env
                } else if seq[n - 1].value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    /// Every usable ratio `mu_{n+1}/mu_n` is at most `slack * r`.
    pub fn check_mu(&self, slack: f64) -> EnvelopeCheck {
        let bound = slack * self.z_rate();
        let measured = self.ratios(Sequence::Mu);
        let passed = measured.iter().all(|m| m.1 <= bound);
        EnvelopeCheck { measured, bound, passed }
    }

    /// Every usable ratio `lambda_{n+1}/lambda_n` is at most `slack * kappa`.
    pub fn check_lambda(&self, slack: f64) -> EnvelopeCheck {
        let bound = slack * self.kappa();
        let measured = self.ratios(Sequence::Lambda);
        let passed = measured.iter().all(|m| m.1 <= bound);
        EnvelopeCheck { measured, bound, passed }
    }

    /// `nu_{n+1} n! beta1^n / nu_1` over usable iterations, which must be
    /// non-increasing (up to a relative `slack - 1`) and at most `slack`.
    pub fn check_nu_factorial(&self, slack: f64) -> EnvelopeCheck {
        let seq = self.sequence(Sequence::Nu);
        let measured: Vec<(usize, f64)> = (1..=seq.len())
            .filter(|&n| self.usable(Sequence::Nu, n))
            .map(|n| {
                let m = n - 1;
                (n, seq[n - 1].value * factorial(m) * self.params.beta1().powi(m as i32) / seq[0].value)
            })
            .collect();
        let monotone = measured.windows(2).all(|w| w[1].1 <= w[0].1 * slack);
        let bounded = measured.iter().all(|m| m.1 <= slack);
        EnvelopeCheck { measured, bound: slack, passed: monotone && bounded }
    }

    /// Tab-separated table, one row per iteration.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "iteration\teta\teta_se\tmu\tmu_se\tnu\tnu_se\tlambda\tlambda_se\tmu_envelope\tnu_envelope\tlambda_envelope\tmu_ratio\tlambda_ratio\tnu_normalized\tusable_mu\tusable_nu\tusable_lambda\tinner_iterations"
        )?;
        for (i, r) in self.records.iter().enumerate() {
            let n = i + 1;
            let prev = i.checked_sub(1).map(|j| self.records[j]);
            let ratio = |a: f64, b: Option<f64>| b.map_or(f64::NAN, |b| if b > 0.0 { a / b } else { f64::NAN });
            let first_nu = self.records[0].eta.value;
            let nu_norm = if first_nu > 0.0 {
                r.eta.value * factorial(i) * self.params.beta1().powi(i as i32) / first_nu
            } else {
                f64::NAN
            };
            writeln!(
                out,
                "{n}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{}\t{}\t{}\t{}",
                r.eta.value,
                r.eta.std_err,
                r.mu.value,
                r.mu.std_err,
                r.eta.value,
                r.eta.std_err,
                r.lambda.value,
                r.lambda.std_err,
                self.envelope(Sequence::Mu, n),
                self.envelope(Sequence::Nu, n),
                self.envelope(Sequence::Lambda, n),
                ratio(r.mu.value, prev.map(|p| p.mu.value)),
                ratio(r.lambda.value, prev.map(|p| p.lambda.value)),
                nu_norm,
                u8::from(self.usable(Sequence::Mu, n)),
                u8::from(self.usable(Sequence::Nu, n)),
                u8::from(self.usable(Sequence::Lambda, n)),
                r.inner_iterations,
            )?;
        }
        Ok(())
    }
}

/// Increments between two iterates under a weighting.
pub fn increment_record(
    iteration: usize,
    prev: (ArrayView3<f64>, ArrayView4<f64>),
    next: (ArrayView3<f64>, ArrayView4<f64>),
    weighting: &Weighting,
    grid: &TimeGrid,
) -> Result<IterationRecord> {
    if prev.0.dim() != next.0.dim() || prev.1.dim() != next.1.dim() {
        return Err(BsdeError::ShapeMismatch {
            context: "iterate increments",
            expected: prev.1.shape().to_vec(),
            found: next.1.shape().to_vec(),
        });
    }
    let dy: Array3<f64> = diff3(next.0, prev.0);
    let dz = diff4_flat(next.1, prev.1);
    Ok(IterationRecord {
        iteration,
        eta: weighted_m2_estimate(dy.view(), &weighting.weight, grid)?,
        mu: weighted_m2_estimate(dz.view(), &weighting.weight, grid)?,
        lambda: alpha_weighted_m2_estimate(dy.view(), &weighting.weight, &weighting.alpha, grid)?,
        inner_iterations: 0,
    })
}

/// Diagnostics over a stored sequence of iterates `(y_n, z_n)`, `n = 0, 1, ...`.
pub fn compute_diagnostics(
    scheme: PicardScheme,
    iterates: &[(ArrayView3<f64>, ArrayView4<f64>)],
    weighting: &Weighting,
    grid: &TimeGrid,
) -> Result<IterationDiagnostics> {
    if iterates.len() < 2 {
        return Err(BsdeError::invalid("diagnostics need at least two iterates"));
    }
    let mut diag = IterationDiagnostics::new(scheme, weighting.variant, weighting.params);
    for (n, pair) in iterates.windows(2).enumerate() {
        diag.records.push(increment_record(n + 1, pair[0], pair[1], weighting, grid)?);
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::weights::AlphaProcess;
    use ndarray::{Array2, Array4};

    fn unit_weighting(m: usize, grid: &TimeGrid, variant: Variant) -> Weighting {
        let alpha = AlphaProcess::from_values(variant, Array2::ones((m, grid.num_nodes()))).unwrap();
        let weight = eval_weight(&alpha, grid).unwrap();
        Weighting { variant, params: WeightParams::default(), alpha, weight }
    }

    fn iterate(m: usize, n: usize, v: f64) -> (Array3<f64>, Array4<f64>) {
        (Array3::from_elem((m, n, 1), v), Array4::from_elem((m, n, 1, 1), v))
    }

    #[test]
    fn identical_iterates_have_zero_increments() {
        let g = make_grid(1.0, 4).unwrap();
        let w = unit_weighting(3, &g, Variant::A1);
        let a = iterate(3, 5, 0.7);
        let d = compute_diagnostics(PicardScheme::Z, &[(a.0.view(), a.1.view()), (a.0.view(), a.1.view())], &w, &g)
            .unwrap();
        let r = d.records[0];
        assert_eq!((r.eta.value, r.mu.value, r.lambda.value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn base_case_envelope_is_first_value() {
        let g = make_grid(1.0, 4).unwrap();
        let w = unit_weighting(3, &g, Variant::A1);
        let (a, b) = (iterate(3, 5, 0.0), iterate(3, 5, 1.0));
        let d = compute_diagnostics(PicardScheme::Z, &[(a.0.view(), a.1.view()), (b.0.view(), b.1.view())], &w, &g)
            .unwrap();
        assert_eq!(d.envelope(Sequence::Mu, 1), d.records[0].mu.value);
        assert!(d.envelope_ratios(Sequence::Mu)[0] <= 1.0);
        assert_eq!(d.envelope(Sequence::Nu, 1), d.records[0].eta.value);
        assert_eq!(d.envelope(Sequence::Lambda, 1), d.records[0].lambda.value);
    }

    #[test]
    fn geometric_iterates_quarter_per_step() {
        let g = make_grid(1.0, 4).unwrap();
        let w = unit_weighting(3, &g, Variant::A1);
        let mut owned = vec![iterate(3, 5, 0.0)];
        let mut acc = 0.0;
        for n in 1..=6 {
            acc += 0.5f64.powi(n);
            owned.push(iterate(3, 5, acc));
        }
        let views: Vec<_> = owned.iter().map(|(y, z)| (y.view(), z.view())).collect();
        let d = compute_diagnostics(PicardScheme::Y, &views, &w, &g).unwrap();
        for (_, r) in d.ratios(Sequence::Eta) {
            assert!((r - 0.25).abs() < 1e-12);
        }
        assert_eq!(d.ratios(Sequence::Eta).len(), 5);
    }

    #[test]
    fn envelopes_follow_parameters() {
        let g = make_grid(1.0, 4).unwrap();
        let mut d = IterationDiagnostics::new(PicardScheme::Y, Variant::A2, WeightParams::default());
        let e = Estimate { value: 1.0, std_err: 0.0 };
        d.records.push(IterationRecord { iteration: 1, eta: e, mu: e, lambda: e, inner_iterations: 0 });
        let _ = g;
        assert!((d.envelope(Sequence::Lambda, 3) - 4.0 / 9.0).abs() < 1e-15);
        assert!((d.envelope(Sequence::Nu, 4) - 1.0 / (8.0 * 6.0)).abs() < 1e-15);
        assert!((d.envelope(Sequence::Mu, 2) - 1.0 / 2250.0).abs() < 1e-15);
        assert_eq!(d.active_sequence(), Sequence::Lambda);
    }

    #[test]
    fn noise_floor_excludes_tiny_values() {
        let mut d = IterationDiagnostics::new(PicardScheme::Z, Variant::A1, WeightParams::default());
        let vals = [(1.0, 0.01), (0.1, 0.001), (1e-3, 2e-4), (1e-16, 0.0)];
        for (i, (v, s)) in vals.iter().enumerate() {
            let e = Estimate { value: *v, std_err: *s };
            d.records.push(IterationRecord { iteration: i + 1, eta: e, mu: e, lambda: e, inner_iterations: 0 });
        }
        assert!(d.usable(Sequence::Mu, 1) && d.usable(Sequence::Mu, 2));
        assert!(!d.usable(Sequence::Mu, 3), "within 10 standard errors");
        assert!(!d.usable(Sequence::Mu, 4), "below the round-off floor");
        assert_eq!(d.ratios(Sequence::Mu), vec![(1, 0.1)]);
    }
}
