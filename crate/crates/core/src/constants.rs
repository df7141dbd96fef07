//! Constant arithmetic behind the contraction factor `kappa`, the
//! `beta2_bar` threshold and the `beta > 446.05` bound for the reference
//! conditions with a single large constant `beta`.

use crate::error::{BsdeError, Result};
pub use crate::weights::min_beta2;

/// The chain `k' -> k~' -> k^'` at one value of `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsReport {
    pub beta: f64,
    pub k_prime: f64,
    pub k_tilde: f64,
    pub k_hat: f64,
    pub contraction_ratio: f64,
    pub feasible: bool,
}

/// `k' = 45 + 8/beta`, `k~' = 3 k' (k'/beta + 1)`, `k^' = 3 k~'`, feasible iff `k^'/beta < 1`.
pub fn kh_constants(beta: f64) -> Result<ConstantsReport> {
    if !(beta > 0.0) {
        return Err(BsdeError::invalid(format!("beta must be positive, got {beta}")));
    }
    let k_prime = 45.0 + 8.0 / beta;
    let k_tilde = 3.0 * k_prime * (k_prime / beta + 1.0);
    let k_hat = 3.0 * k_tilde;
    let contraction_ratio = k_hat / beta;
    Ok(ConstantsReport {
        beta,
        k_prime,
        k_tilde,
        k_hat,
        contraction_ratio,
        feasible: contraction_ratio < 1.0,
    })
}

fn ratio(beta: f64) -> f64 {
    let u = 45.0 / beta + 8.0 / (beta * beta);
    9.0 * u * (u + 1.0)
}

/// Root `u* = (-3 + sqrt 13)/6` of `9u(u+1) = 1`.
pub fn critical_u() -> f64 {
    (13f64.sqrt() - 3.0) / 6.0
}

/// The threshold from the quadratic formula: the positive root of
/// `u* beta^2 - 45 beta - 8 = 0`.
pub fn kh_beta_threshold_closed_form() -> f64 {
    let u = critical_u();
    (45.0 + (2025.0 + 32.0 * u).sqrt()) / (2.0 * u)
}

/// Bracket `(lo, hi)` with `hi - lo <= tolerance`, `k^'/beta >= 1` at `lo`
/// and `< 1` at `hi`, found by bisection starting from `[lo, hi]`.
pub fn kh_beta_threshold_bracket(tolerance: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(tolerance > 0.0) {
        return Err(BsdeError::invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    if !(lo > 0.0 && hi > lo) || ratio(lo) < 1.0 || ratio(hi) >= 1.0 {
        return Err(BsdeError::invalid(format!("[{lo}, {hi}] does not bracket the threshold")));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Smallest feasible `beta` to within `tolerance` (upper end of the bracket).
pub fn kh_beta_threshold(tolerance: f64) -> Result<f64> {
    Ok(kh_beta_threshold_bracket(tolerance, 1.0, 1.0e6)?.1)
}

/// `kappa = 16/b1^2 + (16/b2)(90/b1^2)/(1 - 90/b2)`, evaluated as
/// `16/b1^2 + 1440/(b1^2 (b2 - 90))` so that the subtraction is exact near the floor.
pub fn kappa(beta1_bar: f64, beta2_bar: f64) -> Result<f64> {
    if !(beta1_bar > 4.0) {
        return Err(BsdeError::invalid(format!("beta1_bar must satisfy beta1_bar > 4, got {beta1_bar}")));
    }
    if !(beta2_bar > 90.0) {
        return Err(BsdeError::invalid(format!(
            "denominator nonpositive: kappa needs beta2_bar > 90, got {beta2_bar}"
        )));
    }
    let b1 = beta1_bar * beta1_bar;
    Ok(16.0 / b1 + 1440.0 / (b1 * (beta2_bar - 90.0)))
}

/// Threshold quoted for the reference conditions.
pub const KH_BETA: f64 = 446.05;

/// One row of [`conditions_comparison_table`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionsRow {
    pub beta1_bar: f64,
    pub min_beta2: f64,
    pub reference_beta2_bar: f64,
    pub kappa_at_reference: f64,
    pub kh_beta: f64,
    /// `beta1_bar + reference_beta2_bar`: the rate of `log p_2` for `c1 = c2 = 1`, `gamma_bar = 0`.
    pub a2_rate_unit: f64,
    /// `2 * 446.05`: the rate of the reference weight for `c1 = c2 = 1`.
    pub kh_rate_unit: f64,
}

/// Side-by-side thresholds per `beta1_bar`, with the reference
/// `beta2_bar = reference_factor * min_beta2(beta1_bar)`.
pub fn conditions_comparison_table(beta1_bar_grid: &[f64], reference_factor: f64) -> Result<Vec<ConditionsRow>> {
    if !(reference_factor > 1.0) {
        return Err(BsdeError::invalid(format!(
            "reference factor must exceed 1, got {reference_factor}"
        )));
    }
    beta1_bar_grid
        .iter()
        .map(|&b1| {
            let mb = min_beta2(b1)?;
            let reference = reference_factor * mb;
            Ok(ConditionsRow {
                beta1_bar: b1,
                min_beta2: mb,
                reference_beta2_bar: reference,
                kappa_at_reference: kappa(b1, reference)?,
                kh_beta: KH_BETA,
                a2_rate_unit: b1 + reference,
                kh_rate_unit: 2.0 * KH_BETA,
            })
        })
        .collect()
}
