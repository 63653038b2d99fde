//! Exponential Orlicz quasi-norms `‖X‖_{ψ_α} = inf{c : E exp((|X|/c)^α) ≤ 2}`
//! and the constants of the auxiliary lemmas built on them.
//!
//! All logarithms here are natural logarithms.

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::bounds::{BoundFlag, BoundValue};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrliczEstimate {
    pub alpha: f64,
    pub value: f64,
    /// Final bisection interval; it always contains the root.
    pub bracket: (f64, f64),
    pub samples: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} outside (0,1]")))
    }
}

/// `ln Σ w_i exp((|x_i|/c)^α)`, evaluated stably.
fn log_moment(values: &[f64], log_weights: &[f64], alpha: f64, c: f64) -> f64 {
    let z: Vec<f64> = values
        .iter()
        .zip(log_weights)
        .map(|(x, lw)| (x / c).powf(alpha) + lw)
        .collect();
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// ψ_α norm of the discrete law putting mass `weights[i]` on `values[i]`.
pub fn psi_norm_discrete(values: &[f64], weights: &[f64], alpha: f64, tol: f64) -> Result<OrliczEstimate> {
    check_alpha(alpha)?;
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::invalid("values and weights must be nonempty and aligned"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights have zero mass"));
    }
    let (xs, lws): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(weights)
        .filter(|(x, w)| **w > 0.0 && **x != 0.0)
        .map(|(x, w)| (x.abs(), (w / total).ln()))
        .unzip();
    let samples = values.len();
    if xs.is_empty() {
        return Ok(OrliczEstimate { alpha, value: 0.0, bracket: (0.0, 0.0), samples });
    }
    // Zero values contribute their mass times exp(0).
    let zero_mass: f64 = values
        .iter()
        .zip(weights)
        .filter(|(x, _)| **x == 0.0)
        .map(|(_, w)| w / total)
        .sum();
    let target = 2.0f64.ln();
    let excess = |c: f64| -> f64 {
        let lm = log_moment(&xs, &lws, alpha, c);
        (lm.exp() + zero_mass).ln() - target
    };
    let (max_idx, max_x) = xs
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let w_max = lws[max_idx].exp();
    // At lo the top atom alone pushes the moment above 2; at hi every term is at most 2.
    let mut lo = max_x / (2.0 / w_max).ln().powf(1.0 / alpha);
    let mut hi = max_x / target.powf(1.0 / alpha);
    while excess(lo) < 0.0 {
        lo /= 2.0;
    }
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(OrliczEstimate { alpha, value: 0.5 * (lo + hi), bracket: (lo, hi), samples })
}

/// Empirical ψ_α norm by bisection on `c ↦ mean exp((|x_i|/c)^α)`.
pub fn psi_norm_empirical(samples: &[f64], alpha: f64, tol: f64) -> Result<OrliczEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let w = vec![1.0; samples.len()];
    psi_norm_discrete(samples, &w, alpha, tol)
}

/// `(1/ln 2)^{(1−α)/α} ‖X‖_{ψ_1}`, an upper bound for `‖X‖_{ψ_α}`.
pub fn lemma_bp_bridge(norm_psi1: f64, alpha: f64) -> f64 {
    (1.0 / 2f64.ln()).powf((1.0 - alpha) / alpha) * norm_psi1
}

/// Both sides of `‖X‖_{ψ_α} = ‖|X|^α‖_{ψ_1}^{1/α}` on shared samples.
pub fn bp1_identity(samples: &[f64], alpha: f64, tol: f64) -> Result<(f64, f64)> {
    let lhs = psi_norm_empirical(samples, alpha, tol)?.value;
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(alpha)).collect();
    let rhs = psi_norm_empirical(&powered, 1.0, tol)?.value.powf(1.0 / alpha);
    Ok((lhs, rhs))
}

/// Both sides of `‖XY‖_{ψ_1} ≤ ‖X‖_{ψ_p} ‖Y‖_{ψ_q}` for `1/p + 1/q = 1`.
pub fn bp2_product(x: &[f64], y: &[f64], p: f64, tol: f64) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired samples must have equal length"));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid("p must be at least 1"));
    }
    let q = p / (p - 1.0);
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let lhs = psi_norm_empirical(&xy, 1.0, tol)?.value;
    let rhs = psi_any(x, p, tol)? * psi_any(y, q, tol)?;
    Ok((lhs, rhs))
}

/// ψ_β norm for `β ≥ 1`, via `‖X‖_{ψ_β} = ‖|X|^β‖_{ψ_1}^{1/β}`.
fn psi_any(samples: &[f64], beta: f64, tol: f64) -> Result<f64> {
    if beta.is_infinite() {
        return Ok(samples.iter().fold(0.0f64, |a, x| a.max(x.abs())) / 2f64.ln());
    }
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(beta)).collect();
    Ok(psi_norm_empirical(&powered, 1.0, tol)?.value.powf(1.0 / beta))
}

/// `(a^α + b^α)^{1/α}`, the ψ_α quasi-triangle constant.
pub fn quasi_triangle(norm_a: f64, norm_b: f64, alpha: f64) -> f64 {
    (norm_a.powf(alpha) + norm_b.powf(alpha)).powf(1.0 / alpha)
}

/// Conditional-expectation contraction factors `(tight, loose)` for ψ_α.
pub fn conditional_mean_norm_factor(alpha: f64) -> (f64, f64) {
    let ln2 = 2f64.ln();
    let tight = (1.0 + (alpha.ln() + (1.0 - alpha) / alpha) / ln2).powf(1.0 / alpha);
    let loose = (2.0 / alpha).powf(1.0 / alpha);
    (tight, loose)
}

/// Bound on `E Y^β` when `E e^Y ≤ 2`: `Γ(β+1)` for integer `β`, else `2Γ(β+1)`.
pub fn moment_bound(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta {beta} must be positive")));
    }
    let g = gamma(beta + 1.0);
    Ok(if beta.fract() == 0.0 { g } else { 2.0 * g })
}

/// `P(|X| > t) ≤ 2exp(−t^α/‖X‖^α)`.
pub fn tail_from_norm(norm: f64, alpha: f64, t: f64) -> BoundValue {
    let raw = 2.0 * (-(t / norm).powf(alpha)).exp();
    BoundValue::from_raw(raw, Vec::new())
}

/// `P(|E(X|G)| > t) ≤ 6exp(−t^α/(2‖X‖^α))`, valid for `t ≥ (2/α)^{1/α}‖X‖`.
/// Below that threshold the value is 1 and the result is flagged.
pub fn tail_conditional(norm: f64, alpha: f64, t: f64) -> BoundValue {
    let raw = 6.0 * (-(t / norm).powf(alpha) / 2.0).exp();
    let threshold = (2.0 / alpha).powf(1.0 / alpha) * norm;
    if t < threshold {
        let mut v = BoundValue::from_raw(raw, vec![BoundFlag::BelowValidityThreshold]);
        v.value = 1.0;
        v
    } else {
        BoundValue::from_raw(raw, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_samples() {
        let e = psi_norm_empirical(&[2f64.ln(); 17], 1.0, 1e-12).unwrap();
        assert_relative_eq!(e.value, 1.0, max_relative = 1e-9);
        let k = 3.7;
        let e = psi_norm_empirical(&[k; 5], 1.0, 1e-12).unwrap();
        assert_relative_eq!(e.value, k / 2f64.ln(), max_relative = 1e-9);
        assert!(e.bracket.0 <= e.value && e.value <= e.bracket.1);
    }

    #[test]
    fn two_point_law() {
        let k = 2.5;
        let e = psi_norm_empirical(&[0.0, k], 1.0, 1e-12).unwrap();
        assert_relative_eq!(e.value, k / 3f64.ln(), max_relative = 1e-9);
        assert_relative_eq!(1.0 / 3f64.ln(), 0.910_239_226_626_837_4, max_relative = 1e-14);
    }

    #[test]
    fn zero_and_bad_samples() {
        assert_eq!(psi_norm_empirical(&[0.0, 0.0], 1.0, 1e-9).unwrap().value, 0.0);
        assert!(psi_norm_empirical(&[1.0, f64::NAN], 1.0, 1e-9).is_err());
        assert!(psi_norm_empirical(&[], 1.0, 1e-9).is_err());
        assert!(psi_norm_empirical(&[1.0], 1.5, 1e-9).is_err());
    }

    #[test]
    fn moment_at_root_is_two() {
        let xs: Vec<f64> = (1..200).map(|i| (i as f64).sqrt()).collect();
        for alpha in [0.3, 0.7, 1.0] {
            let e = psi_norm_empirical(&xs, alpha, 1e-10).unwrap();
            let m: f64 = xs.iter().map(|x| (x / e.value).powf(alpha).exp()).sum::<f64>() / xs.len() as f64;
            assert!((m - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn geometric_gap_norm() {
        // Geometric(1/2) on {1,2,...}: E e^{X/c} = 1/(2e^{-1/c} − 1) = 2 at c = 1/ln(4/3).
        let values: Vec<f64> = (1..200).map(f64::from).collect();
        let weights: Vec<f64> = (1..200).map(|k| 0.5f64.powi(k)).collect();
        let e = psi_norm_discrete(&values, &weights, 1.0, 1e-12).unwrap();
        assert_relative_eq!(e.value, 1.0 / (4.0f64 / 3.0).ln(), max_relative = 1e-9);
    }

    #[test]
    fn bridge_factor() {
        assert_eq!(lemma_bp_bridge(3.0, 1.0), 3.0);
        assert_relative_eq!(lemma_bp_bridge(1.0, 0.5), 1.0 / 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn quasi_triangle_examples() {
        assert_eq!(quasi_triangle(1.0, 0.0, 0.3), 1.0);
        assert_relative_eq!(quasi_triangle(1.0, 1.0, 0.5), 4.0);
        assert_relative_eq!(quasi_triangle(3.0, 4.0, 1.0), 7.0);
    }

    #[test]
    fn conditional_factors() {
        let (t, l) = conditional_mean_norm_factor(1.0);
        assert_relative_eq!(t, 1.0);
        assert_relative_eq!(l, 2.0);
        let (t, l) = conditional_mean_norm_factor(0.5);
        assert_relative_eq!(t, 2.081_368_981_005_607_8, max_relative = 1e-14);
        assert_relative_eq!(l, 16.0);
        for i in 1..=10 {
            let (t, l) = conditional_mean_norm_factor(i as f64 / 10.0);
            assert!(t <= l);
        }
    }

    #[test]
    fn moment_bounds() {
        assert_relative_eq!(moment_bound(2.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(moment_bound(0.5).unwrap(), 1.772_453_850_905_516, max_relative = 1e-12);
        assert!(moment_bound(0.0).is_err());
    }

    #[test]
    fn tail_bounds() {
        assert_eq!(tail_from_norm(1.0, 1.0, 0.0).value, 1.0);
        assert_relative_eq!(tail_from_norm(1.0, 1.0, 4f64.ln()).value, 0.5, max_relative = 1e-15);
        let v = tail_conditional(1.0, 1.0, 2.0);
        assert_eq!(v.value, 1.0);
        assert_relative_eq!(v.raw, 6.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert!(v.flags.contains(&BoundFlag::Vacuous));
        assert!(!v.flags.contains(&BoundFlag::BelowValidityThreshold));
        let v = tail_conditional(1.0, 1.0, 1.0);
        assert!(v.flags.contains(&BoundFlag::BelowValidityThreshold));
        assert_eq!(v.value, 1.0);
    }
}
