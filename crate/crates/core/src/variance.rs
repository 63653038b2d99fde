//! Asymptotic variances of additive functionals: the chain variance `σ²_Mrv`
//! and the excursion variance `σ²_∞ = Eχ₁² + 2Eχ₁χ₂`, linked by
//! `σ²_∞ = σ²_Mrv · E(σ₁ − σ₀)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain_models::FiniteChain;
use crate::error::{Error, Result};
use crate::stats::{batch_se, mean, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    MrvExact,
    MrvRegenerative,
    MrvBatch,
    InfExcursion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub kind: VarianceKind,
    pub value: f64,
    /// Absent for exact values.
    pub se: Option<f64>,
    pub samples: usize,
}

fn centered(chain: &FiniteChain, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != chain.len() {
        return Err(Error::invalid(format!("f has {} values for {} states", f.len(), chain.len())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("f must be finite"));
    }
    let pi = chain.stationary();
    let fbar: f64 = f.iter().zip(pi).map(|(a, b)| a * b).sum();
    Ok(f.iter().map(|v| v - fbar).collect())
}

/// `σ²_Mrv` from the fundamental matrix `Z = (I − P + 1π)⁻¹`: with `g = Z f̄`,
/// `σ² = 2π(f̄ g) − π(f̄²)`. `f` is centered under `π` first.
pub fn sigma_mrv_exact(chain: &FiniteChain, f: &[f64]) -> Result<f64> {
    let fc = centered(chain, f)?;
    let k = chain.len();
    let pi = chain.stationary();
    let p = chain.kernel().matrix();
    let a = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - p[i][j] + pi[j]);
    let g = a
        .lu()
        .solve(&DVector::from_column_slice(&fc))
        .ok_or_else(|| Error::Numerical("fundamental matrix is singular".into()))?;
    let s: f64 = (0..k).map(|i| pi[i] * fc[i] * (2.0 * g[i] - fc[i])).sum();
    Ok(s.max(0.0))
}

/// `Var_π f + 2 Σ_{j=1}^{lags} Cov_π(f(Υ_0), f(Υ_j))`.
pub fn sigma_mrv_truncated(chain: &FiniteChain, f: &[f64], lags: usize) -> Result<f64> {
    let fc = centered(chain, f)?;
    let pi = chain.stationary();
    let p = chain.kernel().matrix();
    let k = chain.len();
    let mut h = fc.clone();
    let mut total: f64 = (0..k).map(|i| pi[i] * fc[i] * fc[i]).sum();
    for _ in 0..lags {
        h = (0..k).map(|i| (0..k).map(|j| p[i][j] * h[j]).sum()).collect();
        total += 2.0 * (0..k).map(|i| pi[i] * fc[i] * h[i]).sum::<f64>();
    }
    Ok(total)
}

fn batch_len(len: usize) -> usize {
    ((len as f64).sqrt().ceil() as usize).max(1)
}

/// Plug-in `Eχ² + 2E(χ₁χ₂)` over adjacent pairs. The SE comes from
/// non-overlapping batches of pair terms.
pub fn sigma_inf_from_excursions(chi: &[f64]) -> Result<VarianceEstimate> {
    if chi.len() < 2 {
        return Err(Error::TooFewSamples(format!("{} excursions, need at least 2", chi.len())));
    }
    let w = pair_terms(chi);
    Ok(VarianceEstimate {
        kind: VarianceKind::InfExcursion,
        value: mean(&w),
        se: Some(batch_se(&w, batch_len(w.len()))),
        samples: chi.len(),
    })
}

fn pair_terms(chi: &[f64]) -> Vec<f64> {
    chi.windows(2).map(|w| w[0] * w[0] + 2.0 * w[0] * w[1]).collect()
}

/// `σ̂²_∞ / mean gap`, with a delta-method SE for the ratio.
pub fn sigma_mrv_regenerative(chi: &[f64], gaps: &[f64]) -> Result<VarianceEstimate> {
    if chi.len() != gaps.len() {
        return Err(Error::invalid("excursion and gap samples must be matched"));
    }
    if chi.len() < 2 {
        return Err(Error::TooFewSamples(format!("{} excursions, need at least 2", chi.len())));
    }
    let w = pair_terms(chi);
    let g = &gaps[..w.len()];
    let gbar = mean(g);
    if !(gbar > 0.0) {
        return Err(Error::invalid("mean gap must be positive"));
    }
    let ratio = mean(&w) / gbar;
    let z: Vec<f64> = w.iter().zip(g).map(|(wi, gi)| wi - ratio * gi).collect();
    Ok(VarianceEstimate {
        kind: VarianceKind::MrvRegenerative,
        value: ratio,
        se: Some(batch_se(&z, batch_len(z.len())) / gbar),
        samples: chi.len(),
    })
}

/// Batch-means estimate from a path of values `f(Υ_i)` with batch length `b`.
pub fn sigma_mrv_batch(values: &[f64], b: usize) -> Result<VarianceEstimate> {
    if b == 0 || values.len() / b.max(1) < 20 {
        return Err(Error::TooFewSamples(format!(
            "batch means need n/b ≥ 20, got n = {}, b = {b}",
            values.len()
        )));
    }
    let k = values.len() / b;
    let means: Vec<f64> = values.chunks_exact(b).map(mean).collect();
    let value = b as f64 * sample_variance(&means);
    Ok(VarianceEstimate {
        kind: VarianceKind::MrvBatch,
        value,
        se: Some(value * (2.0 / (k - 1) as f64).sqrt()),
        samples: values.len(),
    })
}

/// `δ⁻¹π(C)⁻¹ m ∫f dπ`, the mean of an excursion.
pub fn mean_excursion_value(f_bar: f64, delta: f64, pi_c: f64, m: usize) -> f64 {
    if f_bar == 0.0 {
        return 0.0;
    }
    f_bar * m as f64 / (delta * pi_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_models::make_two_state;
    use approx::assert_abs_diff_eq;

    fn closed_form(a: f64, b: f64) -> f64 {
        a * b * (2.0 - a - b) / (a + b).powi(3)
    }

    #[test]
    fn two_state_exact() {
        let f = [-0.5, 0.5];
        let c = make_two_state(0.5, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(sigma_mrv_exact(&c, &f).unwrap(), 0.25, epsilon = 1e-14);
        let c = make_two_state(0.25, 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(sigma_mrv_exact(&c, &f).unwrap(), 0.75, epsilon = 1e-14);
        for (a, b) in [(0.1, 0.3), (0.7, 0.2), (0.05, 0.05)] {
            let c = make_two_state(a, b, 1.0).unwrap();
            let exact = sigma_mrv_exact(&c, &[0.0, 1.0]).unwrap();
            assert_abs_diff_eq!(exact, closed_form(a, b), epsilon = 1e-12);
            let trunc = sigma_mrv_truncated(&c, &[0.0, 1.0], 2000).unwrap();
            assert_abs_diff_eq!(exact, trunc, epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_and_shift_invariance() {
        let c = make_two_state(0.3, 0.6, 1.0).unwrap();
        assert_eq!(sigma_mrv_exact(&c, &[0.0, 0.0]).unwrap(), 0.0);
        let base = sigma_mrv_exact(&c, &[1.0, -2.0]).unwrap();
        assert_abs_diff_eq!(sigma_mrv_exact(&c, &[4.0, 1.0]).unwrap(), base, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_mrv_exact(&c, &[3.0, -6.0]).unwrap(), 9.0 * base, epsilon = 1e-12);
    }

    #[test]
    fn excursion_estimators_on_zero_input() {
        let chi = vec![0.0; 100];
        let gaps = vec![2.0; 100];
        assert_eq!(sigma_inf_from_excursions(&chi).unwrap().value, 0.0);
        assert_eq!(sigma_mrv_regenerative(&chi, &gaps).unwrap().value, 0.0);
        assert_eq!(sigma_mrv_batch(&vec![0.0; 1000], 10).unwrap().value, 0.0);
        assert!(sigma_inf_from_excursions(&[1.0]).is_err());
        assert!(sigma_mrv_batch(&vec![0.0; 100], 10).is_err());
        assert!(sigma_mrv_regenerative(&chi, &vec![0.0; 100]).is_err());
    }

    #[test]
    fn mean_excursion() {
        assert_eq!(mean_excursion_value(0.0, 0.5, 0.5, 2), 0.0);
        assert_eq!(mean_excursion_value(1.0, 1.0, 0.5, 1), 2.0);
        assert_eq!(mean_excursion_value(1.0, 0.5, 1.0, 2), 4.0);
    }
}
