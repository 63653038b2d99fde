//! Small statistical helpers shared by the estimators and structural tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(x);
    x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    (sample_variance(x) / x.len() as f64).sqrt()
}

/// Sample autocorrelation at `lag` (biased, denominator `n`).
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    if lag >= n {
        return 0.0;
    }
    let mu = mean(x);
    let c0: f64 = x.iter().map(|v| (v - mu) * (v - mu)).sum();
    if c0 == 0.0 {
        return 0.0;
    }
    let ck: f64 = (0..n - lag).map(|i| (x[i] - mu) * (x[i + lag] - mu)).sum();
    ck / c0
}

/// Upper quantile `z` with `P(Z > z) = p` for a standard normal.
pub fn normal_upper_quantile(p: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - p)
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples("KS test needs two nonempty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda) })
}

/// One-sample Kolmogorov-Smirnov test against the uniform law on [0,1).
pub fn ks_uniform(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::TooFewSamples("KS test needs a nonempty sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((v - lo).abs()).max((hi - v).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda) })
}

/// Pearson chi-square goodness of fit. Returns `(statistic, p_value)`.
///
/// Cells with expected count below 5 should be pooled by the caller.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted_params: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 + fitted_params {
        return Err(Error::invalid("chi-square needs matching cells and positive degrees of freedom"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (observed.len() - 1 - fitted_params) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Standard error of the mean of `x` from non-overlapping batches of length `b`.
///
/// This is the closed form of the non-overlapping block bootstrap SE for the mean.
pub fn batch_se(x: &[f64], b: usize) -> f64 {
    let b = b.max(1);
    let k = x.len() / b;
    if k < 2 {
        return standard_error(x);
    }
    let means: Vec<f64> = (0..k).map(|j| mean(&x[j * b..(j + 1) * b])).collect();
    standard_error(&means)
}
