//! Closed-form tail bounds for sums of dependent and independent variables
//! and for additive functionals of regenerative chains.
//!
//! Every evaluator returns a [`BoundValue`]: the raw formula value, the value
//! capped at 1, and flags for regimes where the formula is vacuous or outside
//! the stated hypotheses. Sample-size logarithms use `log n = ln(max(n, e))`;
//! all other logarithms are natural. Terms are combined in the log domain.

use std::f64::consts::{E, LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// Raw value ≥ 1.
    Vacuous,
    /// `t` below the threshold from which the source inequality is stated.
    BelowValidityThreshold,
    /// `c < 1` for the stopped one-dependent bound.
    BelowLemmaRegime,
    /// `t < 8 log(6) M`, where the main-theorem argument becomes trivial.
    BelowProofThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub raw: f64,
    pub flags: Vec<BoundFlag>,
}

impl BoundValue {
    pub fn from_raw(raw: f64, mut flags: Vec<BoundFlag>) -> Self {
        if raw >= 1.0 {
            flags.push(BoundFlag::Vacuous);
        }
        let value = if raw.is_nan() { 1.0 } else { raw.clamp(0.0, 1.0) };
        Self { value, raw, flags }
    }

    pub fn has(&self, flag: BoundFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// `ln(max(n, e))`.
pub fn log_n(n: f64) -> f64 {
    n.max(E).ln()
}

/// `coef · exp(−num/den)` with the conventions `0/0 = 0` and `x/0 = ∞` for `x > 0`.
fn term(coef: f64, num: f64, den: f64) -> f64 {
    if num == 0.0 {
        return coef;
    }
    if den == 0.0 {
        return 0.0;
    }
    (coef.ln() - num / den).exp()
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} must be finite and nonnegative")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} must be finite and positive")))
    }
}

fn unit_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha = {alpha} outside (0,1]")))
    }
}

fn horizon(n: f64) -> Result<()> {
    if n.is_finite() && n >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("n = {n} must be at least 1")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffVariant {
    /// `c(24α⁻³ log n)^{1/α}`.
    Main,
    /// `c(3α⁻² log n)^{1/α}`.
    Iid,
}

pub fn m_cutoff(c: f64, alpha: f64, n: f64, variant: CutoffVariant) -> f64 {
    let k = match variant {
        CutoffVariant::Main => 24.0 / alpha.powi(3),
        CutoffVariant::Iid => 3.0 / alpha.powi(2),
    };
    c * (k * log_n(n)).powf(1.0 / alpha)
}

/// Bernstein's inequality for bounded independent summands; doubled for the
/// maximal version.
pub fn classical_bernstein(n: f64, sigma2: f64, m_sup: f64, t: f64, sup_version: bool) -> Result<BoundValue> {
    horizon(n)?;
    nonneg("sigma2", sigma2)?;
    nonneg("M", m_sup)?;
    nonneg("t", t)?;
    let coef = if sup_version { 2.0 } else { 1.0 };
    let raw = term(coef, t * t, 2.0 * n * sigma2 + 2.0 / 3.0 * m_sup * t);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// Bernstein's inequality for independent summands with `‖ξ_i‖_{ψ_1} ≤ τ`.
pub fn psi1_bernstein(n: f64, tau: f64, t: f64) -> Result<BoundValue> {
    horizon(n)?;
    positive("tau", tau)?;
    nonneg("t", t)?;
    let raw = term(1.0, t * t, 4.0 * n * tau * tau + 2.0 * tau * t);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// Maximal Bernstein-type inequality for i.i.d. summands with finite ψ_α norm `c`.
pub fn iid_unbounded(n: f64, c: f64, alpha: f64, sigma2: f64, t: f64) -> Result<BoundValue> {
    horizon(n)?;
    positive("c", c)?;
    unit_alpha(alpha)?;
    nonneg("sigma2", sigma2)?;
    nonneg("t", t)?;
    let m = m_cutoff(c, alpha, n, CutoffVariant::Iid);
    let raw = term(8f64.exp(), t.powf(alpha), 2.0 * (6.0 * c).powf(alpha))
        + term(2.0, t * t, 72.0 / 25.0 * n * sigma2 + 8.0 / 5.0 * t * m);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// Bernstein-type inequality for a sum of `T ≤ l` independent summands stopped
/// at a bounded stopping time `T`.
///
/// `v` is the ψ_α norm of the summands and `psi1_excess = ‖(T − a)₊‖_{ψ_1}`.
#[allow(clippy::too_many_arguments)]
pub fn random_sum_bound(l: f64, v: f64, alpha: f64, sigma2: f64, a: f64, psi1_excess: f64, t: f64) -> Result<BoundValue> {
    horizon(l)?;
    positive("v", v)?;
    unit_alpha(alpha)?;
    nonneg("sigma2", sigma2)?;
    positive("a", a)?;
    nonneg("psi1_excess", psi1_excess)?;
    nonneg("t", t)?;
    let b = v * (3.0 / alpha.powi(2) * log_n(l)).powf(1.0 / alpha);
    let mu = (8.0 * b / 3.0).max(2.0 * sigma2.sqrt() * psi1_excess.sqrt());
    let raw = term(8f64.exp(), t.powf(alpha), 2.0 * (2.0 + SQRT_2).powf(alpha) * v.powf(alpha))
        + term(2f64.powf(1.5), t * t, 8.0 * a * sigma2 + 2.0 * SQRT_2 * mu * t);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

fn dep_order(m_dep: u32) -> Result<f64> {
    match m_dep {
        1 | 2 => Ok(f64::from(m_dep)),
        _ => Err(Error::invalid(format!("m_dep = {m_dep} must be 1 or 2"))),
    }
}

/// Bernstein-type inequality for bounded one-dependent stationary sequences.
pub fn one_dep_bounded(n: f64, m_dep: u32, sigma_inf2: f64, m_sup: f64, t: f64) -> Result<BoundValue> {
    let m = dep_order(m_dep)?;
    horizon(n)?;
    nonneg("sigma_inf2", sigma_inf2)?;
    nonneg("M", m_sup)?;
    nonneg("t", t)?;
    let (c, d) = if m_dep == 1 { (8.0, 6.0) } else { (15.0, 10.0) };
    let raw = term(2.0 * (m + 1.0), t * t, c * (n + 1.0 + m) * sigma_inf2 + d * t * m_sup);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// Maximal inequality for one-dependent sequences with ψ_α norm `c`.
pub fn one_dep_sup(n: f64, m_dep: u32, c: f64, alpha: f64, sigma_inf2: f64, t: f64) -> Result<BoundValue> {
    let m = dep_order(m_dep)?;
    horizon(n)?;
    positive("c", c)?;
    unit_alpha(alpha)?;
    nonneg("sigma_inf2", sigma_inf2)?;
    nonneg("t", t)?;
    let (a_m, b_m, c_m) = (8.0 * (m + 1.0), 5.0 * (m + 1.0), 2.0 * (m + 1.0));
    let big_m = m_cutoff(c, alpha, n, CutoffVariant::Main);
    let coef = 2.0 * (m + 1.0);
    let raw = term(coef * 8f64.exp(), t.powf(alpha), 16.0 / alpha * (a_m * c).powf(alpha))
        + term(coef, t * t, b_m * (n + m + 1.0) * sigma_inf2 + c_m * t * big_m);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// `max(2, sqrt(psi1_excess))`, the `b` factor of [`one_dep_stopped`].
pub fn stopped_b_factor(psi1_excess: f64) -> f64 {
    psi1_excess.sqrt().max(2.0)
}

/// Inequality for a one-dependent sequence summed up to a bounded stopping time.
pub fn one_dep_stopped(n: f64, c: f64, alpha: f64, sigma_inf2: f64, a: f64, b_factor: f64, t: f64) -> Result<BoundValue> {
    horizon(n)?;
    positive("c", c)?;
    unit_alpha(alpha)?;
    nonneg("sigma_inf2", sigma_inf2)?;
    positive("a", a)?;
    nonneg("t", t)?;
    if !(b_factor >= 2.0) {
        return Err(Error::invalid(format!("b_factor = {b_factor} must be at least 2")));
    }
    let big_m = m_cutoff(c, alpha, n, CutoffVariant::Main);
    let raw = term(4.0 * 8f64.exp(), t.powf(alpha), 16.0 / alpha * (26.0 * c).powf(alpha))
        + term(9.0, t * t, 102.0 * a * sigma_inf2 + 14.0 * big_m * t * b_factor);
    let flags = if c < 1.0 { vec![BoundFlag::BelowLemmaRegime] } else { Vec::new() };
    Ok(BoundValue::from_raw(raw, flags))
}

/// `(L_p, K_p)` with `L_p = 16/p + 20`, `K_p = L_p + 16/L_p`.
pub fn kp_constant(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0) {
        return Err(Error::invalid(format!("p = {p} must be positive")));
    }
    let l = if p.is_infinite() { 20.0 } else { 16.0 / p + 20.0 };
    Ok((l, l + 16.0 / l))
}

fn regen_inputs(p: f64, d: f64, mean_gap: f64) -> Result<f64> {
    if !(mean_gap > 0.0) || !mean_gap.is_finite() {
        return Err(Error::invalid(format!("mean gap {mean_gap} must be positive")));
    }
    if !(d >= mean_gap) || !d.is_finite() {
        return Err(Error::invalid(format!("d = {d} must dominate the mean gap {mean_gap}")));
    }
    Ok(kp_constant(p)?.1)
}

/// Bound on `P(N > ⌈(1+p)n/E(σ₁−σ₀)⌉)` for the regeneration count.
pub fn regen_count_tail(n: f64, p: f64, d: f64, mean_gap: f64) -> Result<BoundValue> {
    horizon(n)?;
    let k = regen_inputs(p, d, mean_gap)?;
    let raw = term(E, p * n * mean_gap, k * d * d);
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// `4K_p d²/E(σ₁−σ₀)²`, bounding `‖(N − a)₊‖_{ψ_1}` with `a = (1+p)n/E(σ₁−σ₀)`.
pub fn regen_count_psi1(p: f64, d: f64, mean_gap: f64) -> Result<f64> {
    let k = regen_inputs(p, d, mean_gap)?;
    Ok(4.0 * k * d * d / (mean_gap * mean_gap))
}

/// Coarser form `4K_p d²/m²`, using `E(σ₁−σ₀) ≥ m`.
pub fn regen_count_psi1_coarse(p: f64, d: f64, m: usize) -> Result<f64> {
    let k = kp_constant(p)?.1;
    positive("d", d)?;
    let m = m as f64;
    Ok(4.0 * k * d * d / (m * m))
}

/// Parameters of the main theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    /// ψ_α norm of the head sum under the point start.
    pub a: f64,
    /// ψ_α norm of the head sum under the stationary split start.
    pub b: f64,
    /// ψ_α norm of an excursion.
    pub c: f64,
    /// ψ_1 norm of a regeneration gap.
    pub d: f64,
    pub alpha: f64,
    pub sigma2_mrv: f64,
    pub delta: f64,
    pub pi_c: f64,
    pub m: usize,
    /// Master constant dominating `d` and the ψ_1 norms of `σ_0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_sup: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyWarning {
    /// `c > D‖f‖∞`.
    CExceedsBoundedLimit,
    /// `a > 2D‖f‖∞`.
    AExceedsBoundedLimit,
    /// `b > 2D‖f‖∞`.
    BExceedsBoundedLimit,
}

impl BernsteinParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("sigma2_mrv", self.sigma2_mrv)] {
            nonneg(name, v)?;
        }
        unit_alpha(self.alpha)?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!("delta = {} outside (0,1]", self.delta)));
        }
        if !(self.pi_c > 0.0 && self.pi_c <= 1.0) {
            return Err(Error::invalid(format!("pi_C = {} outside (0,1]", self.pi_c)));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        if let Some(v) = self.big_d {
            nonneg("D", v)?;
        }
        if let Some(v) = self.f_sup {
            nonneg("f_sup", v)?;
        }
        Ok(())
    }

    /// Checks `c ≤ D‖f‖∞` and `a, b ≤ 2D‖f‖∞` when both constants are set.
    pub fn consistency_warnings(&self) -> Vec<ConsistencyWarning> {
        let (Some(d), Some(f)) = (self.big_d, self.f_sup) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        if self.c > d * f {
            out.push(ConsistencyWarning::CExceedsBoundedLimit);
        }
        if self.a > 2.0 * d * f {
            out.push(ConsistencyWarning::AExceedsBoundedLimit);
        }
        if self.b > 2.0 * d * f {
            out.push(ConsistencyWarning::BExceedsBoundedLimit);
        }
        out
    }

    /// `E(σ₁ − σ₀) = m/(δπ(C))`.
    pub fn mean_gap(&self) -> f64 {
        self.m as f64 / (self.delta * self.pi_c)
    }
}

fn check_divisible(n: f64, m: usize) -> Result<()> {
    horizon(n)?;
    if m == 1 {
        return Ok(());
    }
    if n.fract() != 0.0 || !(n as u64).is_multiple_of(m as u64) {
        return Err(Error::NotMultipleOfOrder { n: n as u64, m });
    }
    Ok(())
}

fn head_tail_terms(p: &BernsteinParams, t: f64, scale: f64) -> f64 {
    let ta = t.powf(p.alpha);
    term(2.0, ta, (scale * p.a).powf(p.alpha))
        + term(2.0 / (p.delta * p.pi_c), ta, (scale * p.b).powf(p.alpha))
}

/// Main theorem: five-term bound for `P_x(|Σ_{i<n} f(Υ_i)| > t)`.
pub fn thm_bi(params: &BernsteinParams, n: f64, t: f64) -> Result<BoundValue> {
    params.validate()?;
    check_divisible(n, params.m)?;
    nonneg("t", t)?;
    let p = params;
    let big_m = m_cutoff(p.c, p.alpha, n, CutoffVariant::Main);
    let raw = head_tail_terms(p, t, 23.0)
        + term(6.0 * 8f64.exp(), t.powf(p.alpha), 16.0 / p.alpha * (27.0 * p.c).powf(p.alpha))
        + term(6.0, t * t, 30.0 * n * p.sigma2_mrv + 8.0 * t * big_m)
        + thm_bi_regeneration_term(p, n);
    let mut flags = Vec::new();
    if t < 8.0 * 6f64.ln() * big_m {
        flags.push(BoundFlag::BelowProofThreshold);
    }
    Ok(BoundValue::from_raw(raw, flags))
}

/// The `t`-independent fifth term `e·exp(−nm/(67δπ(C)d²))` of [`thm_bi`].
pub fn thm_bi_regeneration_term(params: &BernsteinParams, n: f64) -> f64 {
    let p = params;
    term(E, n * p.m as f64, 67.0 * p.delta * p.pi_c * p.d * p.d)
}

/// Second main theorem: four-term bound tending to 0 as `t → ∞`.
pub fn thm_bi2(params: &BernsteinParams, n: f64, p_reg: f64, t: f64) -> Result<BoundValue> {
    params.validate()?;
    check_divisible(n, params.m)?;
    nonneg("t", t)?;
    let (_, k) = kp_constant(p_reg)?;
    let p = params;
    let big_m = m_cutoff(p.c, p.alpha, n, CutoffVariant::Main);
    let raw = head_tail_terms(p, t, 54.0)
        + term(4.0 * 8f64.exp(), t.powf(p.alpha), 16.0 / p.alpha * (27.0 * p.c).powf(p.alpha))
        + term(6.0, t * t, 37.0 * (1.0 + p_reg) * n * p.sigma2_mrv + 18.0 * big_m * p.d * t * k.sqrt());
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// `(K, τ) = (e¹⁰ + 2δ⁻¹π(C)⁻¹, 433δπ(C)D²)`.
pub fn bbi_constants(delta: f64, pi_c: f64, big_d: f64) -> (f64, f64) {
    (10f64.exp() + 2.0 / (delta * pi_c), 433.0 * delta * pi_c * big_d * big_d)
}

/// `K·exp(−t²/(32nσ² + τ t ‖f‖∞ log n))`.
pub fn thm_bbi(n: f64, t: f64, sigma2_mrv: f64, f_sup: f64, k: f64, tau: f64) -> Result<BoundValue> {
    horizon(n)?;
    nonneg("t", t)?;
    nonneg("sigma2_mrv", sigma2_mrv)?;
    nonneg("f_sup", f_sup)?;
    positive("K", k)?;
    nonneg("tau", tau)?;
    let raw = term(k, t * t, 32.0 * n * sigma2_mrv + tau * t * f_sup * log_n(n));
    Ok(BoundValue::from_raw(raw, Vec::new()))
}

/// Bounded-functional theorem with explicit constants; no divisibility condition on `n`.
pub fn thm_sbi(n: f64, t: f64, sigma2_mrv: f64, f_sup: f64, big_d: f64, delta: f64, pi_c: f64) -> Result<BoundValue> {
    if !(delta > 0.0 && delta <= 1.0) || !(pi_c > 0.0 && pi_c <= 1.0) {
        return Err(Error::invalid("delta and pi_C must lie in (0,1]"));
    }
    nonneg("D", big_d)?;
    let (k, tau) = bbi_constants(delta, pi_c, big_d);
    thm_bbi(n, t, sigma2_mrv, f_sup, k, tau)
}

/// Inputs of the parameter estimates from drift-type conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum DriftData {
    /// Multiplicative geometric drift with `V ≤ K` on `C`.
    MultiplicativeGeometric {
        l: f64,
        k: f64,
        big_k: f64,
        v_x: f64,
        /// `π(exp(V)/2)`.
        pi_exp_v_half: f64,
        delta: f64,
        alpha: f64,
    },
    /// Subgeometric drift with return-time tails of order `β > α`.
    Subgeometric {
        l: f64,
        k: f64,
        big_k: f64,
        v_x: f64,
        /// `π(V)`.
        pi_v: f64,
        delta: f64,
        alpha: f64,
        beta: f64,
        /// `sup_{x∈C} ‖τ_C‖_{ψ_β, P_x}`.
        sup_tau_norm: f64,
        /// `‖τ_C‖_{ψ_β, P_π}`.
        pi_tau_norm: f64,
    },
    /// Bounded functional: `c ≤ D‖f‖∞`, `a, b ≤ 2D‖f‖∞`.
    Bounded { big_d: f64, f_sup: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftBounds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn drift_ratio(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0,1]")));
    }
    Ok((6.0 / (2.0 - delta)).ln() / (2.0 / (2.0 - delta)).ln())
}

pub fn param_bounds_from_drift(data: &DriftData) -> Result<DriftBounds> {
    match *data {
        DriftData::MultiplicativeGeometric { l, k, big_k, v_x, pi_exp_v_half, delta, alpha } => {
            unit_alpha(alpha)?;
            positive("l", l)?;
            positive("pi_exp_v_half", pi_exp_v_half)?;
            let ratio = drift_ratio(delta)?;
            let inner = (2.0 * k + v_x + 2.0 * big_k + 2.0 * pi_exp_v_half.ln()).max(2.0 * LN_2);
            let v = (2.0 * ratio * inner / (2.0 * LN_2) * l).powf(1.0 / alpha);
            Ok(DriftBounds { a: v, b: v, c: v })
        }
        DriftData::Subgeometric { l, k, big_k, v_x, pi_v, delta, alpha, beta, sup_tau_norm, pi_tau_norm } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::invalid(format!("alpha = {alpha} outside (0,1)")));
            }
            if !(beta > alpha) {
                return Err(Error::invalid(format!("beta = {beta} must exceed alpha = {alpha}")));
            }
            positive("l", l)?;
            positive("pi_v + k", pi_v + k)?;
            let gamma = alpha * beta / (beta - alpha);
            let ratio = drift_ratio(delta)?;
            let inner = (k + v_x + big_k + (pi_v + k).ln()).max(LN_2);
            let v = (2.0 * ratio).powf(1.0 / alpha)
                * l
                * (sup_tau_norm + pi_tau_norm)
                * (inner / LN_2).powf(1.0 / gamma);
            Ok(DriftBounds { a: v, b: v, c: v })
        }
        DriftData::Bounded { big_d, f_sup } => {
            nonneg("D", big_d)?;
            nonneg("f_sup", f_sup)?;
            Ok(DriftBounds { a: 2.0 * big_d * f_sup, b: 2.0 * big_d * f_sup, c: big_d * f_sup })
        }
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values below were computed once at 50 significant digits.

    const REL: f64 = 1e-12;

    fn atom_params() -> BernsteinParams {
        BernsteinParams {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: 2.0,
            alpha: 1.0,
            sigma2_mrv: 0.25,
            delta: 1.0,
            pi_c: 0.5,
            m: 1,
            big_d: None,
            f_sup: None,
        }
    }

    #[test]
    fn cutoff_examples() {
        assert_relative_eq!(m_cutoff(1.0, 1.0, 1.0, CutoffVariant::Main), 24.0, max_relative = REL);
        assert_relative_eq!(m_cutoff(2.0, 1.0, E * E, CutoffVariant::Main), 96.0, max_relative = REL);
        assert_relative_eq!(m_cutoff(1.0, 1.0, E.powi(3), CutoffVariant::Iid), 9.0, max_relative = REL);
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_bernstein(100.0, 1.0, 1.0, 0.0, false).unwrap().value, 1.0);
        let v = classical_bernstein(100.0, 1.0, 1.0, 10.0, false).unwrap();
        assert_relative_eq!(v.value, 0.616_392_731_327_227, max_relative = REL);
        let v = classical_bernstein(100.0, 0.0, 1.0, 10.0, false).unwrap();
        assert_relative_eq!(v.value, 3.059_023_205_018_258e-7, max_relative = REL);
        let v = classical_bernstein(100.0, 0.0, 0.0, 10.0, true).unwrap();
        assert_eq!(v.value, 0.0);
        let v = classical_bernstein(100.0, 1.0, 1.0, 10.0, true).unwrap();
        assert_relative_eq!(v.raw, 2.0 * 0.616_392_731_327_227, max_relative = REL);
    }

    #[test]
    fn psi1_examples() {
        assert_eq!(psi1_bernstein(25.0, 1.0, 0.0).unwrap().value, 1.0);
        assert_relative_eq!(psi1_bernstein(25.0, 1.0, 10.0).unwrap().value, 0.434_598_208_507_078_2, max_relative = REL);
        assert_relative_eq!(psi1_bernstein(25.0, 2.0, 10.0).unwrap().value, 0.796_703_469_893_461_6, max_relative = REL);
    }

    #[test]
    fn iid_examples() {
        let v = iid_unbounded(E.powi(3), 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(v.raw, 8f64.exp() + 2.0, max_relative = REL);
        let v = iid_unbounded(E.powi(3), 1.0, 1.0, 1.0, 30.0).unwrap();
        assert_relative_eq!(v.raw, 245.010_422_438_245_85, max_relative = REL);
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn random_sum_examples() {
        assert_eq!(random_sum_bound(10.0, 1.0, 1.0, 1.0, 10.0, 0.0, 0.0).unwrap().value, 1.0);
        let v = random_sum_bound(E.powi(3), 1.0, 1.0, 1.0, 10.0, 9.0, 50.0).unwrap();
        assert_relative_eq!(v.raw, 3.346_565_774_039_179_4, max_relative = REL);
    }

    #[test]
    fn one_dep_bounded_examples() {
        let v = one_dep_bounded(8.0, 1, 1.0, 1.0, 20.0).unwrap();
        assert_relative_eq!(v.value, 0.541_341_132_946_450_8, max_relative = REL);
        let v = one_dep_bounded(8.0, 2, 1.0, 1.0, 40.0).unwrap();
        assert_relative_eq!(v.value, 0.353_419_713_641_786, max_relative = REL);
        let v = one_dep_bounded(8.0, 1, 0.0, 1.0, 60.0).unwrap();
        assert_relative_eq!(v.raw, 4.0 * (-10.0f64).exp(), max_relative = REL);
        assert!(one_dep_bounded(8.0, 3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn one_dep_sup_example() {
        assert_eq!(one_dep_sup(10.0, 1, 1.0, 1.0, 1.0, 0.0).unwrap().value, 1.0);
        let v = one_dep_sup(E, 2, 1.0, 1.0, 1.0, 100.0).unwrap();
        assert_relative_eq!(v.raw, 13_788.097_770_820_475, max_relative = REL);
    }

    #[test]
    fn one_dep_stopped_example() {
        assert_eq!(stopped_b_factor(0.0), 2.0);
        let v = one_dep_stopped(E, 1.0, 1.0, 1.0, 5.0, 2.0, 200.0).unwrap();
        assert_relative_eq!(v.raw, 7_379.286_547_964_090_5, max_relative = REL);
        assert!(!v.has(BoundFlag::BelowLemmaRegime));
        let v = one_dep_stopped(E, 0.5, 1.0, 1.0, 5.0, 2.0, 200.0).unwrap();
        assert!(v.has(BoundFlag::BelowLemmaRegime));
    }

    #[test]
    fn kp_examples() {
        let (l, k) = kp_constant(2.0 / 3.0).unwrap();
        assert_relative_eq!(l, 44.0, max_relative = REL);
        assert_relative_eq!(k, 488.0 / 11.0, max_relative = REL);
        assert!(1.5 * k <= 67.0);
        let (l, k) = kp_constant(1.0).unwrap();
        assert_relative_eq!(l, 36.0);
        assert_relative_eq!(k, 36.444_444_444_444_44, max_relative = REL);
        assert_relative_eq!(kp_constant(f64::INFINITY).unwrap().1, 104.0 / 5.0, max_relative = REL);
        assert!(kp_constant(0.0).is_err());
    }

    #[test]
    fn regen_examples() {
        let v = regen_count_tail(1331.0, 2.0 / 3.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(v.value, 0.000_123_325_536_555_583_6, max_relative = REL);
        assert_eq!(regen_count_tail(10.0, 2.0 / 3.0, 2.0, 2.0).unwrap().value, 1.0);
        assert!(regen_count_tail(10.0, 2.0 / 3.0, 2.0, 0.0).is_err());
        assert_relative_eq!(regen_count_psi1(1.0, 3.0, 3.0).unwrap(), 4.0 * kp_constant(1.0).unwrap().1);
        assert_relative_eq!(regen_count_psi1(2.0 / 3.0, 2.0, 2.0).unwrap(), 4.0 * 488.0 / 11.0, max_relative = REL);
        assert_relative_eq!(regen_count_psi1_coarse(2.0 / 3.0, 2.0, 2).unwrap(), 4.0 * 488.0 / 11.0, max_relative = REL);
    }

    #[test]
    fn theorem_examples() {
        let p = atom_params();
        let v = thm_bi(&p, E, 100.0).unwrap();
        assert_relative_eq!(v.raw, 14_196.097_665_231_15, max_relative = REL);
        assert_eq!(thm_bi(&p, E, 1e-9).unwrap().value, 1.0);
        let v = thm_bi2(&p, E, 2.0 / 3.0, 100.0).unwrap();
        assert_relative_eq!(v.raw, 9_466.698_483_608_781, max_relative = REL);
        assert!(thm_bi2(&p, E, 2.0 / 3.0, 1e7).unwrap().raw < 1e-12);
        assert!(thm_bi2(&p, E, 0.0, 1.0).is_err());
    }

    #[test]
    fn fifth_term_is_constant_in_t() {
        let p = atom_params();
        let fifth = thm_bi_regeneration_term(&p, 1000.0);
        let big_t = thm_bi(&p, 1000.0, 1e9).unwrap().raw;
        assert_relative_eq!(big_t, fifth, max_relative = 1e-9);
        let huge_t = thm_bi(&p, 1000.0, 1e12).unwrap().raw;
        assert_relative_eq!(big_t, huge_t, max_relative = 1e-9);
    }

    #[test]
    fn divisibility_enforced() {
        let p = BernsteinParams { m: 2, ..atom_params() };
        assert!(matches!(thm_bi(&p, 9.0, 1.0), Err(Error::NotMultipleOfOrder { .. })));
        assert!(thm_bi(&p, 10.0, 1.0).is_ok());
    }

    #[test]
    fn sbi_examples() {
        let (k, tau) = bbi_constants(1.0, 0.5, 1.0);
        assert_relative_eq!(k, 22_030.465_794_806_718, max_relative = REL);
        assert_relative_eq!(tau, 216.5, max_relative = REL);
        assert_eq!(thm_sbi(10.0, 0.0, 0.25, 0.5, 3.0, 1.0, 0.5).unwrap().value, 1.0);
        let a = thm_sbi(11.0, 300.0, 0.25, 0.5, 3.0, 1.0, 0.5).unwrap();
        let b = thm_bbi(11.0, 300.0, 0.25, 0.5, k, 433.0 * 0.5 * 9.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn consistency_warnings_fire() {
        let p = BernsteinParams { big_d: Some(2.0), f_sup: Some(1.0), a: 4.0, b: 4.0, c: 2.0, ..atom_params() };
        assert!(p.consistency_warnings().is_empty());
        let p = BernsteinParams { c: 2.1, ..p };
        assert_eq!(p.consistency_warnings(), vec![ConsistencyWarning::CExceedsBoundedLimit]);
        let p = BernsteinParams { a: 4.1, b: 4.1, c: 1.0, ..p };
        assert_eq!(
            p.consistency_warnings(),
            vec![ConsistencyWarning::AExceedsBoundedLimit, ConsistencyWarning::BExceedsBoundedLimit]
        );
    }

    #[test]
    fn drift_examples() {
        let b = param_bounds_from_drift(&DriftData::Bounded { big_d: 2.0, f_sup: 1.0 }).unwrap();
        assert_eq!((b.a, b.b, b.c), (4.0, 4.0, 2.0));
        let data = DriftData::MultiplicativeGeometric {
            l: 1.0,
            k: 0.0,
            big_k: 0.0,
            v_x: 0.0,
            pi_exp_v_half: 0.5,
            delta: 1.0,
            alpha: 1.0,
        };
        let b = param_bounds_from_drift(&data).unwrap();
        assert_relative_eq!(b.a, 5.169_925_001_442_312, max_relative = REL);
        let DriftData::MultiplicativeGeometric { l, k, big_k, v_x, pi_exp_v_half, delta, .. } = data else {
            unreachable!()
        };
        let half = DriftData::MultiplicativeGeometric { l, k, big_k, v_x, pi_exp_v_half, delta, alpha: 0.5 };
        let b = param_bounds_from_drift(&half).unwrap();
        assert_relative_eq!(b.c, 5.169_925_001_442_312_f64.powi(2), max_relative = REL);
        let bad = DriftData::Subgeometric {
            l: 1.0,
            k: 1.0,
            big_k: 1.0,
            v_x: 1.0,
            pi_v: 1.0,
            delta: 0.5,
            alpha: 0.5,
            beta: 0.5,
            sup_tau_norm: 1.0,
            pi_tau_norm: 1.0,
        };
        assert!(param_bounds_from_drift(&bad).is_err());
    }
}
