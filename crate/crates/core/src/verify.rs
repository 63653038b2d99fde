//! Tail estimation (Monte Carlo and exact), bound domination checks and tests
//! of the regenerative structure.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bounds::{thm_bi, thm_bi2, thm_sbi, BernsteinParams};
use crate::chain_models::{FiniteChain, SplitChain};
use crate::error::{Error, Result};
use crate::orlicz::{psi_norm_discrete, psi_norm_empirical, DEFAULT_TOL};
use crate::replicas::{run_replicas, substream, Execution, SimRng, SEED_DERIVATION};
use crate::split_regen::{draw_initial, first_cycle_sum, simulate_regenerations, InitialLaw};
use crate::stats::{autocorrelation, ks_two_sample, mean, normal_upper_quantile, standard_error, KsResult};

/// Upper limit on `|S|^n` for exhaustive oracles.
pub const ENUMERATION_GUARD: f64 = 1e8;
pub const MIN_REPLICAS: u64 = 1000;
pub const DEFAULT_Z: f64 = 3.0;
pub const DEFAULT_SAFETY: f64 = 1.2;
/// Cap on simulated steps or blocks per run before a guard error.
pub const DEFAULT_MAX_LEN: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MonteCarlo,
    Enumeration,
}

/// `t ↦ P(|S| > t)` on a nondecreasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    pub t: Vec<f64>,
    pub prob: Vec<f64>,
    pub se: Option<Vec<f64>>,
    pub provenance: Provenance,
    pub replicas: Option<u64>,
}

impl TailCurve {
    pub fn se_at(&self, i: usize) -> f64 {
        self.se.as_ref().map_or(0.0, |s| s[i])
    }
}

fn check_grid(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::invalid("empty t grid"));
    }
    if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("t grid must be finite and nonnegative"));
    }
    if t.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("t grid must be nondecreasing"));
    }
    Ok(())
}

/// Empirical tail of `|values|` with binomial standard errors.
pub fn empirical_tail(values: &[f64], t_grid: &[f64]) -> Result<TailCurve> {
    check_grid(t_grid)?;
    if values.is_empty() {
        return Err(Error::TooFewSamples("no samples".into()));
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let r = abs.len() as f64;
    let mut prob = Vec::with_capacity(t_grid.len());
    let mut se = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let above = abs.len() - abs.partition_point(|&v| v <= t);
        let p = above as f64 / r;
        prob.push(p);
        se.push((p * (1.0 - p) / r).sqrt());
    }
    Ok(TailCurve {
        t: t_grid.to_vec(),
        prob,
        se: Some(se),
        provenance: Provenance::MonteCarlo,
        replicas: Some(values.len() as u64),
    })
}

/// Monte Carlo estimate of `P(|Σ_{i<n} f(Υ_i)| > t)` under `init`.
#[allow(clippy::too_many_arguments)]
pub fn mc_tail<C: SplitChain>(
    chain: &C,
    f: &(dyn Fn(C::State) -> f64 + Sync),
    init: &InitialLaw<C::State>,
    n: usize,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
    exec: Execution,
) -> Result<TailCurve> {
    check_grid(t_grid)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if replicas < MIN_REPLICAS {
        return Err(Error::TooFewSamples(format!("{replicas} replicas, need at least {MIN_REPLICAS}")));
    }
    let sums = mc_sums(chain, f, init, n, replicas, seed, exec);
    empirical_tail(&sums, t_grid)
}

/// Per-replica sums `Σ_{i<n} f(Υ_i)`, in replica order.
pub fn mc_sums<C: SplitChain>(
    chain: &C,
    f: &(dyn Fn(C::State) -> f64 + Sync),
    init: &InitialLaw<C::State>,
    n: usize,
    replicas: u64,
    seed: u64,
    exec: Execution,
) -> Vec<f64> {
    run_replicas(exec, seed, replicas, |_, rng| {
        let (mut x, _) = draw_initial(chain, init, rng);
        let mut s = f(x);
        for _ in 1..n {
            x = chain.step(x, rng);
            s += f(x);
        }
        s
    })
}

fn enumeration_guard(states: usize, n: usize) -> Result<()> {
    let size = (states as f64).powi(n as i32);
    if size > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded(format!(
            "{states}^{n} = {size:e} paths exceeds {ENUMERATION_GUARD:e}"
        )));
    }
    Ok(())
}

/// Denominator `q ≤ 4096` with every `q·f_i` integral, if any.
fn lattice_scale(f: &[f64]) -> Option<f64> {
    (1..=4096u32).map(f64::from).find(|&q| {
        f.iter().all(|v| {
            let s = v * q;
            (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)
        })
    })
}

/// Exact `P_{x0}(|Σ_{i<n} f(Υ_i)| > t)`.
///
/// Lattice-valued `f` uses dynamic programming over (state, integer sum);
/// otherwise all paths are enumerated.
pub fn exact_tail(chain: &FiniteChain, f: &[f64], x0: usize, n: usize, t_grid: &[f64]) -> Result<TailCurve> {
    check_grid(t_grid)?;
    if f.len() != chain.len() || x0 >= chain.len() {
        return Err(Error::invalid("f and x0 must match the chain's states"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    enumeration_guard(chain.len(), n)?;
    let law = match lattice_scale(f) {
        Some(q) => lattice_law(chain, f, x0, n, q),
        None => path_law(chain, f, x0, n),
    };
    let prob = t_grid
        .iter()
        .map(|&t| {
            let cut = t + 1e-12 * t.max(1.0);
            law.iter().filter(|(s, _)| s.abs() > cut).map(|(_, p)| p).sum::<f64>().min(1.0)
        })
        .collect();
    Ok(TailCurve { t: t_grid.to_vec(), prob, se: None, provenance: Provenance::Enumeration, replicas: None })
}

fn lattice_law(chain: &FiniteChain, f: &[f64], x0: usize, n: usize, q: f64) -> Vec<(f64, f64)> {
    let key = |v: f64| (v * q).round() as i64;
    let k = chain.len();
    let p = chain.kernel().matrix();
    let mut dist: Vec<HashMap<i64, f64>> = vec![HashMap::new(); k];
    dist[x0].insert(key(f[x0]), 1.0);
    for _ in 1..n {
        let mut next: Vec<HashMap<i64, f64>> = vec![HashMap::new(); k];
        for (x, sums) in dist.iter().enumerate() {
            for (&s, &w) in sums {
                for y in 0..k {
                    if p[x][y] > 0.0 {
                        *next[y].entry(s + key(f[y])).or_insert(0.0) += w * p[x][y];
                    }
                }
            }
        }
        dist = next;
    }
    let mut merged: HashMap<i64, f64> = HashMap::new();
    for sums in dist {
        for (s, w) in sums {
            *merged.entry(s).or_insert(0.0) += w;
        }
    }
    let mut out: Vec<(f64, f64)> = merged.into_iter().map(|(s, w)| (s as f64 / q, w)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn path_law(chain: &FiniteChain, f: &[f64], x0: usize, n: usize) -> Vec<(f64, f64)> {
    fn walk(chain: &FiniteChain, f: &[f64], x: usize, left: usize, s: f64, w: f64, out: &mut Vec<(f64, f64)>) {
        if left == 0 {
            out.push((s, w));
            return;
        }
        for y in 0..chain.len() {
            let p = chain.kernel().prob(x, y);
            if p > 0.0 {
                walk(chain, f, y, left - 1, s + f[y], w * p, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(chain, f, x0, n - 1, f[x0], 1.0, &mut out);
    out
}

/// Exact law of `N` (regenerations with `σ_i + m − 1 < n − 1`) from `x0`.
pub fn exact_regeneration_count_law(chain: &FiniteChain, x0: usize, n: usize) -> Result<Vec<f64>> {
    if x0 >= chain.len() || n == 0 {
        return Err(Error::invalid("x0 must be a state and n positive"));
    }
    let k = chain.len();
    let m = chain.minorization().m;
    let delta = chain.minorization().delta;
    let nu = &chain.minorization().nu;
    let pm = chain.m_step_matrix();
    let blocks = (0..).take_while(|j| j * m + m < n).count();
    let mut dist = vec![vec![0.0; blocks + 1]; k];
    dist[x0][0] = 1.0;
    for _ in 0..blocks {
        let mut next = vec![vec![0.0; blocks + 1]; k];
        for x in 0..k {
            let in_c = chain.is_in_small_set(x);
            for c in 0..=blocks {
                let w = dist[x][c];
                if w == 0.0 {
                    continue;
                }
                for y in 0..k {
                    let hit = if in_c { delta * nu[y] } else { 0.0 };
                    next[y][c] += w * (pm[x][y] - hit).max(0.0);
                    if hit > 0.0 {
                        next[y][c + 1] += w * hit;
                    }
                }
            }
        }
        dist = next;
    }
    Ok((0..=blocks).map(|c| (0..k).map(|x| dist[x][c]).sum()).collect())
}

/// Law of the first block index `j` with level 1, starting from `start` at block 0.
pub fn first_regeneration_law(chain: &FiniteChain, start: &[f64], tail_tol: f64) -> Result<Vec<f64>> {
    let k = chain.len();
    if start.len() != k {
        return Err(Error::invalid("start law must cover every state"));
    }
    let delta = chain.minorization().delta;
    let nu = &chain.minorization().nu;
    let pm = chain.m_step_matrix();
    let mut q = start.to_vec();
    let mut pmf = Vec::new();
    loop {
        let hit: f64 = (0..k).filter(|&y| chain.is_in_small_set(y)).map(|y| q[y] * delta).sum();
        pmf.push(hit);
        let next: Vec<f64> = (0..k)
            .map(|y2| {
                (0..k)
                    .map(|y| {
                        let sub = if chain.is_in_small_set(y) { delta * nu[y2] } else { 0.0 };
                        q[y] * (pm[y][y2] - sub).max(0.0)
                    })
                    .sum()
            })
            .collect();
        q = next;
        if q.iter().sum::<f64>() < tail_tol {
            return Ok(pmf);
        }
        if pmf.len() > 1_000_000 {
            return Err(Error::GuardExceeded("first regeneration law does not converge".into()));
        }
    }
}

/// Exact regeneration-time norms of a finite chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactRegenerationNorms {
    pub mean_gap: f64,
    /// `‖σ₁ − σ₀‖_{ψ_1}`.
    pub d: f64,
    /// `‖σ₀‖_{ψ_1}` under the split point start.
    pub sigma0_point: f64,
    /// `‖σ₀‖_{ψ_1}` under the split stationary start.
    pub sigma0_stationary: f64,
    pub big_d: f64,
}

pub fn exact_regeneration_norms(chain: &FiniteChain, x0: usize) -> Result<ExactRegenerationNorms> {
    let k = chain.len();
    let m = chain.minorization().m as f64;
    // ψ_1 weights grow like e^{k/s}, so the truncated mass must be far below the target precision.
    let tol = 1e-40;
    let norm_of = |pmf: &[f64], shift: f64| -> Result<f64> {
        let values: Vec<f64> = (0..pmf.len()).map(|j| (j as f64 + shift) * m).collect();
        Ok(psi_norm_discrete(&values, pmf, 1.0, 1e-12)?.value)
    };
    let gap = first_regeneration_law(chain, &chain.minorization().nu, tol)?;
    let mean_gap = gap.iter().enumerate().map(|(j, p)| (j as f64 + 1.0) * m * p).sum();
    let d = norm_of(&gap, 1.0)?;
    let mut point = vec![0.0; k];
    point[x0] = 1.0;
    let sigma0_point = norm_of(&first_regeneration_law(chain, &point, tol)?, 0.0)?;
    let sigma0_stationary = norm_of(&first_regeneration_law(chain, chain.stationary(), tol)?, 0.0)?;
    Ok(ExactRegenerationNorms {
        mean_gap,
        d,
        sigma0_point,
        sigma0_stationary,
        big_d: d.max(sigma0_point).max(sigma0_stationary),
    })
}

// ---------------------------------------------------------------------------
// Parameter fitting

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitConfig {
    pub alpha: f64,
    /// Independent head runs per initial law.
    pub replicas: u64,
    /// Excursions collected from one long run.
    pub excursions: usize,
    pub seed: u64,
    pub exec: Execution,
    pub safety: f64,
    pub max_len: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            replicas: 20_000,
            excursions: 20_000,
            seed: 0,
            exec: Execution::Parallel,
            safety: DEFAULT_SAFETY,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

/// Empirical ψ-norm parameters, already multiplied by the safety factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedNorms {
    pub alpha: f64,
    pub safety: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub sigma0_point: f64,
    pub sigma0_stationary: f64,
    /// `max(d, ‖σ₀‖ under both starts)`.
    pub big_d: f64,
    pub mean_gap: f64,
    pub mean_gap_se: f64,
    pub head_runs: u64,
    pub excursions: usize,
}

/// Runs until the first regeneration and returns `(Σ_{k ≤ σ₀/m} |Θ_k|, σ₀)`.
fn head_cycle<C: SplitChain>(
    chain: &C,
    f: &(dyn Fn(C::State) -> f64 + Sync),
    mut x: C::State,
    max_blocks: usize,
    rng: &mut SimRng,
) -> Result<(f64, usize)> {
    let m = chain.order();
    let mut buf = Vec::with_capacity(m);
    let mut total = 0.0;
    for k in 0..max_blocks {
        buf.clear();
        let level = chain.split_block(x, rng, &mut buf)?;
        let theta = f(x) + buf[..m - 1].iter().map(|&s| f(s)).sum::<f64>();
        total += theta.abs();
        if level {
            return Ok((total, k * m));
        }
        x = buf[m - 1];
    }
    Err(Error::GuardExceeded(format!("no regeneration within {max_blocks} blocks")))
}

fn head_runs<C: SplitChain>(
    chain: &C,
    f: &(dyn Fn(C::State) -> f64 + Sync),
    init: &InitialLaw<C::State>,
    cfg: &FitConfig,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let runs = run_replicas(cfg.exec, seed, cfg.replicas, |_, rng| {
        let (x, _) = draw_initial(chain, init, rng);
        head_cycle(chain, f, x, cfg.max_len, rng)
    });
    let mut heads = Vec::with_capacity(runs.len());
    let mut sigma0 = Vec::with_capacity(runs.len());
    for r in runs {
        let (h, s) = r?;
        heads.push(h);
        sigma0.push(s as f64);
    }
    Ok((heads, sigma0))
}

/// Fits `a, b, c, d, D` from simulated blocks: `a` and `‖σ₀‖` under the point
/// start at `x0`, `b` under the stationary start, `c` and `d` from one long
/// run of excursions.
pub fn fit_parameters<C: SplitChain>(
    chain: &C,
    f: &(dyn Fn(C::State) -> f64 + Sync),
    x0: C::State,
    cfg: &FitConfig,
) -> Result<FittedNorms> {
    if !(cfg.safety >= 1.0) {
        return Err(Error::invalid("safety factor must be at least 1"));
    }
    if cfg.replicas == 0 || cfg.excursions < 2 {
        return Err(Error::TooFewSamples("fitting needs head runs and at least 2 excursions".into()));
    }
    let norm = |xs: &[f64], alpha: f64| -> Result<f64> { Ok(psi_norm_empirical(xs, alpha, DEFAULT_TOL)?.value) };
    let (heads_x, sig_x) = head_runs(chain, f, &InitialLaw::Point(x0), cfg, cfg.seed.wrapping_add(1))?;
    let (heads_pi, sig_pi) =
        head_runs(chain, f, &InitialLaw::Stationary { burn_in: None }, cfg, cfg.seed.wrapping_add(2))?;
    let mut rng = substream(cfg.seed.wrapping_add(3), 0);
    let traj = simulate_regenerations(chain, &InitialLaw::SmallMeasure, cfg.excursions, cfg.max_len, &mut rng)?;
    let ex = traj.excursions(f);
    let chi: Vec<f64> = ex.iter().map(|e| e.value).collect();
    let gaps: Vec<f64> = ex.iter().map(|e| e.gap as f64).collect();
    let s = cfg.safety;
    let d = norm(&gaps, 1.0)? * s;
    let sigma0_point = norm(&sig_x, 1.0)? * s;
    let sigma0_stationary = norm(&sig_pi, 1.0)? * s;
    Ok(FittedNorms {
        alpha: cfg.alpha,
        safety: s,
        a: norm(&heads_x, cfg.alpha)? * s,
        b: norm(&heads_pi, cfg.alpha)? * s,
        c: norm(&chi, cfg.alpha)? * s,
        d,
        sigma0_point,
        sigma0_stationary,
        big_d: d.max(sigma0_point).max(sigma0_stationary),
        mean_gap: mean(&gaps),
        mean_gap_se: standard_error(&gaps),
        head_runs: cfg.replicas,
        excursions: chi.len(),
    })
}

// ---------------------------------------------------------------------------
// Domination

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    ThmSbi,
    ThmBi,
    ThmBi2,
}

impl Formula {
    pub const ALL: [Formula; 3] = [Formula::ThmSbi, Formula::ThmBi, Formula::ThmBi2];

    pub fn name(self) -> &'static str {
        match self {
            Formula::ThmSbi => "thm_sbi",
            Formula::ThmBi => "thm_bi",
            Formula::ThmBi2 => "thm_bi2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown formula {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub formula: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates `formula` on `t_grid`. `p_reg` is used by the second theorem only.
pub fn bound_curve(formula: Formula, params: &BernsteinParams, n: usize, t_grid: &[f64], p_reg: f64) -> Result<BoundCurve> {
    let nf = n as f64;
    let values = t_grid
        .iter()
        .map(|&t| {
            Ok(match formula {
                Formula::ThmBi => thm_bi(params, nf, t)?.value,
                Formula::ThmBi2 => thm_bi2(params, nf, p_reg, t)?.value,
                Formula::ThmSbi => {
                    let (Some(d), Some(fs)) = (params.big_d, params.f_sup) else {
                        return Err(Error::invalid("thm_sbi needs D and f_sup"));
                    };
                    thm_sbi(nf, t, params.sigma2_mrv, fs, d, params.delta, params.pi_c)?.value
                }
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundCurve { formula: formula.name().to_string(), t: t_grid.to_vec(), values })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationVerdict {
    pub formula: String,
    pub pass: bool,
    /// `min_t bound(t) − (estimate(t) − z·SE(t))`.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub z: f64,
}

/// Passes iff `bound(t) ≥ estimate(t) − z·SE(t)` at every grid point.
pub fn check_domination(tail: &TailCurve, bound: &BoundCurve, z: f64) -> Result<DominationVerdict> {
    if tail.t.len() != bound.values.len() || tail.t != bound.t {
        return Err(Error::GridMismatch(format!(
            "tail grid has {} points, bound {} has {}",
            tail.t.len(),
            bound.formula,
            bound.values.len()
        )));
    }
    let mut worst = f64::INFINITY;
    let mut worst_t = tail.t[0];
    for (i, (&t, &b)) in tail.t.iter().zip(&bound.values).enumerate() {
        let margin = b - (tail.prob[i] - z * tail.se_at(i));
        if margin < worst {
            worst = margin;
            worst_t = t;
        }
    }
    Ok(DominationVerdict { formula: bound.formula.clone(), pass: worst >= 0.0, worst_margin: worst, worst_t, z })
}

// ---------------------------------------------------------------------------
// Structural tests

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagTest {
    pub lag: usize,
    pub value: f64,
    pub band: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStructureReport {
    pub blocks: usize,
    pub level: f64,
    pub gap_autocorrelation: Vec<LagTest>,
    pub excursion_autocorrelation: Vec<LagTest>,
    /// Lag-1 excursion correlation; reported only.
    pub excursion_lag1: Option<f64>,
    pub gap_split_ks: KsResult,
    pub gap_split_pass: bool,
    pub pass: bool,
}

/// Tests i.i.d. gaps and 1-dependent excursions at `level`, Bonferroni-corrected across lags.
pub fn check_block_structure(gaps: &[f64], excursions: &[f64], lags: usize, level: f64) -> Result<BlockStructureReport> {
    if gaps.len() < 1000 {
        return Err(Error::TooFewSamples(format!("{} gaps, need at least 1000", gaps.len())));
    }
    if lags == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("need lags ≥ 1 and level in (0,1)"));
    }
    let z = normal_upper_quantile(level / (2.0 * lags as f64));
    let n = gaps.len() as f64;
    let gap_autocorrelation: Vec<LagTest> = (1..=lags)
        .map(|lag| {
            let value = autocorrelation(gaps, lag);
            let band = z / n.sqrt();
            LagTest { lag, value, band, pass: value.abs() <= band }
        })
        .collect();
    let (excursion_lag1, excursion_autocorrelation) = if excursions.len() >= 1000 {
        let ne = excursions.len() as f64;
        let r1 = autocorrelation(excursions, 1);
        // Bartlett variance of lag-k correlations for a 1-dependent sequence.
        let band = z * ((1.0 + 2.0 * r1 * r1) / ne).sqrt();
        let tests = (2..=lags.max(2))
            .map(|lag| {
                let value = autocorrelation(excursions, lag);
                LagTest { lag, value, band, pass: value.abs() <= band }
            })
            .collect();
        (Some(r1), tests)
    } else {
        (None, Vec::new())
    };
    let half = gaps.len() / 2;
    let ks = ks_two_sample(&gaps[..half], &gaps[half..])?;
    let gap_split_pass = ks.p_value >= level;
    let pass = gap_split_pass
        && gap_autocorrelation.iter().all(|t| t.pass)
        && excursion_autocorrelation.iter().all(|t| t.pass);
    Ok(BlockStructureReport {
        blocks: gaps.len(),
        level,
        gap_autocorrelation,
        excursion_autocorrelation,
        excursion_lag1,
        gap_split_ks: ks,
        gap_split_pass,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitmanReport {
    pub cycle_mean: f64,
    pub cycle_se: f64,
    pub stationary_side: f64,
    pub replicas: u64,
    pub pass: bool,
}

/// `E_{π*} G` for a finite chain.
pub fn split_stationary_expectation(chain: &FiniteChain, g: impl Fn(usize, bool) -> f64) -> f64 {
    let delta = chain.minorization().delta;
    chain
        .stationary()
        .iter()
        .enumerate()
        .map(|(x, p)| {
            if chain.is_in_small_set(x) {
                p * ((1.0 - delta) * g(x, false) + delta * g(x, true))
            } else {
                p * g(x, false)
            }
        })
        .sum()
}

/// Compares `E_ν Σ_{i ≤ σ₀/m} G(Υ_{mi}, Y_{mi})` with `δ⁻¹π(C)⁻¹ E_{π*} G` (4 SE).
pub fn check_pitman<C: SplitChain>(
    chain: &C,
    g: &(dyn Fn(C::State, bool) -> f64 + Sync),
    stationary_expectation: f64,
    replicas: u64,
    seed: u64,
    exec: Execution,
) -> Result<PitmanReport> {
    let pi_c = chain
        .small_set_stationary_mass()
        .ok_or_else(|| Error::invalid("π(C) is unknown for this chain"))?;
    if replicas < 2 {
        return Err(Error::TooFewSamples("need at least 2 replicas".into()));
    }
    let sums = run_replicas(exec, seed, replicas, |_, rng| first_cycle_sum(chain, g, DEFAULT_MAX_LEN, rng));
    let sums: Vec<f64> = sums.into_iter().map(|r| r.map(|(s, _)| s)).collect::<Result<_>>()?;
    let cycle_mean = mean(&sums);
    let cycle_se = standard_error(&sums);
    let stationary_side = stationary_expectation / (chain.delta() * pi_c);
    let pass = (cycle_mean - stationary_side).abs() <= 4.0 * cycle_se + 1e-12 * stationary_side.abs().max(1.0);
    Ok(PitmanReport { cycle_mean, cycle_se, stationary_side, replicas, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalPair {
    pub block: usize,
    /// `E(F | Ξ_0, ..., Ξ_i)`.
    pub full_history: f64,
    /// `E(F | Ξ_i)`.
    pub last_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMarkovReport {
    pub horizon: usize,
    pub window: usize,
    pub histories: usize,
    pub max_abs_diff: f64,
    pub pass: bool,
    pub comparisons: Vec<ConditionalPair>,
}

impl BlockMarkovReport {
    pub fn verdict(&self, tol: f64) -> bool {
        self.comparisons.iter().all(|c| (c.full_history - c.last_block).abs() <= tol)
    }
}

/// Exact check of `E(χ_i | Ξ_0..Ξ_i) = E(χ_i | Ξ_i)` by enumerating split paths
/// of length `n`.
///
/// `χ_i` is replaced by `F_L`, the sum of `f` over the first `window` entries of
/// `Ξ_{i+1}` (or all of it when shorter), so the functional is observable
/// inside the horizon. Only histories leaving room for the window are used.
pub fn check_block_markov(chain: &FiniteChain, f: &[f64], n: usize, window: usize) -> Result<BlockMarkovReport> {
    let m = chain.minorization().m;
    if f.len() != chain.len() {
        return Err(Error::invalid("f must have one value per state"));
    }
    if !n.is_multiple_of(m) || window == 0 || window >= n {
        return Err(Error::invalid("need m | n and 0 < window < n"));
    }
    let leaves = ((chain.len() as f64).powi(m as i32) * 2.0).powi((n / m) as i32);
    if leaves > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded(format!("{leaves:e} split paths exceed {ENUMERATION_GUARD:e}")));
    }
    let mut full: HashMap<Vec<usize>, (f64, f64, usize)> = HashMap::new();
    let mut last: HashMap<(usize, Vec<usize>), (f64, f64)> = HashMap::new();
    let mut states = Vec::with_capacity(n + 1);
    let mut levels = Vec::with_capacity(n / m);
    let mut visit = |states: &[usize], levels: &[bool], w: f64| {
        let sigma: Vec<usize> = levels.iter().enumerate().filter(|(_, &y)| y).map(|(k, _)| k * m).collect();
        for i in 1..sigma.len() {
            let start = sigma[i] + m;
            if start + window > n {
                break;
            }
            let block_end = sigma.get(i + 1).map_or(usize::MAX, |s| s + m);
            let stop = (start + window).min(block_end);
            let value: f64 = states[start..stop].iter().map(|&s| f[s]).sum();
            let mut key: Vec<usize> = states[..start].to_vec();
            key.push(usize::MAX);
            key.extend_from_slice(&sigma[..=i]);
            let e = full.entry(key).or_insert((0.0, 0.0, i));
            e.0 += w * value;
            e.1 += w;
            let prev = sigma[i - 1] + m;
            let l = last.entry((i, states[prev..start].to_vec())).or_insert((0.0, 0.0));
            l.0 += w * value;
            l.1 += w;
        }
    };
    enumerate_split(chain, n, &mut states, &mut levels, &mut visit);
    let mut comparisons = Vec::with_capacity(full.len());
    for (key, (sw, w, i)) in &full {
        let sep = key.iter().position(|&v| v == usize::MAX).expect("separator present");
        let sig = &key[sep + 1..];
        let prev = sig[*i - 1] + m;
        let start = sig[*i] + m;
        let (lsw, lw) = last[&(*i, key[prev..start].to_vec())];
        comparisons.push(ConditionalPair { block: *i, full_history: sw / w, last_block: lsw / lw });
    }
    comparisons.sort_by(|a, b| {
        a.block
            .cmp(&b.block)
            .then(a.full_history.total_cmp(&b.full_history))
            .then(a.last_block.total_cmp(&b.last_block))
    });
    let max_abs_diff = comparisons
        .iter()
        .map(|c| (c.full_history - c.last_block).abs())
        .fold(0.0, f64::max);
    Ok(BlockMarkovReport {
        horizon: n,
        window,
        histories: comparisons.len(),
        max_abs_diff,
        pass: max_abs_diff <= 1e-10,
        comparisons,
    })
}

/// Visits every split path `(states[0..=n], levels per block)` with its probability,
/// starting from `ν`.
fn enumerate_split(
    chain: &FiniteChain,
    n: usize,
    states: &mut Vec<usize>,
    levels: &mut Vec<bool>,
    visit: &mut impl FnMut(&[usize], &[bool], f64),
) {
    let nu = chain.minorization().nu.clone();
    for (x0, &p) in nu.iter().enumerate() {
        if p > 0.0 {
            states.clear();
            levels.clear();
            states.push(x0);
            blocks(chain, n, states, levels, p, visit);
        }
    }
}

fn blocks(
    chain: &FiniteChain,
    n: usize,
    states: &mut Vec<usize>,
    levels: &mut Vec<bool>,
    w: f64,
    visit: &mut impl FnMut(&[usize], &[bool], f64),
) {
    let m = chain.minorization().m;
    if states.len() > n {
        visit(states, levels, w);
        return;
    }
    let x = *states.last().expect("path is nonempty");
    paths(chain, x, m, states, levels, w, n, visit);
}

#[allow(clippy::too_many_arguments)]
fn paths(
    chain: &FiniteChain,
    x: usize,
    left: usize,
    states: &mut Vec<usize>,
    levels: &mut Vec<bool>,
    w: f64,
    n: usize,
    visit: &mut impl FnMut(&[usize], &[bool], f64),
) {
    if left == 0 {
        let m = chain.minorization().m;
        let start = states[states.len() - 1 - m];
        let end = states[states.len() - 1];
        let r = chain.rn_derivative(start, end);
        for (level, p) in [(true, r), (false, 1.0 - r)] {
            if p > 0.0 {
                levels.push(level);
                blocks(chain, n, states, levels, w * p, visit);
                levels.pop();
            }
        }
        return;
    }
    for y in 0..chain.len() {
        let p = chain.kernel().prob(x, y);
        if p > 0.0 {
            states.push(y);
            paths(chain, y, left - 1, states, levels, w * p, n, visit);
            states.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Two-block factors

type PairFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type LawFn = dyn Fn(&mut SimRng) -> f64 + Send + Sync;

/// `X_i = h(ξ_i, ξ_{i+1})` for i.i.d. `ξ`, a canonical one-dependent sequence.
#[derive(Clone)]
pub struct TwoBlockFactor {
    h: Arc<PairFn>,
    xi: Arc<LawFn>,
}

impl TwoBlockFactor {
    pub fn new(
        h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        xi: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { h: Arc::new(h), xi: Arc::new(xi) }
    }

    /// `h(u, v) = uv` with standard normal `ξ`; `σ²_∞ = 1`.
    pub fn product() -> Self {
        Self::new(|u, v| u * v, |rng| rng.sample(StandardNormal))
    }

    /// `h(u, v) = v − u` with standard normal `ξ`; `σ²_∞ = 0`.
    pub fn difference() -> Self {
        Self::new(|u, v| v - u, |rng| rng.sample(StandardNormal))
    }

    fn fill(&self, length: usize, rng: &mut SimRng, out: &mut Vec<f64>) {
        out.clear();
        let mut prev = (self.xi)(rng);
        for _ in 0..length {
            let next = (self.xi)(rng);
            out.push((self.h)(prev, next));
            prev = next;
        }
    }

    pub fn stream(&self, length: usize, seed: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(length);
        self.fill(length, &mut substream(seed, 0), &mut out);
        out
    }

    /// Empirical tail of `sup_{k ≤ n} |Σ_{i ≤ k} X_i|`.
    pub fn sup_tail(&self, n: usize, t_grid: &[f64], replicas: u64, seed: u64, exec: Execution) -> Result<TailCurve> {
        if replicas < MIN_REPLICAS {
            return Err(Error::TooFewSamples(format!("{replicas} replicas, need at least {MIN_REPLICAS}")));
        }
        let sups = run_replicas(exec, seed, replicas, |_, rng| {
            let mut xs = Vec::with_capacity(n);
            self.fill(n, rng, &mut xs);
            let mut s = 0.0f64;
            let mut best = 0.0f64;
            for x in xs {
                s += x;
                best = best.max(s.abs());
            }
            best
        });
        empirical_tail(&sups, t_grid)
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub replicas: Option<u64>,
    pub seed_derivation: &'static str,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub chain: String,
    pub functional: String,
    pub n: usize,
    pub tail: TailCurve,
    pub params: BernsteinParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted: Option<FittedNorms>,
    pub bounds: Vec<BoundCurve>,
    pub verdicts: Vec<DominationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_structure: Option<BlockStructureReport>,
    pub metadata: RunMetadata,
}

impl VerificationReport {
    /// Assembles bound curves and verdicts for `formulas`.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        chain: &str,
        functional: &str,
        n: usize,
        tail: TailCurve,
        params: BernsteinParams,
        formulas: &[Formula],
        p_reg: f64,
        z: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut bounds = Vec::with_capacity(formulas.len());
        let mut verdicts = Vec::with_capacity(formulas.len());
        for &formula in formulas {
            let curve = bound_curve(formula, &params, n, &tail.t, p_reg)?;
            verdicts.push(check_domination(&tail, &curve, z)?);
            bounds.push(curve);
        }
        let replicas = tail.replicas;
        Ok(Self {
            chain: chain.to_string(),
            functional: functional.to_string(),
            n,
            tail,
            params,
            fitted: None,
            bounds,
            verdicts,
            block_structure: None,
            metadata: RunMetadata { seed, replicas, seed_derivation: SEED_DERIVATION, z },
        })
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// `t,estimate,se,<formula>...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,estimate,se");
        for b in &self.bounds {
            out.push(',');
            out.push_str(&b.formula);
        }
        out.push('\n');
        for i in 0..self.tail.t.len() {
            out.push_str(&format!("{},{},{}", self.tail.t[i], self.tail.prob[i], self.tail.se_at(i)));
            for b in &self.bounds {
                out.push_str(&format!(",{}", b.values[i]));
            }
            out.push('\n');
        }
        out
    }
}
