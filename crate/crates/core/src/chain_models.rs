//! Transition kernels, minorization data and the built-in chains.
//!
//! Finite chains carry exact oracles (stationary law, exact minorization check,
//! exact total variation). Generic chains on the real line are sampling-only.
//! The singular unit-interval chain lives in fixed-point arithmetic.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::replicas::{run_replicas, Execution, SimRng};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// A chain that can be simulated together with its split chain.
///
/// `split_block` realizes one m-block of the split chain: starting at
/// `x = Υ_{km}` it appends `Υ_{km+1}, ..., Υ_{km+m}` to `path` and returns the
/// level `Y_{km}`, drawn given the realized endpoint.
pub trait SplitChain: Sync {
    type State: Copy + Send + Sync + fmt::Debug + PartialEq;

    fn name(&self) -> &str;
    /// Order `m` of the minorization.
    fn order(&self) -> usize;
    fn delta(&self) -> f64;
    fn in_small_set(&self, x: Self::State) -> bool;
    fn step(&self, x: Self::State, rng: &mut SimRng) -> Self::State;
    fn split_block(
        &self,
        x: Self::State,
        rng: &mut SimRng,
        path: &mut Vec<Self::State>,
    ) -> Result<bool>;
    fn sample_nu(&self, rng: &mut SimRng) -> Self::State;
    /// Exact draw from the stationary law, when one is available.
    fn sample_stationary(&self, _rng: &mut SimRng) -> Option<Self::State> {
        None
    }
    /// Starting point for burn-in when no exact stationary sampler exists.
    fn reference_state(&self) -> Self::State;
    /// `π(C)` when known.
    fn small_set_stationary_mass(&self) -> Option<f64>;
}

/// Draws `n` states `x0, X_1, ..., X_{n-1}` of the original chain.
pub fn sample_path<C: SplitChain>(
    chain: &C,
    x0: C::State,
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<C::State>> {
    if n < 1 {
        return Err(Error::invalid("n ≥ 1 required for sample_path"));
    }
    let mut out = Vec::with_capacity(n);
    let mut x = x0;
    out.push(x);
    for _ in 1..n {
        x = chain.step(x, rng);
        out.push(x);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Finite kernels

/// Row-stochastic matrix over a labeled finite state set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteKernel {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    #[serde(skip)]
    cumulative: Vec<Vec<f64>>,
}

impl FiniteKernel {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..matrix.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, matrix)
    }

    pub fn with_labels(labels: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let k = matrix.len();
        if k == 0 {
            return Err(Error::invalid("transition matrix is empty"));
        }
        if labels.len() != k {
            return Err(Error::invalid(format!("{} labels for {k} states", labels.len())));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::NotStochastic(format!("row {i} has entry {v}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        let cumulative = matrix
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self { labels, matrix, cumulative })
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x][y]
    }

    /// `P^m` as a dense matrix.
    pub fn power(&self, m: usize) -> Vec<Vec<f64>> {
        let k = self.len();
        let mut acc: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..m {
            acc = mat_mul(&acc, &self.matrix);
        }
        acc
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        sample_cumulative(&self.cumulative[x], rng)
    }

    /// Strong connectivity of the support graph.
    pub fn is_irreducible(&self) -> bool {
        let k = self.len();
        let forward = reachable(k, |i, j| self.matrix[i][j] > 0.0);
        let backward = reachable(k, |i, j| self.matrix[j][i] > 0.0);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }
}

fn reachable(k: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; k];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for (j, s) in seen.iter_mut().enumerate() {
            if !*s && edge(i, j) {
                *s = true;
                stack.push(j);
            }
        }
    }
    seen
}

pub(crate) fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.len();
    a.iter()
        .map(|row| {
            (0..k)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn sample_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let idx = cum.partition_point(|&c| c <= u);
    // Guard against rounding in the last cumulative entry and zero-mass tails.
    let idx = idx.min(cum.len() - 1);
    if idx > 0 && cum[idx] == cum[idx - 1] {
        (0..=idx).rev().find(|&j| j == 0 || cum[j] > cum[j - 1]).unwrap_or(0)
    } else {
        idx
    }
}

fn cumulative_of(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Solves `πP = π`, `Σπ = 1` for an irreducible finite kernel.
pub fn stationary_distribution(kernel: &FiniteKernel) -> Result<Vec<f64>> {
    if !kernel.is_irreducible() {
        return Err(Error::Reducible("support graph is not strongly connected".into()));
    }
    let k = kernel.len();
    // Rows of (P^T - I), last row replaced by the normalization.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = kernel.prob(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
    let mut pi: Vec<f64> = sol.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    for y in 0..k {
        let lhs: f64 = (0..k).map(|x| pi[x] * kernel.prob(x, y)).sum();
        if (lhs - pi[y]).abs() > STATIONARY_TOL {
            return Err(Error::Numerical(format!(
                "stationary residual {} at state {y}",
                (lhs - pi[y]).abs()
            )));
        }
    }
    Ok(pi)
}

// ---------------------------------------------------------------------------
// Minorization

/// `P^m(x, ·) ≥ δ ν(·)` for every `x` in `small_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMinorization {
    pub small_set: Vec<usize>,
    pub m: usize,
    pub delta: f64,
    pub nu: Vec<f64>,
}

impl FiniteMinorization {
    fn validate(&self, k: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("order m must be positive"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!("delta {} outside (0,1]", self.delta)));
        }
        if self.small_set.is_empty() {
            return Err(Error::invalid("small set is empty"));
        }
        if let Some(x) = self.small_set.iter().find(|&&x| x >= k) {
            return Err(Error::invalid(format!("small-set state {x} out of range")));
        }
        if self.nu.len() != k {
            return Err(Error::invalid(format!("nu has {} entries, expected {k}", self.nu.len())));
        }
        if self.nu.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("nu has a negative or non-finite entry"));
        }
        let s: f64 = self.nu.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::invalid(format!("nu sums to {s}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationReport {
    pub passed: bool,
    /// `min_{x∈C, y} P^m(x,y) − δν(y)`; negative when the condition fails.
    pub worst_margin: f64,
    pub worst_pair: (usize, usize),
    /// `ν(C)`, reported only.
    pub nu_mass_on_small_set: f64,
}

/// Exact check of the minorization condition for a finite kernel.
pub fn validate_minorization(
    kernel: &FiniteKernel,
    spec: &FiniteMinorization,
) -> Result<MinorizationReport> {
    spec.validate(kernel.len())?;
    let pm = kernel.power(spec.m);
    let mut worst = f64::INFINITY;
    let mut pair = (spec.small_set[0], 0);
    for &x in &spec.small_set {
        for (y, nu_y) in spec.nu.iter().enumerate() {
            let margin = pm[x][y] - spec.delta * nu_y;
            if margin < worst {
                worst = margin;
                pair = (x, y);
            }
        }
    }
    let nu_c = spec.small_set.iter().map(|&x| spec.nu[x]).sum();
    Ok(MinorizationReport {
        passed: worst >= -ROW_TOL,
        worst_margin: worst,
        worst_pair: pair,
        nu_mass_on_small_set: nu_c,
    })
}

/// Outcome of a grid spot-check of the minorization condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledMinorizationReport {
    pub passed: bool,
    /// Minimum of `P^m(x,y)/ν(y)` over grid points with `x ∈ C`, `ν(y) > 0`.
    pub min_ratio: f64,
    pub delta: f64,
    pub grid_points: usize,
}

/// Geometric ergodicity data `‖P^n(x,·) − π‖ ≤ G(x) ρ^n`, supplied by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ergodicity {
    pub g: Vec<f64>,
    pub rho: f64,
}

/// Total variation curve `n ↦ ‖P^n(x,·) − π‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvCurve {
    pub steps: Vec<usize>,
    pub tv: Vec<f64>,
    /// Standard errors of the binned estimate; absent for exact curves.
    pub se: Option<Vec<f64>>,
    /// `G(x) ρ^n` when ergodicity data is available.
    pub envelope: Option<Vec<f64>>,
    pub exact: bool,
}

// ---------------------------------------------------------------------------
// Finite chain instance

/// A finite kernel with validated minorization data and its exact stationary law.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    name: String,
    kernel: FiniteKernel,
    minorization: FiniteMinorization,
    pi: Vec<f64>,
    in_c: Vec<bool>,
    m_step: Vec<Vec<f64>>,
    rn: Vec<Vec<f64>>,
    nu_cum: Vec<f64>,
    pi_cum: Vec<f64>,
    ergodicity: Option<Ergodicity>,
}

impl FiniteChain {
    pub fn new(
        name: impl Into<String>,
        kernel: FiniteKernel,
        minorization: FiniteMinorization,
    ) -> Result<Self> {
        let pi = stationary_distribution(&kernel)?;
        let report = validate_minorization(&kernel, &minorization)?;
        if !report.passed {
            return Err(Error::MinorizationFails(format!(
                "margin {} at {:?}",
                report.worst_margin, report.worst_pair
            )));
        }
        let k = kernel.len();
        let mut in_c = vec![false; k];
        for &x in &minorization.small_set {
            in_c[x] = true;
        }
        let m_step = kernel.power(minorization.m);
        let rn = (0..k)
            .map(|x| {
                (0..k)
                    .map(|y| {
                        if in_c[x] && m_step[x][y] > 0.0 {
                            (minorization.delta * minorization.nu[y] / m_step[x][y]).min(1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let nu_cum = cumulative_of(&minorization.nu);
        let pi_cum = cumulative_of(&pi);
        let chain = Self {
            name: name.into(),
            kernel,
            minorization,
            pi,
            in_c,
            m_step,
            rn,
            nu_cum,
            pi_cum,
            ergodicity: None,
        };
        if chain.pi_small_set() <= 0.0 {
            return Err(Error::invalid("π(C) = 0"));
        }
        Ok(chain)
    }

    /// Builds a chain from a JSON-style definition.
    pub fn from_spec(spec: &FiniteChainSpec) -> Result<Self> {
        let kernel = FiniteKernel::with_labels(spec.states.clone(), spec.matrix.clone())?;
        let small_set = spec
            .small_set
            .iter()
            .map(|s| s.resolve(&spec.states))
            .collect::<Result<Vec<_>>>()?;
        let minorization = FiniteMinorization {
            small_set,
            m: spec.m,
            delta: spec.delta,
            nu: spec.nu.clone(),
        };
        let name = spec.name.clone().unwrap_or_else(|| "finite".to_string());
        Self::new(name, kernel, minorization)
    }

    pub fn with_ergodicity(mut self, ergodicity: Ergodicity) -> Result<Self> {
        if !(ergodicity.rho > 0.0 && ergodicity.rho < 1.0) {
            return Err(Error::invalid("ρ must lie in (0,1)"));
        }
        if ergodicity.g.len() != self.kernel.len()
            || ergodicity.g.iter().any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::invalid("G must be finite and nonnegative on every state"));
        }
        self.ergodicity = Some(ergodicity);
        Ok(self)
    }

    pub fn kernel(&self) -> &FiniteKernel {
        &self.kernel
    }

    pub fn minorization(&self) -> &FiniteMinorization {
        &self.minorization
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn ergodicity(&self) -> Option<&Ergodicity> {
        self.ergodicity.as_ref()
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn is_in_small_set(&self, x: usize) -> bool {
        self.in_c[x]
    }

    pub fn m_step_matrix(&self) -> &[Vec<f64>] {
        &self.m_step
    }

    /// `r(x,y) = δν(y)/P^m(x,y)` on `C`, zero off `C`.
    pub fn rn_derivative(&self, x: usize, y: usize) -> f64 {
        self.rn[x][y]
    }

    pub fn pi_small_set(&self) -> f64 {
        self.minorization.small_set.iter().map(|&x| self.pi[x]).sum()
    }

    /// Exact `‖P^n(x,·) − π‖_TV` for `n = 1..=n_max`.
    pub fn tv_decay_curve(&self, x: usize, n_max: usize) -> Result<TvCurve> {
        if x >= self.len() {
            return Err(Error::invalid(format!("state {x} out of range")));
        }
        let k = self.len();
        let mut row: Vec<f64> = (0..k).map(|j| if j == x { 1.0 } else { 0.0 }).collect();
        let mut steps = Vec::with_capacity(n_max);
        let mut tv = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            row = (0..k)
                .map(|j| (0..k).map(|i| row[i] * self.kernel.prob(i, j)).sum())
                .collect();
            steps.push(n);
            tv.push(0.5 * row.iter().zip(&self.pi).map(|(p, q)| (p - q).abs()).sum::<f64>());
        }
        let envelope = self.ergodicity.as_ref().map(|e| {
            steps.iter().map(|&n| e.g[x] * e.rho.powi(n as i32)).collect()
        });
        Ok(TvCurve { steps, tv, se: None, envelope, exact: true })
    }
}

impl SplitChain for FiniteChain {
    type State = usize;

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> usize {
        self.minorization.m
    }

    fn delta(&self) -> f64 {
        self.minorization.delta
    }

    fn in_small_set(&self, x: usize) -> bool {
        self.in_c[x]
    }

    fn step(&self, x: usize, rng: &mut SimRng) -> usize {
        self.kernel.sample_next(x, rng)
    }

    fn split_block(&self, x: usize, rng: &mut SimRng, path: &mut Vec<usize>) -> Result<bool> {
        let mut cur = x;
        for _ in 0..self.minorization.m {
            cur = self.kernel.sample_next(cur, rng);
            path.push(cur);
        }
        let r = self.rn[x][cur];
        Ok(if r >= 1.0 {
            true
        } else if r <= 0.0 {
            false
        } else {
            rng.random::<f64>() < r
        })
    }

    fn sample_nu(&self, rng: &mut SimRng) -> usize {
        sample_cumulative(&self.nu_cum, rng)
    }

    fn sample_stationary(&self, rng: &mut SimRng) -> Option<usize> {
        Some(sample_cumulative(&self.pi_cum, rng))
    }

    fn reference_state(&self) -> usize {
        self.minorization.small_set[0]
    }

    fn small_set_stationary_mass(&self) -> Option<f64> {
        Some(self.pi_small_set())
    }
}

/// Reference to a state in a chain definition file: index or label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Index(usize),
    Label(String),
}

impl StateRef {
    fn resolve(&self, labels: &[String]) -> Result<usize> {
        match self {
            StateRef::Index(i) if *i < labels.len() => Ok(*i),
            StateRef::Index(i) => Err(Error::invalid(format!("state index {i} out of range"))),
            StateRef::Label(l) => labels
                .iter()
                .position(|s| s == l)
                .ok_or_else(|| Error::invalid(format!("unknown state label {l:?}"))),
        }
    }
}

/// Finite chain definition as stored in JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteChainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub small_set: Vec<StateRef>,
    pub m: usize,
    pub delta: f64,
    pub nu: Vec<f64>,
}

/// Two-state chain `P = [[1−a, a], [b, 1−b]]` with small set `{0}`, `m = 1`
/// and `ν = P(0,·)`. With `delta = 1` state 0 is an atom.
pub fn make_two_state(a: f64, b: f64, delta: f64) -> Result<FiniteChain> {
    if !(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("two-state parameters a={a}, b={b} must lie in (0,1)")));
    }
    let kernel = FiniteKernel::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]])?;
    let minorization = FiniteMinorization {
        small_set: vec![0],
        m: 1,
        delta,
        nu: vec![1.0 - a, a],
    };
    FiniteChain::new("two-state", kernel, minorization)
}

// ---------------------------------------------------------------------------
// Singular chain on the unit interval

/// Point of `[0,1)` in 64-bit fixed point: the value is `bits / 2^64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitPoint(pub u64);

impl UnitPoint {
    pub fn value(self) -> f64 {
        self.0 as f64 * 2f64.powi(-64)
    }

    /// Nearest fixed-point value of `x mod 1`.
    pub fn from_f64(x: f64) -> Self {
        let frac = x - x.floor();
        UnitPoint((frac * 2f64.powi(64)) as u64)
    }
}

/// Bits at odd binary positions `1, 3, 5, ...` (position `i` has weight `2^{-i}`).
const ODD_POSITIONS: u64 = 0xAAAA_AAAA_AAAA_AAAA;
/// Bits at even binary positions `2, 4, 6, ...`.
const EVEN_POSITIONS: u64 = 0x5555_5555_5555_5555;

/// One two-step transition with its latent coin pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoStep {
    pub mid: UnitPoint,
    pub end: UnitPoint,
    pub eps: (bool, bool),
}

/// `X_{n+1} = X_n + Θ^{ε_n} mod 1`, with `Θ⁰` carried by the even binary
/// digits, `Θ¹` by the odd digits and `ε_n` a fair coin.
///
/// Each step kernel is singular with respect to Lebesgue measure, but
/// `Θ⁰ + Θ¹` is uniform, so the minorization holds with `m = 2`, `δ = 1/2`,
/// `ν = λ` and `C = [0,1)`. Splitting uses the latent coins: the level is 1
/// exactly when `ε_n ≠ ε_{n+1}`. Increments are truncated to `B` bits, so the
/// uniform component is only uniform on the `2^{-B}` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMod1Chain {
    bits: u32,
    mask: u64,
}

impl SingularMod1Chain {
    pub fn new(bits: u32) -> Result<Self> {
        if !(16..=64).contains(&bits) {
            return Err(Error::invalid(format!("precision {bits} outside 16..=64 bits")));
        }
        let mask = if bits == 64 { u64::MAX } else { !(u64::MAX >> bits) };
        Ok(Self { bits, mask })
    }

    pub fn precision(&self) -> u32 {
        self.bits
    }

    /// `Θ^ε` as a fixed-point increment.
    pub fn increment(&self, eps: bool, rng: &mut SimRng) -> u64 {
        let w: u64 = rng.random();
        w & self.mask & if eps { ODD_POSITIONS } else { EVEN_POSITIONS }
    }

    fn latent_step(&self, x: UnitPoint, rng: &mut SimRng) -> (UnitPoint, bool) {
        let eps: bool = rng.random();
        (UnitPoint(x.0.wrapping_add(self.increment(eps, rng))), eps)
    }

    pub fn two_step(&self, x: UnitPoint, rng: &mut SimRng) -> TwoStep {
        let (mid, e0) = self.latent_step(x, rng);
        let (end, e1) = self.latent_step(mid, rng);
        TwoStep { mid, end, eps: (e0, e1) }
    }

    /// `Θ⁰ + Θ¹` for independent digit draws.
    pub fn mixed_increment(&self, rng: &mut SimRng) -> UnitPoint {
        let a = self.increment(false, rng);
        let b = self.increment(true, rng);
        UnitPoint(a | b)
    }

    /// Density of the absolutely continuous part of `P^m(x,·)` against `λ`.
    ///
    /// Every coin sequence mixing both values contains a uniform summand, so the
    /// part has mass `1 − 2^{1−m}`; the rest is singular.
    pub fn ac_density(m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        1.0 - 2f64.powi(1 - m as i32)
    }

    /// Grid spot-check of `P^m(x,·) ≥ δλ` through the absolutely continuous part.
    pub fn validate_minorization_sampled(
        &self,
        m: usize,
        delta: f64,
        grid: usize,
    ) -> SampledMinorizationReport {
        let points = grid.max(1);
        // The density is constant in (x, y); evaluating on the grid keeps the
        // report shape uniform with generic chains.
        let min_ratio = (0..points * points)
            .map(|_| Self::ac_density(m))
            .fold(f64::INFINITY, f64::min);
        SampledMinorizationReport {
            passed: min_ratio >= delta,
            min_ratio,
            delta,
            grid_points: points * points,
        }
    }

    /// `(1/2)^{⌈n/2⌉}`, the uniform ergodicity envelope.
    pub fn tv_envelope(n: usize) -> f64 {
        0.5f64.powi(n.div_ceil(2) as i32)
    }
}

impl SplitChain for SingularMod1Chain {
    type State = UnitPoint;

    fn name(&self) -> &str {
        "singular-mod1"
    }

    fn order(&self) -> usize {
        2
    }

    fn delta(&self) -> f64 {
        0.5
    }

    fn in_small_set(&self, _x: UnitPoint) -> bool {
        true
    }

    fn step(&self, x: UnitPoint, rng: &mut SimRng) -> UnitPoint {
        self.latent_step(x, rng).0
    }

    fn split_block(
        &self,
        x: UnitPoint,
        rng: &mut SimRng,
        path: &mut Vec<UnitPoint>,
    ) -> Result<bool> {
        let s = self.two_step(x, rng);
        path.push(s.mid);
        path.push(s.end);
        Ok(s.eps.0 != s.eps.1)
    }

    fn sample_nu(&self, rng: &mut SimRng) -> UnitPoint {
        UnitPoint(rng.random::<u64>() & self.mask)
    }

    fn sample_stationary(&self, rng: &mut SimRng) -> Option<UnitPoint> {
        Some(self.sample_nu(rng))
    }

    fn reference_state(&self) -> UnitPoint {
        UnitPoint(0)
    }

    fn small_set_stationary_mass(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Binned estimate of `‖P^n(x,·) − λ‖_TV` for chains on `[0,1)`.
///
/// The population histogram distance never exceeds the true distance; the
/// reported SE is a conservative bound on the estimator's noise.
#[allow(clippy::too_many_arguments)]
pub fn binned_tv_to_uniform<C: SplitChain>(
    chain: &C,
    to_unit: impl Fn(C::State) -> f64 + Sync,
    x: C::State,
    n_max: usize,
    bins: usize,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<TvCurve> {
    if bins < 2 {
        return Err(Error::invalid("binned TV needs at least 2 bins"));
    }
    if samples == 0 || n_max == 0 {
        return Err(Error::invalid("binned TV needs samples ≥ 1 and n_max ≥ 1"));
    }
    let paths = run_replicas(exec, seed, samples, |_, rng| {
        let mut cur = x;
        (0..n_max)
            .map(|_| {
                cur = chain.step(cur, rng);
                ((to_unit(cur) * bins as f64) as usize).min(bins - 1)
            })
            .collect::<Vec<usize>>()
    });
    let total = samples as f64;
    let q = 1.0 / bins as f64;
    let mut tv = Vec::with_capacity(n_max);
    let mut se = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let mut counts = vec![0u64; bins];
        for p in &paths {
            counts[p[n]] += 1;
        }
        let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        tv.push(0.5 * freqs.iter().map(|p| (p - q).abs()).sum::<f64>());
        se.push(0.5 * freqs.iter().map(|p| (p * (1.0 - p) / total).sqrt()).sum::<f64>());
    }
    Ok(TvCurve { steps: (1..=n_max).collect(), tv, se: Some(se), envelope: None, exact: false })
}

// ---------------------------------------------------------------------------
// Generic chains on the real line

type StepFn = dyn Fn(f64, &mut SimRng) -> f64 + Send + Sync;
type SetFn = dyn Fn(f64) -> bool + Send + Sync;
type NuFn = dyn Fn(&mut SimRng) -> f64 + Send + Sync;
type PairFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Sampling-only chain on `f64` states defined by closures.
///
/// Splitting needs `r(x,y)`; without it only plain paths can be drawn.
#[derive(Clone)]
pub struct GenericChain {
    name: String,
    m: usize,
    delta: f64,
    step: Arc<StepFn>,
    small_set: Arc<SetFn>,
    nu: Arc<NuFn>,
    reference_state: f64,
    rn: Option<Arc<PairFn>>,
    m_step_density: Option<Arc<PairFn>>,
    nu_density: Option<Arc<DensityFn>>,
    pi_small_set: Option<f64>,
}

impl fmt::Debug for GenericChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericChain")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("delta", &self.delta)
            .field("has_rn", &self.rn.is_some())
            .field("has_density", &self.m_step_density.is_some())
            .finish()
    }
}

impl GenericChain {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        delta: f64,
        step: impl Fn(f64, &mut SimRng) -> f64 + Send + Sync + 'static,
        small_set: impl Fn(f64) -> bool + Send + Sync + 'static,
        nu: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
        reference_state: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("order m must be positive"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta {delta} outside (0,1]")));
        }
        Ok(Self {
            name: name.into(),
            m,
            delta,
            step: Arc::new(step),
            small_set: Arc::new(small_set),
            nu: Arc::new(nu),
            reference_state,
            rn: None,
            m_step_density: None,
            nu_density: None,
            pi_small_set: None,
        })
    }

    pub fn with_rn_derivative(mut self, r: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.rn = Some(Arc::new(r));
        self
    }

    /// `m`-step density and `ν` density against a common reference measure.
    pub fn with_densities(
        mut self,
        m_step: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        nu: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.m_step_density = Some(Arc::new(m_step));
        self.nu_density = Some(Arc::new(nu));
        self
    }

    pub fn with_pi_small_set(mut self, mass: f64) -> Self {
        self.pi_small_set = Some(mass);
        self
    }

    /// Minimum of `P^m(x,y)/ν(y)` over `x ∈ xs ∩ C` and `y ∈ ys` with `ν(y) > 0`.
    pub fn validate_minorization_sampled(
        &self,
        xs: &[f64],
        ys: &[f64],
    ) -> Result<SampledMinorizationReport> {
        let (Some(p), Some(nu)) = (&self.m_step_density, &self.nu_density) else {
            return Err(Error::invalid("generic chain has no density evaluator"));
        };
        let mut min_ratio = f64::INFINITY;
        let mut count = 0;
        for &x in xs.iter().filter(|&&x| (self.small_set)(x)) {
            for &y in ys {
                let v = nu(y);
                if v > 0.0 {
                    min_ratio = min_ratio.min(p(x, y) / v);
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(Error::invalid("grid has no point with x ∈ C and ν(y) > 0"));
        }
        Ok(SampledMinorizationReport {
            passed: min_ratio >= self.delta,
            min_ratio,
            delta: self.delta,
            grid_points: count,
        })
    }
}

impl SplitChain for GenericChain {
    type State = f64;

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> usize {
        self.m
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn in_small_set(&self, x: f64) -> bool {
        (self.small_set)(x)
    }

    fn step(&self, x: f64, rng: &mut SimRng) -> f64 {
        (self.step)(x, rng)
    }

    fn split_block(&self, x: f64, rng: &mut SimRng, path: &mut Vec<f64>) -> Result<bool> {
        let Some(r) = &self.rn else {
            return Err(Error::SplittingUnavailable(format!(
                "chain {} has no Radon derivative r(x,y)",
                self.name
            )));
        };
        let mut cur = x;
        for _ in 0..self.m {
            cur = (self.step)(cur, rng);
            path.push(cur);
        }
        if !(self.small_set)(x) {
            return Ok(false);
        }
        let p = r(x, cur).clamp(0.0, 1.0);
        Ok(rng.random::<f64>() < p)
    }

    fn sample_nu(&self, rng: &mut SimRng) -> f64 {
        (self.nu)(rng)
    }

    fn reference_state(&self) -> f64 {
        self.reference_state
    }

    fn small_set_stationary_mass(&self) -> Option<f64> {
        self.pi_small_set
    }
}
