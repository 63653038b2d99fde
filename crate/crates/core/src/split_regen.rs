//! Split-chain simulation, regeneration times, blocks, excursions and the
//! head/middle/tail decomposition of additive functionals.
//!
//! Blocks use the convention `σ_{-1} = -m`, so `Ξ_i` spans the indices
//! `σ_{i-1}+m .. σ_i+m-1` for every `i ≥ 0`. The excursion `χ_i` sums `f` over
//! `Ξ_{i+1}`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::chain_models::{FiniteMinorization, SplitChain};
use crate::error::{Error, Result};
use crate::replicas::SimRng;

/// Burn-in per unit of `m` used when no exact stationary sampler exists.
pub const DEFAULT_BURN_IN_PER_ORDER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw<S> {
    Point(S),
    /// Start from the small measure `ν`.
    SmallMeasure,
    /// Exact `π` draw when the chain supports it, else a burn-in from the
    /// reference state. An explicit burn-in always forces the burn-in path.
    Stationary { burn_in: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitTag {
    Point,
    SmallMeasure,
    StationaryExact,
    StationaryApprox { burn_in: usize },
}

/// Draws `Υ_0` according to `init`.
pub fn draw_initial<C: SplitChain>(
    chain: &C,
    init: &InitialLaw<C::State>,
    rng: &mut SimRng,
) -> (C::State, InitTag) {
    match *init {
        InitialLaw::Point(x) => (x, InitTag::Point),
        InitialLaw::SmallMeasure => (chain.sample_nu(rng), InitTag::SmallMeasure),
        InitialLaw::Stationary { burn_in } => {
            if burn_in.is_none() {
                if let Some(x) = chain.sample_stationary(rng) {
                    return (x, InitTag::StationaryExact);
                }
            }
            let steps = burn_in.unwrap_or(DEFAULT_BURN_IN_PER_ORDER * chain.order());
            let mut x = chain.reference_state();
            for _ in 0..steps {
                x = chain.step(x, rng);
            }
            (x, InitTag::StationaryApprox { burn_in: steps })
        }
    }
}

/// One realization of the split chain `(Υ_i, Y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTrajectory<S> {
    states: Vec<S>,
    levels: Vec<bool>,
    m: usize,
    sigma: Vec<usize>,
    init: InitTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub index: usize,
    pub start: usize,
    /// Exclusive end.
    pub end: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Excursion {
    pub index: usize,
    pub value: f64,
    pub gap: usize,
}

/// Signed and absolute head/middle/tail parts of `Σ_{i<n} f(Υ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockDecomposition {
    pub n: usize,
    /// `N = inf{i ≥ 0 : σ_i + m − 1 ≥ n − 1}`.
    pub regenerations: usize,
    pub sigma_n: Option<usize>,
    pub head_signed: f64,
    pub middle_signed: f64,
    pub tail_signed: f64,
    pub head: f64,
    pub middle: f64,
    pub tail: f64,
    pub direct_sum: f64,
    /// `Σ_{i<n} |f(Υ_i)|`, the scale for the reconstruction tolerance.
    pub abs_sum: f64,
}

impl BlockDecomposition {
    pub fn reconstruct(&self) -> f64 {
        self.head_signed + self.middle_signed - self.tail_signed
    }

    /// Whether the reconstruction matches the direct sum to `rel` relative error.
    pub fn identity_holds(&self, rel: f64) -> bool {
        (self.reconstruct() - self.direct_sum).abs() <= rel * self.abs_sum.max(1.0)
    }
}

impl<S: Copy> SplitTrajectory<S> {
    /// Assembles a trajectory from recorded states and levels.
    pub fn from_parts(states: Vec<S>, levels: Vec<bool>, m: usize, init: InitTag) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("order m must be positive"));
        }
        if states.len() != levels.len() {
            return Err(Error::invalid(format!(
                "{} states but {} levels",
                states.len(),
                levels.len()
            )));
        }
        if let Some(i) = (0..levels.len()).find(|&i| levels[i] != levels[i - i % m]) {
            return Err(Error::invalid(format!("level changes inside the block at index {i}")));
        }
        let sigma = (0..levels.len()).step_by(m).filter(|&k| levels[k]).collect();
        Ok(Self { states, levels, m, sigma, init })
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn levels(&self) -> &[bool] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn init(&self) -> InitTag {
        self.init
    }

    /// `σ_0 < σ_1 < ...`, all multiples of `m` with `Y_σ = 1`.
    pub fn regeneration_times(&self) -> &[usize] {
        &self.sigma
    }

    /// Complete blocks `Ξ_0, Ξ_1, ...` fully contained in the trajectory.
    pub fn blocks(&self) -> Vec<Block> {
        let m = self.m;
        let mut out = Vec::with_capacity(self.sigma.len());
        let mut start = 0;
        for (i, &s) in self.sigma.iter().enumerate() {
            let end = s + m;
            if end > self.len() {
                break;
            }
            out.push(Block { index: i, start, end });
            start = end;
        }
        out
    }

    pub fn block_states(&self, block: &Block) -> &[S] {
        &self.states[block.start..block.end]
    }

    pub fn gaps(&self) -> Vec<usize> {
        self.sigma.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Complete excursions `χ_0, χ_1, ...`.
    pub fn excursions(&self, f: impl Fn(S) -> f64) -> Vec<Excursion> {
        let m = self.m;
        self.sigma
            .windows(2)
            .enumerate()
            .take_while(|(_, w)| w[1] + m <= self.len())
            .map(|(i, w)| Excursion {
                index: i,
                value: self.states[w[0] + m..w[1] + m].iter().map(|&s| f(s)).sum(),
                gap: w[1] - w[0],
            })
            .collect()
    }

    fn check_horizon(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("horizon n must be positive"));
        }
        if n > self.len() {
            return Err(Error::TrajectoryTooShort(format!(
                "horizon {n} exceeds trajectory length {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// `N` for horizon `n`, or `None` when the run has no regeneration at all.
    pub fn count_regenerations(&self, n: usize) -> Result<Option<usize>> {
        self.check_horizon(n)?;
        if self.sigma.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.regenerations_before(n)))
    }

    fn regenerations_before(&self, n: usize) -> usize {
        // σ_i + m − 1 < n − 1  ⟺  σ_i + m < n
        self.sigma.partition_point(|&s| s + self.m < n)
    }

    /// Splits `Σ_{i<n} f(Υ_i)` into head, middle and tail.
    pub fn block_decompose(&self, f: impl Fn(S) -> f64, n: usize) -> Result<BlockDecomposition> {
        if !n.is_multiple_of(self.m) {
            return Err(Error::NotMultipleOfOrder { n: n as u64, m: self.m });
        }
        self.check_horizon(n)?;
        let m = self.m;
        let big_n = self.regenerations_before(n);
        let end = if big_n == 0 {
            n
        } else {
            match self.sigma.get(big_n) {
                Some(&s) if s + m <= self.len() => s + m,
                _ => {
                    return Err(Error::TrajectoryTooShort(format!(
                        "trajectory does not cover σ_N + m − 1 for N = {big_n}"
                    )))
                }
            }
        };
        let values: Vec<f64> = self.states[..end.max(n)].iter().map(|&s| f(s)).collect();
        let sum = |a: usize, b: usize| values[a..b].iter().sum::<f64>();
        let direct_sum = sum(0, n);
        let abs_sum = values[..n].iter().map(|v| v.abs()).sum();
        let (head, middle, tail, sigma_n) = if big_n == 0 {
            (direct_sum, 0.0, 0.0, None)
        } else {
            let first = self.sigma[0] + m;
            (sum(0, first), sum(first, end), sum(n, end), Some(self.sigma[big_n]))
        };
        Ok(BlockDecomposition {
            n,
            regenerations: big_n,
            sigma_n,
            head_signed: head,
            middle_signed: middle,
            tail_signed: tail,
            head: head.abs(),
            middle: middle.abs(),
            tail: tail.abs(),
            direct_sum,
            abs_sum,
        })
    }

    /// Columnar dump `index,state,level,is_regeneration`.
    pub fn to_csv(&self, fmt_state: impl Fn(S) -> String) -> String {
        let mut out = String::from("index,state,level,is_regeneration\n");
        for (i, (&s, &y)) in self.states.iter().zip(&self.levels).enumerate() {
            let regen = y && i % self.m == 0;
            let _ = writeln!(out, "{i},{},{},{}", fmt_state(s), u8::from(y), u8::from(regen));
        }
        out
    }
}

struct Builder<S> {
    states: Vec<S>,
    levels: Vec<bool>,
    sigma: Vec<usize>,
    buf: Vec<S>,
    m: usize,
}

impl<S: Copy> Builder<S> {
    fn new(x0: S, m: usize) -> Self {
        Self { states: vec![x0], levels: Vec::new(), sigma: Vec::new(), buf: Vec::with_capacity(m), m }
    }

    fn push_block<C: SplitChain<State = S>>(&mut self, chain: &C, rng: &mut SimRng) -> Result<()> {
        let x = *self.states.last().expect("builder always holds the next block start");
        self.buf.clear();
        let level = chain.split_block(x, rng, &mut self.buf)?;
        if level {
            self.sigma.push(self.levels.len());
        }
        self.levels.extend(std::iter::repeat_n(level, self.m));
        self.states.extend_from_slice(&self.buf);
        Ok(())
    }

    fn finish(mut self, keep: usize, init: InitTag) -> SplitTrajectory<S> {
        let keep = keep.min(self.levels.len());
        self.states.truncate(keep);
        self.levels.truncate(keep);
        let m = self.m;
        self.sigma.retain(|&s| s < keep);
        SplitTrajectory { states: self.states, levels: self.levels, m, sigma: self.sigma, init }
    }
}

fn start<C: SplitChain>(
    chain: &C,
    init: &InitialLaw<C::State>,
    n: usize,
    rng: &mut SimRng,
) -> Result<(Builder<C::State>, InitTag)> {
    let m = chain.order();
    if n < m {
        return Err(Error::invalid(format!("n = {n} is below the block length m = {m}")));
    }
    let (x0, tag) = draw_initial(chain, init, rng);
    Ok((Builder::new(x0, m), tag))
}

/// Simulates `n` steps of the split chain, block by block (path first, then level).
pub fn simulate_split<C: SplitChain>(
    chain: &C,
    init: &InitialLaw<C::State>,
    n: usize,
    rng: &mut SimRng,
) -> Result<SplitTrajectory<C::State>> {
    let (mut b, tag) = start(chain, init, n, rng)?;
    while b.levels.len() < n {
        b.push_block(chain, rng)?;
    }
    Ok(b.finish(n, tag))
}

/// Simulates at least `n` steps and keeps going until `σ_N + m − 1` is covered,
/// so that the block decomposition at horizon `n` is computable.
pub fn simulate_split_covering<C: SplitChain>(
    chain: &C,
    init: &InitialLaw<C::State>,
    n: usize,
    max_len: usize,
    rng: &mut SimRng,
) -> Result<SplitTrajectory<C::State>> {
    let (mut b, tag) = start(chain, init, n, rng)?;
    let m = chain.order();
    while b.levels.len() < n {
        b.push_block(chain, rng)?;
    }
    let big_n = b.sigma.partition_point(|&s| s + m < n);
    while big_n > 0 && b.sigma.len() <= big_n {
        if b.levels.len() >= max_len {
            return Err(Error::GuardExceeded(format!(
                "no regeneration after {max_len} steps while covering σ_N"
            )));
        }
        b.push_block(chain, rng)?;
    }
    let keep = b.levels.len();
    Ok(b.finish(keep, tag))
}

/// Simulates until `count` complete excursions are available.
pub fn simulate_regenerations<C: SplitChain>(
    chain: &C,
    init: &InitialLaw<C::State>,
    count: usize,
    max_len: usize,
    rng: &mut SimRng,
) -> Result<SplitTrajectory<C::State>> {
    let (mut b, tag) = start(chain, init, chain.order(), rng)?;
    while b.sigma.len() < count + 1 {
        if b.levels.len() >= max_len {
            return Err(Error::GuardExceeded(format!(
                "only {} regenerations after {max_len} steps",
                b.sigma.len()
            )));
        }
        b.push_block(chain, rng)?;
    }
    let keep = b.levels.len();
    Ok(b.finish(keep, tag))
}

/// Runs from `ν` until the first regeneration and returns
/// `(Σ_{i=0}^{σ_0/m} G(Υ_{mi}, Y_{mi}), σ_0)`.
pub fn first_cycle_sum<C: SplitChain>(
    chain: &C,
    g: impl Fn(C::State, bool) -> f64,
    max_blocks: usize,
    rng: &mut SimRng,
) -> Result<(f64, usize)> {
    let m = chain.order();
    let mut x = chain.sample_nu(rng);
    let mut buf = Vec::with_capacity(m);
    let mut total = 0.0;
    for k in 0..max_blocks {
        buf.clear();
        let level = chain.split_block(x, rng, &mut buf)?;
        total += g(x, level);
        if level {
            return Ok((total, k * m));
        }
        x = *buf.last().expect("blocks have m ≥ 1 states");
    }
    Err(Error::GuardExceeded(format!("no regeneration within {max_blocks} blocks")))
}

/// Split measure `μ*` on `states × {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitMeasure {
    pub level0: Vec<f64>,
    pub level1: Vec<f64>,
}

impl SplitMeasure {
    pub fn total_mass(&self) -> f64 {
        self.level0.iter().chain(&self.level1).sum()
    }
}

/// `μ*(A×{1}) = δμ(C∩A)`, `μ*(A×{0}) = (1−δ)μ(C∩A) + μ(A∖C)`.
pub fn split_measure(mu: &[f64], spec: &FiniteMinorization) -> Result<SplitMeasure> {
    if mu.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("μ has a negative or non-finite entry"));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("μ sums to {total}")));
    }
    if !(spec.delta > 0.0 && spec.delta <= 1.0) {
        return Err(Error::invalid(format!("delta {} outside (0,1]", spec.delta)));
    }
    let mut in_c = vec![false; mu.len()];
    for &x in &spec.small_set {
        *in_c
            .get_mut(x)
            .ok_or_else(|| Error::invalid(format!("small-set state {x} out of range")))? = true;
    }
    let level1 = mu.iter().zip(&in_c).map(|(p, &c)| if c { spec.delta * p } else { 0.0 }).collect();
    let level0 = mu
        .iter()
        .zip(&in_c)
        .map(|(p, &c)| if c { (1.0 - spec.delta) * p } else { *p })
        .collect();
    Ok(SplitMeasure { level0, level1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_models::{make_two_state, SingularMod1Chain, UnitPoint};
    use crate::replicas::substream;
    use approx::assert_abs_diff_eq;

    fn f_ind(x: usize) -> f64 {
        if x == 1 {
            0.5
        } else {
            -0.5
        }
    }

    #[test]
    fn atom_levels_match_state() {
        let c = make_two_state(0.5, 0.5, 1.0).unwrap();
        let t = simulate_split(&c, &InitialLaw::Point(1), 1000, &mut substream(1, 0)).unwrap();
        assert_eq!(t.len(), 1000);
        for (s, y) in t.states().iter().zip(t.levels()) {
            assert_eq!(*y, *s == 0);
        }
    }

    #[test]
    fn levels_constant_within_blocks() {
        let c = SingularMod1Chain::new(64).unwrap();
        let t = simulate_split(&c, &InitialLaw::Point(UnitPoint(0)), 1001, &mut substream(2, 0)).unwrap();
        assert_eq!(t.len(), 1001);
        for i in 0..t.len() {
            assert_eq!(t.levels()[i], t.levels()[i - i % 2]);
        }
        assert!(t.regeneration_times().iter().all(|s| s % 2 == 0 && t.levels()[*s]));
    }

    #[test]
    fn short_horizon_rejected() {
        let c = SingularMod1Chain::new(64).unwrap();
        assert!(simulate_split(&c, &InitialLaw::SmallMeasure, 1, &mut substream(0, 0)).is_err());
    }

    #[test]
    fn hand_trajectory_decomposition() {
        // States (1,1,0,1) with σ_0 = 2, extended by one step so that σ_1 = 4 is observed.
        let states = vec![1, 1, 0, 1, 0];
        let levels: Vec<bool> = states.iter().map(|&s| s == 0).collect();
        let t = SplitTrajectory::from_parts(states, levels, 1, InitTag::Point).unwrap();
        assert_eq!(t.regeneration_times(), &[2, 4]);
        assert_eq!(t.count_regenerations(4).unwrap(), Some(1));
        let d = t.block_decompose(f_ind, 4).unwrap();
        assert_eq!(d.regenerations, 1);
        assert_eq!(d.head_signed, 0.5);
        assert_eq!(d.middle_signed, t.excursions(f_ind)[0].value);
        assert_eq!(d.middle_signed, 0.0);
        assert_eq!(d.tail_signed, -0.5);
        assert_eq!(d.reconstruct(), 1.0);
        assert_eq!(d.direct_sum, 1.0);
    }

    #[test]
    fn decomposition_without_regeneration() {
        let states = vec![1, 1, 1, 1];
        let levels = vec![false; 4];
        let t = SplitTrajectory::from_parts(states, levels, 2, InitTag::Point).unwrap();
        assert_eq!(t.count_regenerations(4).unwrap(), None);
        let d = t.block_decompose(f_ind, 4).unwrap();
        assert_eq!((d.regenerations, d.middle, d.tail), (0, 0.0, 0.0));
        assert_eq!(d.head, 2.0);
        assert!(matches!(t.block_decompose(f_ind, 3), Err(Error::NotMultipleOfOrder { .. })));
        assert!(matches!(t.count_regenerations(5), Err(Error::TrajectoryTooShort(_))));
    }

    #[test]
    fn uncovered_tail_is_reported() {
        let states = vec![0, 1, 1, 1];
        let levels = vec![true, false, false, false];
        let t = SplitTrajectory::from_parts(states, levels, 1, InitTag::Point).unwrap();
        assert!(matches!(t.block_decompose(f_ind, 4), Err(Error::TrajectoryTooShort(_))));
    }

    #[test]
    fn from_parts_rejects_broken_blocks() {
        let r = SplitTrajectory::from_parts(vec![0, 0], vec![true, false], 2, InitTag::Point);
        assert!(r.is_err());
    }

    #[test]
    fn blocks_partition_prefix() {
        let c = make_two_state(0.3, 0.4, 0.5).unwrap();
        let t = simulate_regenerations(&c, &InitialLaw::Point(1), 50, 1 << 20, &mut substream(3, 0)).unwrap();
        let blocks = t.blocks();
        assert_eq!(blocks[0].start, 0);
        for w in blocks.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        let last = t.regeneration_times()[blocks.len() - 1];
        assert_eq!(blocks.last().unwrap().end, last + 1);
        let ex = t.excursions(|_| 1.0);
        assert!(ex.len() >= 50);
        for (e, b) in ex.iter().zip(&blocks[1..]) {
            assert_eq!(e.value as usize, b.len());
            assert_eq!(e.gap, b.len());
        }
    }

    #[test]
    fn covering_run_decomposes() {
        let c = SingularMod1Chain::new(64).unwrap();
        for i in 0..200 {
            let t = simulate_split_covering(&c, &InitialLaw::SmallMeasure, 20, 1 << 20, &mut substream(4, i)).unwrap();
            let d = t.block_decompose(|x| (x.value() * std::f64::consts::TAU).cos(), 20).unwrap();
            assert!(d.identity_holds(1e-10));
        }
    }

    #[test]
    fn first_cycle_level_indicator_is_one() {
        let c = make_two_state(0.5, 0.5, 0.5).unwrap();
        let mut rng = substream(5, 0);
        for _ in 0..100 {
            let (v, _) = first_cycle_sum(&c, |_, y| f64::from(u8::from(y)), 1 << 20, &mut rng).unwrap();
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn split_measure_examples() {
        let spec = FiniteMinorization { small_set: vec![0], m: 1, delta: 0.5, nu: vec![0.5, 0.5] };
        let s = split_measure(&[0.5, 0.5], &spec).unwrap();
        assert_abs_diff_eq!(s.level1[0], 0.25);
        assert_abs_diff_eq!(s.total_mass(), 1.0);
        let s = split_measure(&[0.0, 1.0], &spec).unwrap();
        assert_eq!(s.level1.iter().sum::<f64>(), 0.0);
        let whole = FiniteMinorization { small_set: vec![0, 1], m: 1, delta: 1.0, nu: vec![0.5, 0.5] };
        let s = split_measure(&[0.3, 0.7], &whole).unwrap();
        assert_eq!(s.level1, vec![0.3, 0.7]);
        assert_eq!(s.level0.iter().sum::<f64>(), 0.0);
        assert!(split_measure(&[0.3, 0.3], &spec).is_err());
    }

    #[test]
    fn csv_dump_marks_regenerations() {
        let t = SplitTrajectory::from_parts(vec![0, 1, 0, 0], vec![true, true, false, false], 2, InitTag::Point).unwrap();
        let csv = t.to_csv(|s| s.to_string());
        assert_eq!(csv, "index,state,level,is_regeneration\n0,0,1,1\n1,1,1,0\n2,0,0,0\n3,0,0,0\n");
    }

    #[test]
    fn burn_in_is_labeled() {
        let c = SingularMod1Chain::new(64).unwrap();
        let (_, tag) = draw_initial(&c, &InitialLaw::Stationary { burn_in: None }, &mut substream(0, 0));
        assert_eq!(tag, InitTag::StationaryExact);
        let (_, tag) = draw_initial(&c, &InitialLaw::Stationary { burn_in: Some(10) }, &mut substream(0, 0));
        assert_eq!(tag, InitTag::StationaryApprox { burn_in: 10 });
    }
}
