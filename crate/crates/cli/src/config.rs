//! Run configuration: JSON file plus flag overrides (flags win).

use std::path::{Path, PathBuf};

use regen_bernstein::chain_models::{make_two_state, FiniteChain, FiniteChainSpec, SingularMod1Chain, UnitPoint};
use regen_bernstein::verify::Formula;
use regen_bernstein::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "REGEN_BERNSTEIN_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainConfig {
    TwoState {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        delta: f64,
    },
    SingularMod1 {
        #[serde(default = "default_bits")]
        bits: u32,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_bits() -> u32 {
    53
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionalConfig {
    Named(String),
    Table { table: Vec<f64> },
}

impl FunctionalConfig {
    /// `name` or `table:v0,v1,...`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.strip_prefix("table:") {
            Some(rest) => rest
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bad table value {v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()
                .map(|table| FunctionalConfig::Table { table }),
            None => Ok(FunctionalConfig::Named(s.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FunctionalConfig::Named(n) => n.clone(),
            FunctionalConfig::Table { .. } => "table".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InitConfig {
    Point,
    SmallMeasure,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chain: Option<ChainConfig>,
    pub f: Option<FunctionalConfig>,
    pub n: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub t_points: usize,
    pub replicas: u64,
    pub seed: Option<u64>,
    pub formulas: Vec<String>,
    pub out: Option<PathBuf>,
    pub exact: bool,
    pub init: InitConfig,
    /// Start state: index for finite chains, a point of `[0,1)` for the mod-1 chain.
    pub x0: f64,
    pub alpha: f64,
    pub safety: f64,
    pub z: f64,
    pub p_reg: f64,
    pub fit_replicas: u64,
    pub fit_excursions: usize,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chain: None,
            f: None,
            n: None,
            t_grid: None,
            t_points: 50,
            replicas: 100_000,
            seed: None,
            formulas: Formula::ALL.iter().map(|f| f.name().to_string()).collect(),
            out: None,
            exact: false,
            init: InitConfig::Point,
            x0: 0.0,
            alpha: 1.0,
            safety: 1.2,
            z: 3.0,
            p_reg: 2.0 / 3.0,
            fit_replicas: 20_000,
            fit_excursions: 20_000,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("malformed config {}: {e}", path.display())))
    }

    /// Flag, then config, then `REGEN_BERNSTEIN_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|e| Error::invalid(format!("{SEED_ENV}={v:?}: {e}"))),
            Err(_) => Ok(0),
        }
    }

    pub fn horizon(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::invalid("horizon n is required"))
    }

    pub fn formulas(&self) -> Result<Vec<Formula>> {
        self.formulas.iter().map(|f| Formula::parse(f)).collect()
    }

    pub fn build_chain(&self) -> Result<Chain> {
        match self.chain.as_ref().ok_or_else(|| Error::invalid("no chain given"))? {
            ChainConfig::TwoState { a, b, delta } => Ok(Chain::Finite(Box::new(make_two_state(*a, *b, *delta)?))),
            ChainConfig::SingularMod1 { bits } => Ok(Chain::Mod1(SingularMod1Chain::new(*bits)?)),
            ChainConfig::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::invalid(format!("cannot read chain {}: {e}", path.display())))?;
                let spec: FiniteChainSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::invalid(format!("malformed chain {}: {e}", path.display())))?;
                Ok(Chain::Finite(Box::new(FiniteChain::from_spec(&spec)?)))
            }
        }
    }

    /// `t_grid` when given, else `t_points` evenly spaced points on `[0, n‖f‖∞]`.
    pub fn grid(&self, n: usize, f_sup: f64) -> Result<Vec<f64>> {
        if let Some(g) = &self.t_grid {
            return Ok(g.clone());
        }
        if self.t_points < 2 {
            return Err(Error::invalid("t_points must be at least 2"));
        }
        let top = n as f64 * f_sup;
        let k = self.t_points - 1;
        Ok((0..=k).map(|i| top * i as f64 / k as f64).collect())
    }
}

pub enum Chain {
    Finite(Box<FiniteChain>),
    Mod1(SingularMod1Chain),
}

/// A functional resolved against a concrete chain.
pub struct FiniteFunctional {
    pub values: Vec<f64>,
    pub sup: f64,
}

pub fn finite_functional(chain: &FiniteChain, spec: &FunctionalConfig) -> Result<FiniteFunctional> {
    let pi = chain.stationary();
    let k = chain.len();
    let raw: Vec<f64> = match spec {
        FunctionalConfig::Named(n) if n == "indicator_centered" => (0..k).map(|i| f64::from(u8::from(i == k - 1))).collect(),
        FunctionalConfig::Named(n) if n == "identity_centered" => (0..k).map(|i| i as f64).collect(),
        FunctionalConfig::Named(n) => return Err(Error::invalid(format!("unknown functional {n:?} for a finite chain"))),
        FunctionalConfig::Table { table } if table.len() == k => table.clone(),
        FunctionalConfig::Table { table } => {
            return Err(Error::invalid(format!("table has {} values for {k} states", table.len())))
        }
    };
    let mean: f64 = raw.iter().zip(pi).map(|(v, p)| v * p).sum();
    let values: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(FiniteFunctional { values, sup })
}

/// Functionals on `[0,1)`, centered under the uniform law.
pub type Mod1Functional = fn(UnitPoint) -> f64;

/// Returns the functional and its sup norm.
pub fn mod1_functional(spec: &FunctionalConfig) -> Result<(Mod1Functional, f64)> {
    let FunctionalConfig::Named(name) = spec else {
        return Err(Error::invalid("tabulated functionals need a finite chain"));
    };
    match name.as_str() {
        "indicator_centered" => Ok((|x| if x.value() < 0.5 { 0.5 } else { -0.5 }, 0.5)),
        "identity_centered" => Ok((|x| x.value() - 0.5, 0.5)),
        "cosine" => Ok((|x| (std::f64::consts::TAU * x.value()).cos(), 1.0)),
        _ => Err(Error::invalid(format!("unknown functional {name:?} for the mod-1 chain"))),
    }
}

pub fn finite_start(chain: &FiniteChain, x0: f64) -> Result<usize> {
    if x0.fract() != 0.0 || x0 < 0.0 || x0 as usize >= chain.len() {
        return Err(Error::invalid(format!("x0 = {x0} is not a state index")));
    }
    Ok(x0 as usize)
}

pub fn mod1_start(x0: f64) -> Result<UnitPoint> {
    if !(0.0..1.0).contains(&x0) {
        return Err(Error::invalid(format!("x0 = {x0} outside [0,1)")));
    }
    Ok(UnitPoint::from_f64(x0))
}
