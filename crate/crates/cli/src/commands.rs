//! Subcommand bodies. Each returns the files it would write, name and contents.

use regen_bernstein::bounds::BernsteinParams;
use regen_bernstein::chain_models::{FiniteChain, SplitChain, UnitPoint};
use regen_bernstein::replicas::{substream, SEED_DERIVATION};
use regen_bernstein::split_regen::{simulate_regenerations, simulate_split_covering, BlockDecomposition, InitTag, InitialLaw};
use regen_bernstein::variance::{
    sigma_inf_from_excursions, sigma_mrv_batch, sigma_mrv_exact, sigma_mrv_regenerative, VarianceEstimate, VarianceKind,
};
use regen_bernstein::verify::{
    check_block_structure, exact_regeneration_count_law, exact_tail, fit_parameters, mc_tail, FitConfig,
    TailCurve, VerificationReport, DEFAULT_MAX_LEN,
};
use regen_bernstein::{Error, Execution, Result};
use serde::Serialize;

use crate::config::{finite_functional, finite_start, mod1_functional, mod1_start, Chain, FunctionalConfig, InitConfig, RunConfig};

/// JSON and CSV renderings of one output.
pub struct Output {
    pub stem: &'static str,
    pub json: String,
    pub csv: String,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::invalid(format!("serialization failed: {e}")))
}

fn functional(cfg: &RunConfig) -> FunctionalConfig {
    cfg.f.clone().unwrap_or_else(|| FunctionalConfig::Named("indicator_centered".into()))
}

fn init_law<S>(init: InitConfig, x0: S) -> InitialLaw<S> {
    match init {
        InitConfig::Point => InitialLaw::Point(x0),
        InitConfig::SmallMeasure => InitialLaw::SmallMeasure,
        InitConfig::Stationary => InitialLaw::Stationary { burn_in: None },
    }
}

/// Resolved chain, functional and start, dispatched to a generic body.
trait Job {
    type Out;
    fn run<C: SplitChain>(self, ctx: Ctx<'_, C>) -> Result<Self::Out>;
}

struct Ctx<'a, C: SplitChain> {
    chain: &'a C,
    f: &'a (dyn Fn(C::State) -> f64 + Sync),
    f_sup: f64,
    x0: C::State,
    fmt_state: &'a dyn Fn(C::State) -> String,
    finite: Option<(&'a FiniteChain, &'a [f64])>,
}

fn dispatch<J: Job>(cfg: &RunConfig, job: J) -> Result<J::Out> {
    match cfg.build_chain()? {
        Chain::Finite(boxed) => {
            let chain = *boxed;
            let f = finite_functional(&chain, &functional(cfg))?;
            let x0 = finite_start(&chain, cfg.x0)?;
            let values = f.values.clone();
            let eval = move |x: usize| values[x];
            let labels = chain.kernel().labels().to_vec();
            let fmt = move |x: usize| labels[x].clone();
            job.run(Ctx {
                chain: &chain,
                f: &eval,
                f_sup: f.sup,
                x0,
                fmt_state: &fmt,
                finite: Some((&chain, &f.values)),
            })
        }
        Chain::Mod1(chain) => {
            let (f, f_sup) = mod1_functional(&functional(cfg))?;
            let fmt = |x: UnitPoint| format!("{}", x.value());
            job.run(Ctx { chain: &chain, f: &f, f_sup, x0: mod1_start(cfg.x0)?, fmt_state: &fmt, finite: None })
        }
    }
}

fn exec() -> Execution {
    Execution::Parallel
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateSummary {
    chain: String,
    functional: String,
    n: usize,
    m: usize,
    init: InitTag,
    trajectory_len: usize,
    regenerations: Option<usize>,
    regeneration_times: Vec<usize>,
    decomposition: BlockDecomposition,
    seed: u64,
    seed_derivation: &'static str,
}

struct Simulate<'a> {
    cfg: &'a RunConfig,
    seed: u64,
}

impl Job for Simulate<'_> {
    type Out = Vec<Output>;

    fn run<C: SplitChain>(self, ctx: Ctx<'_, C>) -> Result<Vec<Output>> {
        let n = self.cfg.horizon()?;
        let m = ctx.chain.order();
        if n < m || n % m != 0 {
            return Err(Error::NotMultipleOfOrder { n: n as u64, m });
        }
        let mut rng = substream(self.seed, 0);
        let init = init_law(self.cfg.init, ctx.x0);
        let traj = simulate_split_covering(ctx.chain, &init, n, DEFAULT_MAX_LEN, &mut rng)?;
        let decomposition = traj.block_decompose(ctx.f, n)?;
        let summary = SimulateSummary {
            chain: ctx.chain.name().to_string(),
            functional: functional(self.cfg).label(),
            n,
            m,
            init: traj.init(),
            trajectory_len: traj.len(),
            regenerations: traj.count_regenerations(n)?,
            regeneration_times: traj.regeneration_times().to_vec(),
            decomposition,
            seed: self.seed,
            seed_derivation: SEED_DERIVATION,
        };
        Ok(vec![Output { stem: "simulate", json: to_json(&summary)?, csv: traj.to_csv(ctx.fmt_state) }])
    }
}

pub fn simulate(cfg: &RunConfig, seed: u64) -> Result<Vec<Output>> {
    dispatch(cfg, Simulate { cfg, seed })
}

// ---------------------------------------------------------------------------
// variance

#[derive(Serialize)]
struct VarianceRow {
    kind: VarianceKind,
    value: f64,
    se: Option<f64>,
    n: usize,
}

impl From<VarianceEstimate> for VarianceRow {
    fn from(v: VarianceEstimate) -> Self {
        Self { kind: v.kind, value: v.value, se: v.se, n: v.samples }
    }
}

#[derive(Serialize)]
struct VarianceSummary {
    chain: String,
    functional: String,
    excursions: usize,
    mean_gap: f64,
    mean_gap_se: f64,
    estimates: Vec<VarianceRow>,
    seed: u64,
    seed_derivation: &'static str,
}

struct Variance<'a> {
    cfg: &'a RunConfig,
    seed: u64,
}

impl Job for Variance<'_> {
    type Out = Vec<Output>;

    fn run<C: SplitChain>(self, ctx: Ctx<'_, C>) -> Result<Vec<Output>> {
        let count = self.cfg.horizon()?;
        let mut rng = substream(self.seed, 0);
        let traj = simulate_regenerations(ctx.chain, &InitialLaw::SmallMeasure, count, DEFAULT_MAX_LEN, &mut rng)?;
        let ex = traj.excursions(ctx.f);
        let chi: Vec<f64> = ex.iter().map(|e| e.value).collect();
        let gaps: Vec<f64> = ex.iter().map(|e| e.gap as f64).collect();
        let mut estimates: Vec<VarianceRow> = Vec::new();
        if let Some((chain, f)) = ctx.finite {
            estimates.push(VarianceRow { kind: VarianceKind::MrvExact, value: sigma_mrv_exact(chain, f)?, se: None, n: 0 });
        }
        estimates.push(sigma_mrv_regenerative(&chi, &gaps)?.into());
        let path: Vec<f64> = traj.states().iter().map(|&s| (ctx.f)(s)).collect();
        let b = ((path.len() as f64).sqrt() as usize).max(1);
        estimates.push(sigma_mrv_batch(&path, b)?.into());
        estimates.push(sigma_inf_from_excursions(&chi)?.into());
        let summary = VarianceSummary {
            chain: ctx.chain.name().to_string(),
            functional: functional(self.cfg).label(),
            excursions: chi.len(),
            mean_gap: regen_bernstein::stats::mean(&gaps),
            mean_gap_se: regen_bernstein::stats::standard_error(&gaps),
            estimates,
            seed: self.seed,
            seed_derivation: SEED_DERIVATION,
        };
        let mut csv = String::from("kind,value,se,n\n");
        for r in &summary.estimates {
            let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let se = r.se.map(|s| s.to_string()).unwrap_or_default();
            csv.push_str(&format!("{kind},{},{se},{}\n", r.value, r.n));
        }
        Ok(vec![Output { stem: "variance", json: to_json(&summary)?, csv }])
    }
}

pub fn variance(cfg: &RunConfig, seed: u64) -> Result<Vec<Output>> {
    dispatch(cfg, Variance { cfg, seed })
}

// ---------------------------------------------------------------------------
// verify

struct Verify<'a> {
    cfg: &'a RunConfig,
    seed: u64,
}

impl Job for Verify<'_> {
    type Out = VerificationReport;

    fn run<C: SplitChain>(self, ctx: Ctx<'_, C>) -> Result<VerificationReport> {
        let cfg = self.cfg;
        let n = cfg.horizon()?;
        let grid = cfg.grid(n, ctx.f_sup)?;
        let formulas = cfg.formulas()?;
        let tail = match (cfg.exact, ctx.finite) {
            (true, Some((chain, f))) => {
                if cfg.init != InitConfig::Point {
                    return Err(Error::invalid("exact tails need a point start"));
                }
                let x0 = finite_start(chain, cfg.x0)?;
                exact_tail(chain, f, x0, n, &grid)?
            }
            (true, None) => return Err(Error::invalid("--exact needs a finite chain")),
            (false, _) => {
                let init = init_law(cfg.init, ctx.x0);
                mc_tail(ctx.chain, ctx.f, &init, n, &grid, cfg.replicas, self.seed, exec())?
            }
        };
        let fit_cfg = FitConfig {
            alpha: cfg.alpha,
            replicas: cfg.fit_replicas,
            excursions: cfg.fit_excursions,
            seed: self.seed,
            exec: exec(),
            safety: cfg.safety,
            max_len: DEFAULT_MAX_LEN,
        };
        let fitted = fit_parameters(ctx.chain, ctx.f, ctx.x0, &fit_cfg)?;
        let mut rng = substream(self.seed.wrapping_add(4), 0);
        let count = cfg.fit_excursions.max(1000);
        let traj = simulate_regenerations(ctx.chain, &InitialLaw::SmallMeasure, count, DEFAULT_MAX_LEN, &mut rng)?;
        let ex = traj.excursions(ctx.f);
        let chi: Vec<f64> = ex.iter().map(|e| e.value).collect();
        let gaps: Vec<f64> = ex.iter().map(|e| e.gap as f64).collect();
        let sigma2 = match ctx.finite {
            Some((chain, f)) => sigma_mrv_exact(chain, f)?,
            None => sigma_mrv_regenerative(&chi, &gaps)?.value.max(0.0) * cfg.safety,
        };
        let pi_c = ctx
            .chain
            .small_set_stationary_mass()
            .ok_or_else(|| Error::invalid("π(C) is unknown for this chain"))?;
        let params = BernsteinParams {
            a: fitted.a,
            b: fitted.b,
            c: fitted.c,
            d: fitted.d,
            alpha: cfg.alpha,
            sigma2_mrv: sigma2,
            delta: ctx.chain.delta(),
            pi_c,
            m: ctx.chain.order(),
            big_d: Some(fitted.big_d),
            f_sup: Some(ctx.f_sup),
        };
        let mut report = VerificationReport::assemble(
            ctx.chain.name(),
            &functional(cfg).label(),
            n,
            tail,
            params,
            &formulas,
            cfg.p_reg,
            cfg.z,
            self.seed,
        )?;
        report.fitted = Some(fitted);
        report.block_structure = Some(check_block_structure(&gaps, &chi, 5, 0.01)?);
        Ok(report)
    }
}

pub fn verify_report(cfg: &RunConfig, seed: u64) -> Result<VerificationReport> {
    dispatch(cfg, Verify { cfg, seed })
}

pub fn verify(cfg: &RunConfig, seed: u64) -> Result<Vec<Output>> {
    let report = verify_report(cfg, seed)?;
    Ok(vec![Output { stem: "report", json: to_json(&report)?, csv: report.to_csv() }])
}

// ---------------------------------------------------------------------------
// oracle

#[derive(Serialize)]
struct OracleSummary {
    chain: String,
    functional: String,
    n: usize,
    x0: usize,
    tail: TailCurve,
    regeneration_count_law: Vec<f64>,
}

pub fn oracle(cfg: &RunConfig) -> Result<Vec<Output>> {
    let Chain::Finite(chain) = cfg.build_chain()? else {
        return Err(Error::invalid("oracle needs a finite chain"));
    };
    let f = finite_functional(&chain, &functional(cfg))?;
    let x0 = finite_start(&chain, cfg.x0)?;
    let n = cfg.horizon()?;
    let grid = cfg.grid(n, f.sup)?;
    let tail = exact_tail(&chain, &f.values, x0, n, &grid)?;
    let law = exact_regeneration_count_law(&chain, x0, n)?;
    let mut csv = String::from("t,probability\n");
    for (t, p) in tail.t.iter().zip(&tail.prob) {
        csv.push_str(&format!("{t},{p}\n"));
    }
    let summary = OracleSummary {
        chain: chain.name().to_string(),
        functional: functional(cfg).label(),
        n,
        x0,
        tail,
        regeneration_count_law: law,
    };
    Ok(vec![Output { stem: "oracle", json: to_json(&summary)?, csv }])
}
