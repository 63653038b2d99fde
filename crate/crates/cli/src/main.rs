//! `regen-bernstein`: simulate split chains, evaluate bounds, estimate
//! variances and run domination checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bounds_cmd;
mod commands;
mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regen_bernstein::replicas::with_threads;
use regen_bernstein::{Error, Result};

use crate::bounds_cmd::Evaluated;
use crate::commands::{to_json, Output};
use crate::config::{ChainConfig, FunctionalConfig, InitConfig, RunConfig};

#[derive(Parser)]
#[command(name = "regen-bernstein", version, about = "Regenerative split-chain simulation and Bernstein-type tail bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one split-chain trajectory and its block decomposition.
    Simulate(RunArgs),
    /// Evaluate a named bound from key=value arguments.
    Bounds(BoundsArgs),
    /// Estimate asymptotic variances from regeneration cycles.
    Variance(RunArgs),
    /// Compare tail probabilities against the theorem bounds.
    Verify(RunArgs),
    /// Exact tails and regeneration-count law of a finite chain.
    Oracle(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (falls back to REGEN_BERNSTEIN_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChainName {
    TwoState,
    SingularMod1,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    chain: Option<ChainName>,
    /// Finite chain definition (JSON).
    #[arg(long, conflicts_with = "chain")]
    chain_file: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed-point precision of the mod-1 chain.
    #[arg(long)]
    bits: Option<u32>,
    /// Functional: indicator_centered, identity_centered, cosine or table:v0,v1,...
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated t values.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    t_points: Option<usize>,
    /// Exact tails by enumeration (finite chains).
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum)]
    init: Option<InitConfig>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    safety: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    p_reg: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    formulas: Option<Vec<String>>,
    #[arg(long)]
    fit_replicas: Option<u64>,
    #[arg(long)]
    fit_excursions: Option<usize>,
}

#[derive(Args, Clone)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    formula: String,
    /// key=value arguments.
    args: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.chain_file {
            cfg.chain = Some(ChainConfig::File { path: path.clone() });
        }
        match self.chain {
            Some(ChainName::TwoState) => {
                let (a0, b0, d0) = match cfg.chain {
                    Some(ChainConfig::TwoState { a, b, delta }) => (a, b, delta),
                    _ => (0.5, 0.5, 1.0),
                };
                cfg.chain = Some(ChainConfig::TwoState { a: a0, b: b0, delta: d0 });
            }
            Some(ChainName::SingularMod1) => {
                let bits = match cfg.chain {
                    Some(ChainConfig::SingularMod1 { bits }) => bits,
                    _ => 53,
                };
                cfg.chain = Some(ChainConfig::SingularMod1 { bits });
            }
            None => {}
        }
        match &mut cfg.chain {
            Some(ChainConfig::TwoState { a, b, delta }) => {
                *a = self.a.unwrap_or(*a);
                *b = self.b.unwrap_or(*b);
                *delta = self.delta.unwrap_or(*delta);
            }
            Some(ChainConfig::SingularMod1 { bits }) => *bits = self.bits.unwrap_or(*bits),
            _ => {}
        }
        let two_state_only = self.a.is_some() || self.b.is_some() || self.delta.is_some();
        if two_state_only && !matches!(cfg.chain, Some(ChainConfig::TwoState { .. })) {
            return Err(Error::invalid("--a, --b and --delta apply to the two-state chain only"));
        }
        if self.bits.is_some() && !matches!(cfg.chain, Some(ChainConfig::SingularMod1 { .. })) {
            return Err(Error::invalid("--bits applies to the mod-1 chain only"));
        }
        if let Some(f) = &self.f {
            cfg.f = Some(FunctionalConfig::parse(f)?);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        set!(t_points, init, x0, alpha, safety, z, p_reg, formulas, fit_replicas, fit_excursions);
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if let Some(g) = &self.t_grid {
            cfg.t_grid = Some(g.clone());
        }
        if let Some(r) = self.common.replicas {
            cfg.replicas = r;
        }
        if let Some(t) = self.common.threads {
            cfg.threads = Some(t);
        }
        if let Some(o) = &self.common.out {
            cfg.out = Some(o.clone());
        }
        cfg.exact |= self.exact;
        Ok(cfg)
    }
}

/// Writes `contents` to `dir/name` through a temporary file in the same directory.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid(format!("cannot write {}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(outputs: &[Output], out: Option<&Path>, format: Format) -> Result<()> {
    match out {
        Some(dir) => {
            for o in outputs {
                write_atomic(dir, &format!("{}.json", o.stem), &o.json)?;
                write_atomic(dir, &format!("{}.csv", o.stem), &o.csv)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for o in outputs {
                let text = if format == Format::Csv { &o.csv } else { &o.json };
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::invalid(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}

fn run_with(args: &RunArgs, body: fn(&RunConfig, u64) -> Result<Vec<Output>>) -> Result<()> {
    let cfg = args.resolve()?;
    let seed = cfg.resolve_seed(args.common.seed)?;
    let outputs = match cfg.threads {
        Some(0) => return Err(Error::invalid("--threads must be positive")),
        Some(t) => with_threads(t, || body(&cfg, seed))?,
        None => body(&cfg, seed)?,
    };
    emit(&outputs, cfg.out.as_deref(), args.common.format)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => run_with(a, commands::simulate),
        Command::Variance(a) => run_with(a, commands::variance),
        Command::Verify(a) => run_with(a, commands::verify),
        Command::Oracle(a) => run_with(a, |cfg, _| commands::oracle(cfg)),
        Command::Bounds(b) => {
            let (json, csv) = match bounds_cmd::evaluate(&b.formula, &b.args)? {
                Evaluated::Bound(r) => {
                    let flags: Vec<String> = r
                        .flags
                        .iter()
                        .filter_map(|f| serde_json::to_value(f).ok()?.as_str().map(str::to_string))
                        .collect();
                    let csv = format!("formula,raw,value,flags\n{},{},{},{}\n", r.formula, r.raw, r.value, flags.join(";"));
                    (to_json(&r)?, csv)
                }
                Evaluated::Drift(r) => {
                    let csv = format!("formula,a,b,c\n{},{},{},{}\n", r.formula, r.bounds.a, r.bounds.b, r.bounds.c);
                    (to_json(&r)?, csv)
                }
            };
            emit(&[Output { stem: "bounds", json, csv }], b.common.out.as_deref(), b.common.format)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::GuardExceeded(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
