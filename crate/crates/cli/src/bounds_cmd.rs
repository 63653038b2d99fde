//! `bounds <formula> key=value ...`

use std::collections::BTreeMap;

use regen_bernstein::bounds::{
    self, bbi_constants, param_bounds_from_drift, BernsteinParams, BoundFlag, BoundValue, DriftBounds, DriftData,
};
use regen_bernstein::orlicz::{tail_conditional, tail_from_norm};
use regen_bernstein::{Error, Result};
use serde::Serialize;

pub const FORMULAS: &[(&str, &str)] = &[
    ("classical_bernstein", "n sigma2 M t [sup]"),
    ("psi1_bernstein", "n tau t"),
    ("iid_unbounded", "n c alpha sigma2 t"),
    ("random_sum", "l v alpha sigma2 a psi1_excess t"),
    ("one_dep_bounded", "n m_dep sigma_inf2 M t"),
    ("one_dep_sup", "n m_dep c alpha sigma_inf2 t"),
    ("one_dep_stopped", "n c alpha sigma_inf2 a (b | psi1_excess) t"),
    ("regen_count_tail", "n p d mean_gap"),
    ("thm_bi", "n t a b c d alpha sigma2 delta pi_c m"),
    ("thm_bi2", "n t a b c d alpha sigma2 delta pi_c m p"),
    ("thm_bbi", "n t sigma2 f_sup (K tau | delta pi_c D)"),
    ("thm_sbi", "n t sigma2 f_sup D delta pi_c"),
    ("tail_from_norm", "norm alpha t"),
    ("tail_conditional", "norm alpha t"),
    ("drift_geometric", "l k K V_x pi_exp_V_half delta alpha"),
    ("drift_subgeometric", "l k K V_x pi_V delta alpha beta sup_tau_norm pi_tau_norm"),
    ("drift_bounded", "D f_sup"),
];

#[derive(Serialize)]
pub struct BoundReport {
    pub formula: String,
    pub inputs: BTreeMap<String, f64>,
    pub raw: f64,
    pub value: f64,
    pub flags: Vec<BoundFlag>,
}

#[derive(Serialize)]
pub struct DriftReport {
    pub formula: String,
    pub inputs: BTreeMap<String, f64>,
    pub bounds: DriftBounds,
}

pub enum Evaluated {
    Bound(BoundReport),
    Drift(DriftReport),
}

struct Args {
    values: BTreeMap<String, f64>,
    used: Vec<String>,
}

impl Args {
    fn parse(items: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got {item:?}")))?;
            let v = match v {
                "true" => 1.0,
                "false" => 0.0,
                _ => v.parse::<f64>().map_err(|e| Error::invalid(format!("{k}: {e}")))?,
            };
            if values.insert(k.to_string(), v).is_some() {
                return Err(Error::invalid(format!("{k} given twice")));
            }
        }
        Ok(Self { values, used: Vec::new() })
    }

    fn get(&mut self, key: &str) -> Result<f64> {
        self.used.push(key.to_string());
        self.values.get(key).copied().ok_or_else(|| Error::invalid(format!("missing argument {key}")))
    }

    fn opt(&mut self, key: &str) -> Option<f64> {
        self.used.push(key.to_string());
        self.values.get(key).copied()
    }

    fn integer(&mut self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::invalid(format!("{key} = {v} must be a nonnegative integer")));
        }
        Ok(v as u64)
    }

    fn finish(self) -> Result<BTreeMap<String, f64>> {
        if let Some(k) = self.values.keys().find(|k| !self.used.contains(k)) {
            return Err(Error::invalid(format!("unexpected argument {k}")));
        }
        Ok(self.values)
    }
}

fn theorem_params(a: &mut Args) -> Result<BernsteinParams> {
    Ok(BernsteinParams {
        a: a.get("a")?,
        b: a.get("b")?,
        c: a.get("c")?,
        d: a.get("d")?,
        alpha: a.get("alpha")?,
        sigma2_mrv: a.get("sigma2")?,
        delta: a.get("delta")?,
        pi_c: a.get("pi_c")?,
        m: a.integer("m")? as usize,
        big_d: None,
        f_sup: None,
    })
}

pub fn evaluate(formula: &str, items: &[String]) -> Result<Evaluated> {
    let mut a = Args::parse(items)?;
    let value: BoundValue = match formula {
        "classical_bernstein" => {
            let sup = a.opt("sup").unwrap_or(0.0) != 0.0;
            bounds::classical_bernstein(a.get("n")?, a.get("sigma2")?, a.get("M")?, a.get("t")?, sup)?
        }
        "psi1_bernstein" => bounds::psi1_bernstein(a.get("n")?, a.get("tau")?, a.get("t")?)?,
        "iid_unbounded" => bounds::iid_unbounded(a.get("n")?, a.get("c")?, a.get("alpha")?, a.get("sigma2")?, a.get("t")?)?,
        "random_sum" => bounds::random_sum_bound(
            a.get("l")?,
            a.get("v")?,
            a.get("alpha")?,
            a.get("sigma2")?,
            a.get("a")?,
            a.get("psi1_excess")?,
            a.get("t")?,
        )?,
        "one_dep_bounded" => {
            let m_dep = a.integer("m_dep")? as u32;
            bounds::one_dep_bounded(a.get("n")?, m_dep, a.get("sigma_inf2")?, a.get("M")?, a.get("t")?)?
        }
        "one_dep_sup" => {
            let m_dep = a.integer("m_dep")? as u32;
            bounds::one_dep_sup(a.get("n")?, m_dep, a.get("c")?, a.get("alpha")?, a.get("sigma_inf2")?, a.get("t")?)?
        }
        "one_dep_stopped" => {
            let b = match (a.opt("b"), a.opt("psi1_excess")) {
                (Some(b), None) => b,
                (None, Some(e)) => bounds::stopped_b_factor(e),
                _ => return Err(Error::invalid("give exactly one of b and psi1_excess")),
            };
            bounds::one_dep_stopped(a.get("n")?, a.get("c")?, a.get("alpha")?, a.get("sigma_inf2")?, a.get("a")?, b, a.get("t")?)?
        }
        "regen_count_tail" => bounds::regen_count_tail(a.get("n")?, a.get("p")?, a.get("d")?, a.get("mean_gap")?)?,
        "thm_bi" => {
            let p = theorem_params(&mut a)?;
            bounds::thm_bi(&p, a.get("n")?, a.get("t")?)?
        }
        "thm_bi2" => {
            let p = theorem_params(&mut a)?;
            bounds::thm_bi2(&p, a.get("n")?, a.get("p")?, a.get("t")?)?
        }
        "thm_bbi" => {
            let (k, tau) = match (a.opt("K"), a.opt("tau")) {
                (Some(k), Some(tau)) => (k, tau),
                (None, None) => bbi_constants(a.get("delta")?, a.get("pi_c")?, a.get("D")?),
                _ => return Err(Error::invalid("give both K and tau, or delta, pi_c and D")),
            };
            bounds::thm_bbi(a.get("n")?, a.get("t")?, a.get("sigma2")?, a.get("f_sup")?, k, tau)?
        }
        "thm_sbi" => bounds::thm_sbi(
            a.get("n")?,
            a.get("t")?,
            a.get("sigma2")?,
            a.get("f_sup")?,
            a.get("D")?,
            a.get("delta")?,
            a.get("pi_c")?,
        )?,
        "tail_from_norm" => tail_from_norm(a.get("norm")?, a.get("alpha")?, a.get("t")?),
        "tail_conditional" => tail_conditional(a.get("norm")?, a.get("alpha")?, a.get("t")?),
        "drift_geometric" | "drift_subgeometric" | "drift_bounded" => {
            let data = match formula {
                "drift_geometric" => DriftData::MultiplicativeGeometric {
                    l: a.get("l")?,
                    k: a.get("k")?,
                    big_k: a.get("K")?,
                    v_x: a.get("V_x")?,
                    pi_exp_v_half: a.get("pi_exp_V_half")?,
                    delta: a.get("delta")?,
                    alpha: a.get("alpha")?,
                },
                "drift_subgeometric" => DriftData::Subgeometric {
                    l: a.get("l")?,
                    k: a.get("k")?,
                    big_k: a.get("K")?,
                    v_x: a.get("V_x")?,
                    pi_v: a.get("pi_V")?,
                    delta: a.get("delta")?,
                    alpha: a.get("alpha")?,
                    beta: a.get("beta")?,
                    sup_tau_norm: a.get("sup_tau_norm")?,
                    pi_tau_norm: a.get("pi_tau_norm")?,
                },
                _ => DriftData::Bounded { big_d: a.get("D")?, f_sup: a.get("f_sup")? },
            };
            let bounds = param_bounds_from_drift(&data)?;
            return Ok(Evaluated::Drift(DriftReport { formula: formula.to_string(), inputs: a.finish()?, bounds }));
        }
        _ => {
            let names: Vec<&str> = FORMULAS.iter().map(|(n, _)| *n).collect();
            return Err(Error::invalid(format!("unknown formula {formula:?}; known: {}", names.join(", "))));
        }
    };
    Ok(Evaluated::Bound(BoundReport {
        formula: formula.to_string(),
        inputs: a.finish()?,
        raw: value.raw,
        value: value.value,
        flags: value.flags,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn classical_example() {
        let Evaluated::Bound(r) = evaluate("classical_bernstein", &args("n=100 sigma2=1 M=1 t=10")).unwrap() else {
            panic!("expected a bound");
        };
        assert!((r.value - 0.616_392_731_327_227).abs() < 1e-12);
        assert_eq!(r.inputs.len(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(evaluate("nope", &[]).is_err());
        assert!(evaluate("psi1_bernstein", &args("n=1 tau=1")).is_err());
        assert!(evaluate("psi1_bernstein", &args("n=1 tau=1 t=1 extra=2")).is_err());
        assert!(evaluate("psi1_bernstein", &args("n=1 tau=1 t")).is_err());
    }

    #[test]
    fn drift_bounded() {
        let Evaluated::Drift(r) = evaluate("drift_bounded", &args("D=2 f_sup=1")).unwrap() else {
            panic!("expected drift bounds");
        };
        assert_eq!((r.bounds.a, r.bounds.b, r.bounds.c), (4.0, 4.0, 2.0));
    }
}
