use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::theory::{
    brute_force_adversary, c_lambda, c_lambda_direct, c_lambda_minimum, lemma1_tradeoff_curve, optimal_adversary,
    optimal_discriminators, tradeoff_objective, tvd, AdversarySetup, DiscreteDist, TradeoffOptions,
    BRUTE_FORCE_MAX_OUTCOMES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoryOp {
    Adversary,
    CLambda,
    Discriminators,
    Tradeoff,
}

impl FromStr for TheoryOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adversary" => Ok(TheoryOp::Adversary),
            "c-lambda" => Ok(TheoryOp::CLambda),
            "discriminators" => Ok(TheoryOp::Discriminators),
            "tradeoff" => Ok(TheoryOp::Tradeoff),
            other => Err(Error::contract(format!(
                "unknown theory op `{other}` (expected adversary, c-lambda, discriminators or tradeoff)"
            ))),
        }
    }
}

impl TheoryOp {
    pub fn name(self) -> &'static str {
        match self {
            TheoryOp::Adversary => "adversary",
            TheoryOp::CLambda => "c-lambda",
            TheoryOp::Discriminators => "discriminators",
            TheoryOp::Tradeoff => "tradeoff",
        }
    }
}

/// Named numeric rows of a `name,v1,v2,…` file.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedRows(pub Vec<(String, Vec<f64>)>);

/// Parses `name,v1,v2,…` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_named_rows(text: &str) -> Result<NamedRows> {
    let mut rows = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut cells = body.split(',').map(str::trim);
        let name = cells.next().unwrap_or_default().to_string();
        if name.is_empty() {
            return Err(Error::Parse {
                offset: start,
                detail: "row without a name".into(),
            });
        }
        let values = cells
            .map(|c| {
                c.parse::<f64>().map_err(|e| Error::Parse {
                    offset: start,
                    detail: format!("row `{name}`: bad number `{c}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                offset: start,
                detail: format!("row `{name}` has no values"),
            });
        }
        rows.push((name, values));
    }
    Ok(NamedRows(rows))
}

impl NamedRows {
    fn get(&self, name: &str) -> Option<&[f64]> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    fn scalar(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some([v]) => Ok(*v),
            Some(v) => Err(Error::contract(format!(
                "`{name}` must hold one value, got {}",
                v.len()
            ))),
        }
    }

    fn dist(&self, name: &str) -> Result<DiscreteDist> {
        let v = self
            .get(name)
            .ok_or_else(|| Error::contract(format!("missing distribution row `{name}`")))?;
        to_dist(name, v)
    }

    /// Rows `<prefix>1`, `<prefix>2`, … in order, stopping at the first gap.
    fn family(&self, prefix: &str) -> Result<Vec<DiscreteDist>> {
        let mut out = Vec::new();
        while let Some(v) = self.get(&format!("{prefix}{}", out.len() + 1)) {
            out.push(to_dist(&format!("{prefix}{}", out.len() + 1), v)?);
        }
        Ok(out)
    }
}

/// Accepts rows summing to 1 within `1e-9` and renormalizes them exactly.
fn to_dist(name: &str, v: &[f64]) -> Result<DiscreteDist> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::contract(format!("row `{name}` sums to {sum}, not 1")));
    }
    DiscreteDist::from_weights(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleAgreement {
    pub oracle: &'static str,
    pub max_abs_diff: f64,
    pub tol: f64,
    pub agree: bool,
}

impl OracleAgreement {
    fn new(oracle: &'static str, max_abs_diff: f64, tol: f64) -> Self {
        Self {
            oracle,
            max_abs_diff,
            tol,
            agree: max_abs_diff <= tol,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoryOutput {
    pub op: &'static str,
    pub inputs: Value,
    pub outputs: Value,
    pub oracle_agreement: OracleAgreement,
}

fn probs(d: &[DiscreteDist]) -> Vec<&[f64]> {
    d.iter().map(DiscreteDist::probs).collect()
}

fn pairs(rows: &NamedRows) -> Result<(Vec<DiscreteDist>, Vec<DiscreteDist>)> {
    let p = rows.family("p")?;
    let g = rows.family("g")?;
    if p.len() < 2 || p.len() != g.len() {
        return Err(Error::contract(format!(
            "need rows p1..pN and g1..gN with N >= 2, got {} p rows and {} g rows",
            p.len(),
            g.len()
        )));
    }
    Ok((p, g))
}

/// Evaluates `op` on the rows and checks it against an independent route.
///
/// * `adversary`: rows `p`, `q`, optional `f` (default 0.5); oracle is exhaustive search.
/// * `c-lambda`: rows `p1..pN`, `g1..gN`, optional `lambda` (default 1); oracle is
///   direct summation of the value function at the optimal discriminators.
/// * `discriminators`: rows `p1..pN`, `g1..gN`; oracle is a pointwise check that each
///   value maximizes its local objective on a fine grid.
/// * `tradeoff`: rows `p1..pN` and `lambda` (one or more values); oracle compares each
///   optimum with the objective at `p_gᵢ = pᵢ` and at the pooled mixture.
pub fn evaluate(op: TheoryOp, rows: &NamedRows) -> Result<TheoryOutput> {
    match op {
        TheoryOp::Adversary => {
            let setup = AdversarySetup::new(rows.dist("p")?, rows.dist("q")?, rows.scalar("f", 0.5)?)?;
            if setup.p.len() > BRUTE_FORCE_MAX_OUTCOMES {
                return Err(Error::contract(format!(
                    "at most {BRUTE_FORCE_MAX_OUTCOMES} outcomes for the exhaustive check"
                )));
            }
            let closed = optimal_adversary(&setup);
            let brute = brute_force_adversary(&setup)?;
            Ok(TheoryOutput {
                op: op.name(),
                inputs: json!({ "p": setup.p.probs(), "q": setup.q.probs(), "f": setup.f }),
                outputs: json!({
                    "decision": closed.delta,
                    "expected_payoff": closed.expected_payoff,
                    "posterior": closed.posterior,
                    "tvd": tvd(&setup.p, &setup.q)?,
                    "brute_force_payoff": brute.expected_payoff,
                }),
                oracle_agreement: OracleAgreement::new(
                    "exhaustive search over all decision vectors",
                    (closed.expected_payoff - brute.expected_payoff).abs(),
                    1e-12,
                ),
            })
        }
        TheoryOp::CLambda => {
            let (p, g) = pairs(rows)?;
            let lambda = rows.scalar("lambda", 1.0)?;
            let closed = c_lambda(&p, &g, lambda)?;
            let direct = c_lambda_direct(&p, &g, lambda)?;
            Ok(TheoryOutput {
                op: op.name(),
                inputs: json!({ "p": probs(&p), "g": probs(&g), "lambda": lambda }),
                outputs: json!({
                    "c_lambda": closed,
                    "minimum": c_lambda_minimum(p.len(), lambda),
                    "direct": direct,
                }),
                oracle_agreement: OracleAgreement::new(
                    "direct summation at the optimal discriminators",
                    (closed - direct).abs(),
                    1e-9,
                ),
            })
        }
        TheoryOp::Discriminators => {
            let (p, g) = pairs(rows)?;
            let mut d_i = Vec::new();
            let mut d_p = Value::Null;
            let mut gap: f64 = 0.0;
            for (i, (pi, gi)) in p.iter().zip(&g).enumerate() {
                let opt = optimal_discriminators(pi, gi, &g)?;
                for (k, d) in opt.d_i.iter().enumerate() {
                    if let Some(d) = d {
                        gap = gap.max(grid_gap(pi.probs()[k], gi.probs()[k], *d));
                    }
                }
                d_i.push(opt.d_i);
                if i == 0 {
                    d_p = serde_json::to_value(&opt.d_p)?;
                }
            }
            Ok(TheoryOutput {
                op: op.name(),
                inputs: json!({ "p": probs(&p), "g": probs(&g) }),
                outputs: json!({ "d_i": d_i, "d_p": d_p }),
                oracle_agreement: OracleAgreement::new("pointwise grid search of a·log d + b·log(1 − d)", gap, 1e-12),
            })
        }
        TheoryOp::Tradeoff => {
            let p = rows.family("p")?;
            let lambdas = rows
                .get("lambda")
                .ok_or_else(|| Error::contract("missing row `lambda`"))?
                .to_vec();
            let curve = lemma1_tradeoff_curve(&p, &lambdas, &TradeoffOptions::default())?;
            let m = p.first().map_or(0, DiscreteDist::len);
            let pooled: Vec<f64> = (0..m)
                .map(|k| p.iter().map(|d| d.probs()[k]).sum::<f64>() / p.len() as f64)
                .collect();
            let pooled = vec![DiscreteDist::from_weights(&pooled)?; p.len()];
            let mut excess: f64 = 0.0;
            for pt in &curve.points {
                let bound = tradeoff_objective(&p, &p, pt.lambda)?.min(tradeoff_objective(&p, &pooled, pt.lambda)?);
                excess = excess.max(pt.objective - bound);
            }
            Ok(TheoryOutput {
                op: op.name(),
                inputs: json!({ "p": probs(&p), "lambda": lambdas }),
                outputs: serde_json::to_value(&curve)?,
                oracle_agreement: OracleAgreement::new(
                    "objective no larger than at the identity and pooled generators",
                    excess.max(0.0),
                    1e-12,
                ),
            })
        }
    }
}

/// How far `a·log d + b·log(1 − d)` falls below its best value on a grid of step `1e-4`.
fn grid_gap(a: f64, b: f64, d: f64) -> f64 {
    let f = |x: f64| {
        let mut v = 0.0;
        if a > 0.0 {
            v += a * x.ln();
        }
        if b > 0.0 {
            v += b * (1.0 - x).ln();
        }
        v
    };
    let at = f(d);
    let best = (1..10_000)
        .map(|k| f(k as f64 * 1e-4))
        .fold(f64::NEG_INFINITY, f64::max);
    (best - at).max(0.0)
}
