//! Optimal generator distributions under the decomposed generator cost
//! `Σ JSD(pᵢ‖p_gᵢ) + (N λ / 2) JSD(p_g₁..p_g_N)`, traced over a grid of λ.

use serde::Serialize;

use super::divergence::{jsd, jsd_n, same_support, DiscreteDist};
use crate::error::{Error, Result};
use crate::numkit::Rng;

pub const MAX_SUPPORT: usize = 8;
pub const MAX_PARTS: usize = 3;

/// Iterates stay at least this far inside the simplex so every log is finite.
const FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffOptions {
    pub restarts: usize,
    /// Converged once the projected-gradient residual `‖q − Π(q − ∇F)‖_∞` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for TradeoffOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            tol: 1e-8,
            max_iter: 200_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub lambda: f64,
    /// `Σ JSD(pᵢ‖p_gᵢ*)`.
    pub fidelity: f64,
    /// `JSD(p_g₁*..p_g_N*)`.
    pub spread: f64,
    pub objective: f64,
    pub generators: Vec<DiscreteDist>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    /// λ values whose best restart did not converge; left out of `points`.
    pub omitted: Vec<f64>,
}

/// The decomposed generator objective at λ.
pub fn tradeoff_objective(p: &[DiscreteDist], pg: &[DiscreteDist], lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for (pi, gi) in p.iter().zip(pg) {
        total += jsd(pi, gi)?;
    }
    Ok(total + 0.5 * p.len() as f64 * lambda * jsd_n(pg)?)
}

struct Problem<'a> {
    p: &'a [DiscreteDist],
    n: usize,
    m: usize,
    lambda: f64,
}

fn xlogy_ratio(x: f64, num: f64, den: f64) -> f64 {
    if x > 0.0 {
        x * (num / den).ln()
    } else {
        0.0
    }
}

impl Problem<'_> {
    fn value(&self, q: &[f64]) -> f64 {
        let (n, m) = (self.n, self.m);
        let mut fidelity = 0.0;
        for i in 0..n {
            for k in 0..m {
                let (a, b) = (self.p[i].probs()[k], q[i * m + k]);
                let mid = 0.5 * (a + b);
                fidelity += 0.5 * (xlogy_ratio(a, a, mid) + xlogy_ratio(b, b, mid));
            }
        }
        let mut spread = 0.0;
        for k in 0..m {
            let mean = (0..n).map(|i| q[i * m + k]).sum::<f64>() / n as f64;
            for i in 0..n {
                spread += xlogy_ratio(q[i * m + k], q[i * m + k], mean);
            }
        }
        spread /= n as f64;
        fidelity + 0.5 * n as f64 * self.lambda * spread
    }

    fn gradient(&self, q: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        for k in 0..m {
            let mean = (0..n).map(|i| q[i * m + k]).sum::<f64>() / n as f64;
            for i in 0..n {
                let b = q[i * m + k];
                let mid = 0.5 * (self.p[i].probs()[k] + b);
                out[i * m + k] = 0.5 * (b / mid).ln() + 0.5 * self.lambda * (b / mean).ln();
            }
        }
    }

    /// `‖q − Π(q − ∇F(q))‖_∞`, zero exactly at constrained stationary points.
    fn stationarity(&self, q: &[f64], scratch: &mut [f64]) -> f64 {
        self.gradient(q, scratch);
        for (s, &v) in scratch.iter_mut().zip(q) {
            *s = v - *s;
        }
        self.project(scratch);
        scratch.iter().zip(q).map(|(s, v)| (s - v).abs()).fold(0.0, f64::max)
    }

    fn project(&self, q: &mut [f64]) {
        for block in q.chunks_exact_mut(self.m) {
            project_simplex(block, FLOOR);
        }
    }
}

/// Euclidean projection onto `{x : x ≥ floor, Σx = 1}`.
fn project_simplex(x: &mut [f64], floor: f64) {
    let mass = 1.0 - floor * x.len() as f64;
    let mut sorted: Vec<f64> = x.iter().map(|v| v - floor).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - mass) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - floor - theta).max(0.0) + floor;
    }
}

/// Accelerated projected gradient with gradient-based backtracking and
/// restart. Only gradients steer the search: near the optimum the objective is
/// flat to within rounding, while its gradient still resolves the iterate.
fn minimize(problem: &Problem, start: Vec<f64>, opts: &TradeoffOptions) -> (Vec<f64>, f64, bool) {
    let len = start.len();
    let mut x = start;
    problem.project(&mut x);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut lip = 1.0;
    let mut g = vec![0.0; len];
    let mut gc = vec![0.0; len];
    let mut cand = vec![0.0; len];
    for _ in 0..opts.max_iter {
        problem.gradient(&y, &mut g);
        loop {
            for j in 0..len {
                cand[j] = y[j] - g[j] / lip;
            }
            problem.project(&mut cand);
            problem.gradient(&cand, &mut gc);
            let (mut curv, mut norm) = (0.0, 0.0);
            for j in 0..len {
                let d = cand[j] - y[j];
                curv += (gc[j] - g[j]) * d;
                norm += d * d;
            }
            if curv <= lip * norm || lip > 1e18 {
                break;
            }
            lip *= 2.0;
        }
        let overshoot: f64 = (0..len).map(|j| (y[j] - cand[j]) * (cand[j] - x[j])).sum();
        if overshoot > 0.0 {
            t = 1.0;
            y.copy_from_slice(&cand);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for j in 0..len {
                y[j] = cand[j] + beta * (cand[j] - x[j]);
            }
            problem.project(&mut y);
            t = t_next;
        }
        x.copy_from_slice(&cand);
        if problem.stationarity(&x, &mut g) < opts.tol {
            return (x.clone(), problem.value(&x), true);
        }
        lip = (lip * 0.9).max(1e-12);
    }
    let fx = problem.value(&x);
    (x, fx, false)
}

/// For each λ, minimizes the decomposed objective over the product of simplices
/// (best of `opts.restarts` random starts) and reports fidelity and spread.
pub fn lemma1_tradeoff_curve(p: &[DiscreteDist], lambdas: &[f64], opts: &TradeoffOptions) -> Result<TradeoffCurve> {
    let m = same_support(p)?;
    let n = p.len();
    if !(2..=MAX_PARTS).contains(&n) || m > MAX_SUPPORT {
        return Err(Error::contract(format!(
            "tradeoff curve supports 2..={MAX_PARTS} parts over at most {MAX_SUPPORT} outcomes (got N={n}, M={m})"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::contract("at least one restart is required"));
    }
    let root = Rng::new(opts.seed);
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    for &lambda in lambdas {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::contract(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        let problem = Problem { p, n, m, lambda };
        let mut rng = root.substream(&format!("lambda={lambda:e}"));
        let mut best: Option<(Vec<f64>, f64, bool)> = None;
        for _ in 0..opts.restarts {
            let start: Vec<f64> = (0..n)
                .flat_map(|_| {
                    let w: Vec<f64> = (0..m).map(|_| -rng.uniform().max(1e-300).ln()).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(move |v| v / s)
                })
                .collect();
            let run = minimize(&problem, start, opts);
            if best.as_ref().is_none_or(|b| run.1 < b.1) {
                best = Some(run);
            }
        }
        let (q, objective, converged) = best.expect("restarts > 0");
        if !converged {
            omitted.push(lambda);
            continue;
        }
        let generators: Vec<DiscreteDist> = q.chunks_exact(m).map(|c| DiscreteDist::from_raw(c.to_vec())).collect();
        let mut fidelity = 0.0;
        for (pi, gi) in p.iter().zip(&generators) {
            fidelity += jsd(pi, gi)?;
        }
        points.push(TradeoffPoint {
            lambda,
            fidelity,
            spread: jsd_n(&generators)?,
            objective,
            generators,
        });
    }
    Ok(TradeoffCurve { points, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> DiscreteDist {
        DiscreteDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn projection_lands_on_simplex() {
        let mut x = vec![0.9, 0.8, -0.3];
        project_simplex(&mut x, 0.0);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((x[0] - 0.55).abs() < 1e-15 && (x[1] - 0.45).abs() < 1e-15 && x[2] == 0.0);
    }

    #[test]
    fn identical_parts_have_zero_spread() {
        let p = d(&[0.1, 0.2, 0.3, 0.4]);
        let c = lemma1_tradeoff_curve(&[p.clone(), p.clone()], &[0.1, 1.0, 10.0], &TradeoffOptions::default()).unwrap();
        assert!(c.omitted.is_empty());
        for pt in &c.points {
            assert!(pt.spread < 1e-10, "{pt:?}");
            assert!(pt.fidelity < 1e-10);
        }
    }

    #[test]
    fn huge_lambda_collapses_spread() {
        let p = [d(&[0.7, 0.2, 0.1]), d(&[0.1, 0.3, 0.6])];
        let c = lemma1_tradeoff_curve(&p, &[1e6], &TradeoffOptions::default()).unwrap();
        assert_eq!(c.points.len(), 1, "{:?}", c.omitted);
        assert!(c.points[0].spread < 1e-3);
    }

    #[test]
    fn matches_grid_search_on_two_outcomes() {
        let p = [d(&[1.0, 0.0]), d(&[0.0, 1.0])];
        let lambdas = [0.1, 1.0, 10.0, 100.0];
        let c = lemma1_tradeoff_curve(&p, &lambdas, &TradeoffOptions::default()).unwrap();
        assert!(c.omitted.is_empty(), "{:?}", c.omitted);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        for (pt, &lambda) in c.points.iter().zip(&lambdas) {
            let mut best = f64::INFINITY;
            for &u in &grid {
                for &v in &grid {
                    let g = [d(&[u, 1.0 - u]), d(&[v, 1.0 - v])];
                    best = best.min(tradeoff_objective(&p, &g, lambda).unwrap());
                }
            }
            assert!(
                (pt.objective - best).abs() < 1e-4,
                "λ={lambda}: {} vs grid {best}",
                pt.objective
            );
            assert!(pt.objective <= best + 1e-12);
        }
        for w in c.points.windows(2) {
            assert!(w[1].spread <= w[0].spread + 1e-9);
            assert!(w[1].fidelity >= w[0].fidelity - 1e-9);
        }
    }

    #[test]
    fn rejects_oversized_problems() {
        let p = DiscreteDist::uniform(9);
        assert!(lemma1_tradeoff_curve(&[p.clone(), p], &[1.0], &TradeoffOptions::default()).is_err());
        let p = DiscreteDist::uniform(2);
        assert!(lemma1_tradeoff_curve(&vec![p; 4], &[1.0], &TradeoffOptions::default()).is_err());
    }
}
