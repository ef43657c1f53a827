//! Optimal discriminators for fixed generators and the resulting generator
//! cost `C_λ`, on finite supports.

use serde::Serialize;

use super::divergence::{jsd, jsd_n, same_support, DiscreteDist};
use crate::error::{Error, Result};

/// Pointwise optimal discriminator values. `None` marks support points where
/// every density in the ratio is zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalDiscriminators {
    /// `Dᵢ*(x) = pᵢ / (pᵢ + p_gᵢ)`.
    pub d_i: Vec<Option<f64>>,
    /// `(D_p^j)*(x) = p_gⱼ / Σₖ p_gₖ`, one row per support point.
    pub d_p: Vec<Option<Vec<f64>>>,
}

pub fn optimal_pair_discriminator(p_i: &DiscreteDist, p_gi: &DiscreteDist) -> Result<Vec<Option<f64>>> {
    same_support(&[p_i.clone(), p_gi.clone()])?;
    Ok(p_i
        .probs()
        .iter()
        .zip(p_gi.probs())
        .map(|(&a, &b)| (a + b > 0.0).then(|| a / (a + b)))
        .collect())
}

pub fn optimal_privacy_discriminator(all_pg: &[DiscreteDist]) -> Result<Vec<Option<Vec<f64>>>> {
    let m = same_support(all_pg)?;
    Ok((0..m)
        .map(|k| {
            let total: f64 = all_pg.iter().map(|g| g.probs()[k]).sum();
            (total > 0.0).then(|| all_pg.iter().map(|g| g.probs()[k] / total).collect())
        })
        .collect())
}

/// Both optimal discriminators for pair `i`, where `p_gi` is one of `all_pg`.
pub fn optimal_discriminators(
    p_i: &DiscreteDist,
    p_gi: &DiscreteDist,
    all_pg: &[DiscreteDist],
) -> Result<OptimalDiscriminators> {
    if !all_pg.contains(p_gi) {
        return Err(Error::contract("p_gi must be one of the generator distributions"));
    }
    Ok(OptimalDiscriminators {
        d_i: optimal_pair_discriminator(p_i, p_gi)?,
        d_p: optimal_privacy_discriminator(all_pg)?,
    })
}

fn check_cost_inputs(p: &[DiscreteDist], pg: &[DiscreteDist], lambda: f64) -> Result<()> {
    if p.len() != pg.len() || p.len() < 2 {
        return Err(Error::contract(format!(
            "need N >= 2 partition/generator pairs, got {} and {}",
            p.len(),
            pg.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::contract(format!("lambda must be non-negative, got {lambda}")));
    }
    let all: Vec<DiscreteDist> = p.iter().chain(pg).cloned().collect();
    same_support(&all)?;
    Ok(())
}

/// The minimum of `C_λ` over generators: `−N (log 4 + λ log N)`.
pub fn c_lambda_minimum(n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    -n * (4f64.ln() + lambda * n.ln())
}

/// `C_λ` via `Σ 2·JSD(pᵢ‖p_gᵢ) + N λ JSD(p_g₁..p_g_N) − N (log 4 + λ log N)`.
pub fn c_lambda(p: &[DiscreteDist], pg: &[DiscreteDist], lambda: f64) -> Result<f64> {
    check_cost_inputs(p, pg, lambda)?;
    let n = p.len();
    let mut fidelity = 0.0;
    for (pi, gi) in p.iter().zip(pg) {
        fidelity += 2.0 * jsd(pi, gi)?;
    }
    Ok(fidelity + n as f64 * lambda * jsd_n(pg)? + c_lambda_minimum(n, lambda))
}

/// `C_λ` by direct summation of the value function at the optimal discriminators:
/// `Σᵢ E_{pᵢ}[log Dᵢ*] + E_{p_gᵢ}[log(1 − Dᵢ*)] + λ E_{p_gᵢ}[log D_p^{i*}]`.
pub fn c_lambda_direct(p: &[DiscreteDist], pg: &[DiscreteDist], lambda: f64) -> Result<f64> {
    check_cost_inputs(p, pg, lambda)?;
    let d_p = optimal_privacy_discriminator(pg)?;
    let mut total = 0.0;
    for (i, (pi, gi)) in p.iter().zip(pg).enumerate() {
        let d_i = optimal_pair_discriminator(pi, gi)?;
        for k in 0..pi.len() {
            let (a, b) = (pi.probs()[k], gi.probs()[k]);
            if let Some(d) = d_i[k] {
                if a > 0.0 {
                    total += a * d.ln();
                }
                if b > 0.0 {
                    total += b * (1.0 - d).ln();
                }
            }
            if b > 0.0 {
                let row = d_p[k].as_ref().expect("p_gi > 0 implies a defined D_p row");
                total += lambda * b * row[i].ln();
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> DiscreteDist {
        DiscreteDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_cases() {
        let p = d(&[0.1, 0.6, 0.3]);
        let di = optimal_pair_discriminator(&p, &p).unwrap();
        assert!(di.iter().all(|v| *v == Some(0.5)));
        let dp = optimal_privacy_discriminator(&[p.clone(), p.clone(), p.clone()]).unwrap();
        for row in dp {
            for v in row.unwrap() {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn formula_arithmetic() {
        let di = optimal_pair_discriminator(&d(&[0.9, 0.1]), &d(&[0.1, 0.9])).unwrap();
        assert!((di[0].unwrap() - 0.9).abs() < 1e-15);
        assert!((di[1].unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn undefined_points_flagged() {
        let di = optimal_pair_discriminator(&d(&[1.0, 0.0]), &d(&[1.0, 0.0])).unwrap();
        assert_eq!(di[1], None);
        let dp = optimal_privacy_discriminator(&[d(&[1.0, 0.0]), d(&[0.5, 0.5])]).unwrap();
        assert_eq!(dp[1].as_ref().unwrap(), &vec![0.0, 1.0]);
        let dp = optimal_privacy_discriminator(&[d(&[1.0, 0.0]), d(&[1.0, 0.0])]).unwrap();
        assert_eq!(dp[1], None);
    }

    #[test]
    fn minimum_for_two_pairs() {
        let p = d(&[0.25, 0.25, 0.5]);
        let ps = vec![p.clone(), p.clone()];
        let v = c_lambda(&ps, &ps, 1.0).unwrap();
        assert!((v - -2.0 * 8f64.ln()).abs() < 1e-12);
        assert!((v - -4.158883083359672).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = d(&[0.5, 0.5]);
        assert!(c_lambda(std::slice::from_ref(&p), std::slice::from_ref(&p), 1.0).is_err());
        assert!(c_lambda(&[p.clone(), p.clone()], &[p.clone(), d(&[1.0])], 1.0).is_err());
        assert!(optimal_discriminators(&p, &d(&[1.0, 0.0]), std::slice::from_ref(&p)).is_err());
    }
}
