//! Closed-form results on small discrete distributions, each next to the
//! brute-force or direct computation it should match.

use privgan_lab::theory::{
    brute_force_adversary, c_lambda, c_lambda_direct, c_lambda_minimum, lemma1_tradeoff_curve, optimal_adversary, tvd,
    AdversarySetup, DiscreteDist, TradeoffOptions,
};

fn main() -> privgan_lab::Result<()> {
    let p = DiscreteDist::new(vec![0.5, 0.3, 0.2])?;
    let q = DiscreteDist::new(vec![0.2, 0.2, 0.6])?;
    for f in [0.1, 0.5, 0.9] {
        let setup = AdversarySetup::new(p.clone(), q.clone(), f)?;
        let closed = optimal_adversary(&setup);
        let brute = brute_force_adversary(&setup)?;
        println!(
            "f = {f}: payoff {:.6} (exhaustive {:.6}), decision {:?}",
            closed.expected_payoff, brute.expected_payoff, closed.delta
        );
    }
    println!("TVD(P, Q) = {:.6}", tvd(&p, &q)?);

    let parts = vec![p.clone(), q.clone()];
    for lambda in [0.1, 1.0, 10.0] {
        println!(
            "lambda {lambda:>4}: C at p_g = p {:.6} (direct sum {:.6}), global minimum {:.6}",
            c_lambda(&parts, &parts, lambda)?,
            c_lambda_direct(&parts, &parts, lambda)?,
            c_lambda_minimum(2, lambda)
        );
    }

    let disjoint = [DiscreteDist::new(vec![1.0, 0.0])?, DiscreteDist::new(vec![0.0, 1.0])?];
    let curve = lemma1_tradeoff_curve(&disjoint, &[0.1, 1.0, 10.0, 100.0], &TradeoffOptions::default())?;
    for pt in &curve.points {
        println!(
            "lambda {:>5}: fidelity {:.4}  spread {:.4}",
            pt.lambda, pt.fidelity, pt.spread
        );
    }
    Ok(())
}
