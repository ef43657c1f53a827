//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod support;

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use privgan_lab::data::Dataset;
use privgan_lab::experiment::{
    run_experiment, run_seed, run_sweep, run_utility, sha256_hex, ExperimentConfig, SeedMetrics, SweepAxis, UtilitySpec,
};
use privgan_lab::numkit::{
    adam_step, bce_loss, categorical_ce_loss, Activation, AdamConfig, AdamState, Matrix, MlpModel, Rng,
};
use privgan_lab::theory::{
    brute_force_adversary, c_lambda, lemma1_tradeoff_curve, optimal_adversary, optimal_pair_discriminator,
    optimal_privacy_discriminator, tvd, AdversarySetup, DiscreteDist, TradeoffOptions,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_dist(rng: &mut Rng, m: usize) -> DiscreteDist {
    let w: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
    let s: f64 = w.iter().sum();
    DiscreteDist::new(w.iter().map(|v| v / s).collect()).unwrap()
}

/// Random (P, Q, f) instances, every tenth with P = Q.
fn adversary_instances(count: usize, seed: u64) -> Vec<AdversarySetup> {
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|i| {
            let m = 1 + rng.below(12);
            let f = [0.1, 0.5, 0.9][rng.below(3)];
            let p = random_dist(&mut rng, m);
            let q = if i % 10 == 0 {
                p.clone()
            } else {
                random_dist(&mut rng, m)
            };
            AdversarySetup::new(p, q, f).unwrap()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for setup in adversary_instances(200, 1) {
        let closed = optimal_adversary(&setup).expected_payoff;
        let brute = brute_force_adversary(&setup)
            .map_err(|e| e.to_string())?
            .expected_payoff;
        worst = worst.max((closed - brute).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-12 && secs < 5.0,
        format!("max |diff| {worst:e} over 200 instances in {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = Rng::new(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = 1 + rng.below(12);
        let (p, q) = (random_dist(&mut rng, m), random_dist(&mut rng, m));
        let setup = AdversarySetup::new(p.clone(), q.clone(), 0.5).unwrap();
        let d = tvd(&p, &q).map_err(|e| e.to_string())?;
        worst = worst.max((optimal_adversary(&setup).expected_payoff - d).abs());
    }
    ensure(
        worst < 1e-12,
        format!("max |payoff - tvd| {worst:e} over 100 instances"),
    )
}

fn criterion_3() -> Outcome {
    let mut below = 0.0f64;
    let mut equal_gap = 0.0f64;
    let mut equal_cases = 0;
    for setup in adversary_instances(300, 3) {
        let payoff = optimal_adversary(&setup).expected_payoff;
        let floor = (2.0 * setup.f - 1.0).abs();
        below = below.max(floor - payoff);
        if setup.p == setup.q {
            equal_cases += 1;
            equal_gap = equal_gap.max((payoff - floor).abs());
        }
    }
    ensure(
        below < 1e-12 && equal_gap < 1e-12,
        format!("worst shortfall {below:e}; P = Q gap {equal_gap:e} over {equal_cases} cases"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = Rng::new(4);
    let mut worst = 0.0f64;
    let mut smallest_rise = f64::INFINITY;
    for n in [2usize, 3] {
        for lambda in [0.1, 1.0, 10.0] {
            let data = DiscreteDist::new({
                let w: Vec<f64> = (0..5).map(|_| 0.1 + rng.uniform()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .unwrap();
            let p = vec![data.clone(); n];
            let base = c_lambda(&p, &p, lambda).map_err(|e| e.to_string())?;
            let expect = -(n as f64) * (4f64.ln() + lambda * (n as f64).ln());
            worst = worst.max((base - expect).abs());
            for _ in 0..50 {
                let mut pg = p.clone();
                let i = rng.below(n);
                let other = random_dist(&mut rng, 5);
                let t = rng.uniform_range(0.05, 0.5);
                let mixed: Vec<f64> = pg[i]
                    .probs()
                    .iter()
                    .zip(other.probs())
                    .map(|(a, b)| (1.0 - t) * a + t * b)
                    .collect();
                pg[i] = DiscreteDist::new(mixed).unwrap();
                let v = c_lambda(&p, &pg, lambda).map_err(|e| e.to_string())?;
                smallest_rise = smallest_rise.min(v - base);
            }
        }
    }
    ensure(
        worst < 1e-9 && smallest_rise > 0.0,
        format!("max |C - closed form| {worst:e}; smallest rise under perturbation {smallest_rise:e}"),
    )
}

/// Full-batch Adam on one-hot inputs with per-row weights; returns the model
/// once every parameter gradient is negligible.
fn fit_weighted(mut model: MlpModel, x: &Matrix, weights: &[f64], loss: impl Fn(&Matrix) -> Matrix) -> MlpModel {
    let mut opt = AdamState::for_model(
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            ..AdamConfig::default()
        },
        &model,
    )
    .unwrap();
    let rows = x.rows() as f64;
    for _ in 0..20_000 {
        let (pred, cache) = model.forward(x).unwrap();
        let mut g = loss(&pred);
        for (r, w) in weights.iter().enumerate() {
            for v in g.row_mut(r) {
                *v *= w * rows;
            }
        }
        let grads = model.backward_logits(&cache, &g).unwrap();
        let largest = grads
            .weights
            .iter()
            .chain(&grads.biases)
            .flat_map(|m| m.data())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if largest < 1e-9 {
            break;
        }
        adam_step(&mut model, &grads, &mut opt).unwrap();
    }
    model
}

fn one_hots(m: usize, times: usize) -> Matrix {
    let mut x = Matrix::zeros(m * times, m);
    for r in 0..m * times {
        x.set(r, r % m, 1.0);
    }
    x
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let m = 8;
    let mut rng = Rng::new(5);
    let positive = |rng: &mut Rng| {
        let w: Vec<f64> = (0..m).map(|_| 0.2 + rng.uniform()).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let (p, g) = (positive(&mut rng), positive(&mut rng));

    // rows 0..m are real outcomes, m..2m generated ones
    let x = one_hots(m, 2);
    let targets = Matrix::from_vec(2 * m, 1, (0..2 * m).map(|r| if r < m { 1.0 } else { 0.0 }).collect()).unwrap();
    let weights: Vec<f64> = p.iter().chain(&g).map(|v| v / 2.0).collect();
    let init = MlpModel::new(&[m, 16, 1], &[Activation::leaky(), Activation::Sigmoid], &mut rng).unwrap();
    let d = fit_weighted(init, &x, &weights, |pred| bce_loss(pred, &targets).unwrap().grad_logits);
    let fitted = d.predict(&one_hots(m, 1)).unwrap();
    let library = optimal_pair_discriminator(
        &DiscreteDist::new(p.clone()).unwrap(),
        &DiscreteDist::new(g.clone()).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let mut d_gap = 0.0f64;
    let mut lib_gap = 0.0f64;
    for k in 0..m {
        let ideal = p[k] / (p[k] + g[k]);
        d_gap = d_gap.max((fitted.get(k, 0) - ideal).abs());
        lib_gap = lib_gap.max((library[k].unwrap() - ideal).abs());
    }

    let (g1, g2) = (positive(&mut rng), positive(&mut rng));
    let x = one_hots(m, 2);
    let labels: Vec<usize> = (0..2 * m).map(|r| r / m).collect();
    let weights: Vec<f64> = g1.iter().chain(&g2).map(|v| v / 2.0).collect();
    let init = MlpModel::new(&[m, 16, 2], &[Activation::leaky(), Activation::Softmax], &mut rng).unwrap();
    let dp = fit_weighted(init, &x, &weights, |pred| {
        categorical_ce_loss(pred, &labels).unwrap().grad_logits
    });
    let fitted = dp.predict(&one_hots(m, 1)).unwrap();
    let library = optimal_privacy_discriminator(&[
        DiscreteDist::new(g1.clone()).unwrap(),
        DiscreteDist::new(g2.clone()).unwrap(),
    ])
    .map_err(|e| e.to_string())?;
    let mut dp_gap = 0.0f64;
    for k in 0..m {
        let ideal = [g1[k] / (g1[k] + g2[k]), g2[k] / (g1[k] + g2[k])];
        let lib = library[k].as_ref().unwrap();
        for j in 0..2 {
            dp_gap = dp_gap.max((fitted.get(k, j) - ideal[j]).abs());
            lib_gap = lib_gap.max((lib[j] - ideal[j]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        d_gap < 0.02 && dp_gap < 0.02 && lib_gap < 1e-12 && secs < 60.0,
        format!("D gap {d_gap:.2e}, D_p gap {dp_gap:.2e}, closed-form gap {lib_gap:e}, {secs:.1}s"),
    )
}

/// Jensen-Shannon divergence with 0 log 0 = 0, computed from scratch.
fn jsd_ref(a: &[f64], b: &[f64]) -> f64 {
    let kl = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .filter(|(u, _)| **u > 0.0)
            .map(|(u, v)| u * (u / v).ln())
            .sum()
    };
    let mid: Vec<f64> = a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect();
    0.5 * kl(a, &mid) + 0.5 * kl(b, &mid)
}

fn criterion_6() -> Outcome {
    let p = [[1.0, 0.0], [0.0, 1.0]];
    let dists: Vec<DiscreteDist> = p.iter().map(|v| DiscreteDist::new(v.to_vec()).unwrap()).collect();
    let lambdas = [0.1, 1.0, 10.0, 100.0];
    let curve = lemma1_tradeoff_curve(&dists, &lambdas, &TradeoffOptions::default()).map_err(|e| e.to_string())?;
    if !curve.omitted.is_empty() {
        return Err(format!("optimizer did not converge at {:?}", curve.omitted));
    }
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let mut worst = 0.0f64;
    let mut spreads = Vec::new();
    for (pt, &lambda) in curve.points.iter().zip(&lambdas) {
        let mut best = f64::INFINITY;
        for &u in &grid {
            for &v in &grid {
                let (g1, g2) = ([u, 1.0 - u], [v, 1.0 - v]);
                let obj = jsd_ref(&p[0], &g1) + jsd_ref(&p[1], &g2) + lambda * jsd_ref(&g1, &g2);
                best = best.min(obj);
            }
        }
        worst = worst.max((pt.objective - best).abs());
        let g = &pt.generators;
        spreads.push(jsd_ref(g[0].probs(), g[1].probs()));
    }
    let monotone = spreads.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    ensure(
        monotone && worst < 1e-4,
        format!("spread over λ {spreads:.4?}; max |optimizer - grid| {worst:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = Rng::new(7);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for hidden in support::hidden_activations() {
        for head in support::HEADS {
            for _ in 0..20 {
                let (widths, batch) = support::random_shape(&mut rng, head);
                let seed = rng.below(1 << 30) as u64;
                worst = worst.max(support::rel_error_of(seed, hidden, head, &widths, batch));
                checks += 1;
            }
        }
    }
    ensure(
        worst < support::TOL,
        format!("max relative error {worst:.2e} over {checks} configs"),
    )
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Loads a shipped config, redirects its output and drops the utility stage.
fn load_config(name: &str, out: &Path) -> (ExperimentConfig, Option<UtilitySpec>) {
    let (mut cfg, _) = ExperimentConfig::load(&config_path(name)).unwrap();
    cfg.output_dir = out.to_path_buf();
    let utility = cfg.utility.take();
    (cfg, utility)
}

struct DigitsRuns {
    _scratch: tempfile::TempDir,
    gan: Vec<SeedMetrics>,
    /// Indexed by λ ∈ {0.1, 1, 10}.
    privgan: [Vec<SeedMetrics>; 3],
    f: f64,
    minutes: f64,
    gan_cfg: ExperimentConfig,
    privgan_cfg: ExperimentConfig,
    gan_utility: Option<UtilitySpec>,
    privgan_utility: Option<UtilitySpec>,
}

const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

fn digits_runs() -> DigitsRuns {
    let start = Instant::now();
    let scratch = tempfile::tempdir().unwrap();
    let (gan_cfg, gan_utility) = load_config("digits-gan.toml", &scratch.path().join("gan"));
    let bytes = gan_cfg.to_toml().unwrap();
    let gan = run_experiment(&gan_cfg, bytes.as_bytes())
        .unwrap()
        .into_iter()
        .map(|o| o.metrics)
        .collect();
    let (privgan_cfg, privgan_utility) = load_config("digits-privgan.toml", &scratch.path().join("privgan"));
    let sweep = run_sweep(&privgan_cfg, SweepAxis::Lambda, &LAMBDAS).unwrap();
    let privgan = LAMBDAS.map(|l| {
        sweep
            .rows
            .iter()
            .filter(|r| r.value == l)
            .map(|r| r.metrics.clone())
            .collect()
    });
    DigitsRuns {
        _scratch: scratch,
        gan,
        privgan,
        f: gan_cfg.split.f,
        minutes: start.elapsed().as_secs_f64() / 60.0,
        gan_cfg,
        privgan_cfg,
        gan_utility,
        privgan_utility,
    }
}

fn median_of(runs: &[SeedMetrics], pick: impl Fn(&SeedMetrics) -> Option<f64>) -> f64 {
    let mut v: Vec<f64> = runs.iter().map(|m| pick(m).expect("metric present")).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_8(r: &DigitsRuns) -> Outcome {
    let gan = median_of(&r.gan, |m| m.whitebox);
    let priv_ = median_of(&r.privgan[1], |m| m.whitebox);
    ensure(
        gan >= 1.5 * priv_ && priv_ <= 2.5 * r.f && r.minutes < 30.0,
        format!(
            "median white-box GAN {gan:.4} vs privGAN {priv_:.4} (ratio {:.2}, cap {:.2}); digits runs {:.1} min",
            gan / priv_,
            2.5 * r.f,
            r.minutes
        ),
    )
}

fn criterion_9(r: &DigitsRuns) -> Outcome {
    let gan = median_of(&r.gan, |m| m.tvd);
    let priv_ = median_of(&r.privgan[1], |m| m.tvd);
    ensure(gan > priv_, format!("median TVD GAN {gan:.4} vs privGAN {priv_:.4}"))
}

fn criterion_10(r: &DigitsRuns) -> Outcome {
    let gan = median_of(&r.gan, |m| m.mc);
    let priv_ = median_of(&r.privgan[1], |m| m.mc);
    ensure(
        gan >= priv_ && gan >= 0.45 && priv_ >= 0.45,
        format!("median MC set accuracy GAN {gan:.3} vs privGAN {priv_:.3}"),
    )
}

fn criterion_11(r: &DigitsRuns) -> Outcome {
    let med: Vec<f64> = r.privgan.iter().map(|runs| median_of(runs, |m| m.whitebox)).collect();
    ensure(
        med[2] < med[0],
        format!("median white-box at λ = 0.1, 1, 10: {med:.4?}"),
    )
}

fn criterion_12(r: &DigitsRuns) -> Outcome {
    let data = Dataset::digits();
    let downstream = |base: &ExperimentConfig, utility: &Option<UtilitySpec>| -> Vec<f64> {
        let cfg = ExperimentConfig {
            utility: utility.clone(),
            ..base.clone()
        };
        (0..3u64)
            .map(|seed| {
                run_utility(&cfg, &data, seed)
                    .unwrap()
                    .expect("utility section")
                    .downstream_accuracy
            })
            .collect()
    };
    let med = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[1]
    };
    let gan = med(downstream(&r.gan_cfg, &r.gan_utility));
    let priv_ = med(downstream(&r.privgan_cfg, &r.privgan_utility));
    ensure(
        priv_ >= 0.9 * gan,
        format!(
            "median downstream accuracy GAN {gan:.4} vs privGAN {priv_:.4} (ratio {:.3})",
            priv_ / gan
        ),
    )
}

fn criterion_13(r: &DigitsRuns) -> Outcome {
    let files = ["checkpoint.json", "attack_report.json", "histogram.csv"];
    let hash = |dir: &Path| -> Vec<String> {
        files
            .iter()
            .map(|f| sha256_hex(&std::fs::read(dir.join(f)).unwrap()))
            .collect()
    };
    let data = Dataset::digits();
    let mut compared = 0;
    for (cfg, label) in [
        (r.gan_cfg.clone(), "gan"),
        (SweepAxis::Lambda.apply(&r.privgan_cfg, 1.0).unwrap(), "privgan"),
    ] {
        let dir = cfg.output_dir.join("seed-0");
        let before = hash(&dir);
        let bytes = cfg.to_toml().unwrap();
        let outcome = run_seed(&cfg, bytes.as_bytes(), &data, 0).unwrap();
        let after = hash(&outcome.dir);
        if before != after {
            return Err(format!("{label} seed 0 changed on re-run: {before:?} vs {after:?}"));
        }
        compared += files.len();
    }
    Ok(format!("{compared} artifact hashes identical across re-runs"))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, outcome: std::thread::Result<Outcome>| {
        let (status, detail) = match outcome {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(p) => (
                "FAIL",
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()),
            ),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {n}: {status} {detail}");
    };
    let quick: [fn() -> Outcome; 7] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
    ];
    for (i, c) in quick.iter().enumerate() {
        report(i + 1, panic::catch_unwind(c));
    }
    match panic::catch_unwind(digits_runs) {
        Ok(runs) => {
            let slow: [fn(&DigitsRuns) -> Outcome; 6] = [
                criterion_8,
                criterion_9,
                criterion_10,
                criterion_11,
                criterion_12,
                criterion_13,
            ];
            for (i, c) in slow.iter().enumerate() {
                report(i + 8, panic::catch_unwind(AssertUnwindSafe(|| c(&runs))));
            }
        }
        Err(_) => {
            for n in 8..=13 {
                report(n, Ok(Err("digits experiment runs failed".into())));
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
