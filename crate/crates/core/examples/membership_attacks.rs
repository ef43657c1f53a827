//! Runs the white-box, TVD and Monte-Carlo set attacks against a GAN and a
//! privGAN trained on the same small training fraction of the digits.

use privgan_lab::attacks::{mc_set_accuracy, tvd_attack, whitebox_gan, whitebox_privgan, Aggregate, McAttackConfig};
use privgan_lab::data::{split, Dataset};
use privgan_lab::models::{disc_scores, train_gan, train_privgan, ArchSpec, GanConfig, PrivGanConfig};
use privgan_lab::numkit::Rng;

fn main() -> privgan_lab::Result<()> {
    let digits = Dataset::digits();
    let x = digits.features();
    let plan = split(digits.len(), 0.1, 0)?;
    let train = x.select_rows(&plan.train_indices);
    let truth = plan.membership();
    let arch = ArchSpec::new(x.cols(), &[128], &[128]);
    let privgan = PrivGanConfig {
        epochs: 150,
        batch_size: 32,
        ..PrivGanConfig::default()
    };
    let gan = GanConfig {
        epochs: 150,
        batch_size: 32,
        ..GanConfig::default()
    };
    let mc = McAttackConfig {
        n: 2000,
        ..McAttackConfig::default()
    };

    let (g, _) = train_gan(&train, &arch, &gan)?;
    let scores = disc_scores(&g, x)?;
    let wb = whitebox_gan(scores.data(), 0.1, &truth)?;
    let tvd = tvd_attack(
        &scores.select_rows(&plan.train_indices),
        &scores.select_rows(&plan.holdout_indices),
        20,
    )?;
    let mcr = mc_set_accuracy(&g, x, &plan, &mc, &Rng::new(1))?;
    println!(
        "GAN     white-box {:.3}  TVD {:.3}  MC {:.2}",
        wb.accuracy, tvd.score, mcr.accuracy
    );

    let (p, _) = train_privgan(&train, &arch, &privgan)?;
    let scores = disc_scores(&p, x)?;
    let wb = whitebox_privgan(&scores, 0.1, &truth, Aggregate::Max)?;
    let tvd = tvd_attack(
        &scores.select_rows(&plan.train_indices),
        &scores.select_rows(&plan.holdout_indices),
        20,
    )?;
    let mcr = mc_set_accuracy(&p, x, &plan, &mc, &Rng::new(1))?;
    println!(
        "privGAN white-box {:.3}  TVD {:.3}  MC {:.2}",
        wb.accuracy, tvd.score, mcr.accuracy
    );
    println!("white-box chance level: 0.100");
    Ok(())
}
