//! Trains privGAN with two pairs and reports the value-function estimate
//! and how well the privacy discriminator separates the two parts.

use privgan_lab::data::{make_mixture, ring_centers};
use privgan_lab::models::{privgan_value, train_privgan, ArchSpec, PrivGanConfig};
use privgan_lab::numkit::Rng;

fn main() -> privgan_lab::Result<()> {
    let data = make_mixture(&mut Rng::new(1), 1000, &ring_centers(8, 0.8), 0.02)?;
    let arch = ArchSpec {
        latent_dim: 8,
        ..ArchSpec::new(2, &[64, 64], &[64, 64])
    };
    let config = PrivGanConfig {
        n: 2,
        lambda: 1.0,
        epochs: 150,
        dp_init_epochs: 20,
        co_train_delay: 40,
        batch_size: 64,
        lr: 1e-3,
        ..PrivGanConfig::default()
    };
    let (model, trace) = train_privgan(data.features(), &arch, &config)?;
    for rec in trace.epochs.iter().filter(|r| r.epoch % 30 == 0) {
        println!(
            "epoch {:>3}: G {:.3?}  D {:.3?}  D_p {:?}",
            rec.epoch, rec.gen_loss, rec.disc_loss, rec.dp_loss
        );
    }

    let parts: Vec<_> = model
        .partition
        .parts
        .iter()
        .map(|p| data.features().select_rows(p))
        .collect();
    let v = privgan_value(&model, &parts, &mut Rng::new(3), 2000)?;
    println!(
        "value: utility {:.4} + {} * privacy {:.4} = {:.4}",
        v.utility, v.lambda, v.privacy, v.total
    );

    let rows = model.partition.parts.concat();
    let labels: Vec<usize> = (0..2).flat_map(|j| vec![j; model.partition.part_size()]).collect();
    let acc = model.privacy_accuracy(&data.features().select_rows(&rows), &labels)?;
    println!("privacy discriminator accuracy on the real parts: {acc:.3}");
    Ok(())
}
